#pragma once

// Shooting on gamma = f''(0).
//
// For 0 < beta < 1 (convex mode) a trajectory of the IVP either
//   (a) has f'' turning negative while f' < 1,
//   (b) reaches f' = 1 while f'' > 0, or
//   (c) keeps 0 < f' < 1 and f'' > 0 for all t.
// Small gamma gives (a), gamma above an explicit bound gives (b); both sets
// are open, so bisection between them converges to the type (c) solution.
// For beta > 1 (concave mode) the same holds with all signs mirrored and
// gamma < 0.

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "mixconv/integrate.hpp"
#include "mixconv/model.hpp"

namespace mixconv {

enum class Mode { Convex, Concave };

std::string_view to_string(Mode mode);

/// Convex for beta < 1, concave for beta > 1. Throws Error(Domain) for
/// beta == 1, which has the exact linear solution instead.
Mode mode_for(const Params& params);

enum class Tag { TypeA, TypeB, TypeC, BlowUp, Undetermined };

std::string_view to_string(Tag tag);

struct Classification {
  Tag tag = Tag::Undetermined;
  std::optional<double> t_event;
  AugState witness;
  StopKind stop = StopKind::ReachedHorizon;
  // |f'(t_end) - 1| for outcomes decided at the horizon.
  std::optional<double> tail_gap;
  std::string note;
};

struct ShootConfig {
  IntegratorConfig integrator;
  double gamma_abs_tol = 1e-12;
  double gamma_rel_tol = 1e-12;
  int max_iterations = 200;
  double tail_tol = 1e-6;
  // Tolerance on the sign invariants of the final profile.
  double invariant_slack = 1e-8;
  double seed = 1e-6;
  // Relative margin added to the analytic bracket bound.
  double bracket_margin = 0.1;
  int max_bracket_moves = 60;
  bool allow_lambda_zero = false;
};

/// The two events deciding between types (a) and (b). A non-zero slack
/// moves both thresholds outward, so only violations of the sign
/// invariants by more than `slack` trigger.
std::vector<EventSpec> mode_events(Mode mode, double slack = 0.0);

struct ClassifyOptions {
  double slack = 0.0;
  // Double the horizon (up to integrator.max_doublings times) while the
  // tail gap is above tail_tol.
  bool extend = true;
};

struct Probe {
  Classification cls;
  Trajectory traj;
};

/// Integrates with the mode's events and returns the deciding outcome
/// together with the trajectory.
///
/// Preconditions: convex mode needs 0 < beta <= 1 and gamma >= 0, concave
/// mode beta >= 1 and gamma <= 0; otherwise Error(Domain). beta = 1 is
/// admitted in both so the linear solution (gamma = 0) can be probed.
///
/// TypeC is returned only when the horizon is reached with no event and
/// the tail gap is within tail_tol. A crossing rejected by its guard means
/// f'' = 0 and f' = 1 at the same point, which forces the linear solution;
/// that and exhausted horizon doublings give Undetermined. BlowUp is
/// reported only if the i1 identity held up to the last step; otherwise
/// Error(NumericalFailure).
Probe probe(const Params& params, double gamma, Mode mode,
            const ShootConfig& cfg, ClassifyOptions opts = {});

Classification classify(const Params& params, double gamma, Mode mode,
                        const ShootConfig& cfg, ClassifyOptions opts = {});

/// Which side of gamma* a classification lies on. Overshoot means the
/// trajectory reached f' = 1 (type b). Undershoot covers type (a) and runs
/// that reach the horizon without reaching f' = 1 (for lambda = 0 there is
/// no type (a) and the slope saturates below 1). Blow-up, step underflow and
/// rejected crossings have no side.
enum class Side { Undershoot, Overshoot };

std::optional<Side> side_of(const Classification& cls);

/// gamma above which every convex trajectory reaches f' = 1:
///   (1 + lambda)(|alpha| - alpha beta) + sqrt(2 (3 lambda + 1)(1 - beta)).
double convex_gamma_bound(const Params& params);

/// gamma below which every concave trajectory reaches f' = 1:
///   -(1 + lambda)(alpha beta + |alpha| beta)
///     - beta sqrt(2 (3 lambda + 1)(beta - 1)).
double concave_gamma_bound(const Params& params);

double gamma_bound(const Params& params, Mode mode);

struct Bracket {
  double undershoot = 0.0;
  double overshoot = 0.0;
  Classification undershoot_cls;
  Classification overshoot_cls;
  double analytic_bound = 0.0;
  // Number of times each endpoint had to be moved before it verified.
  int undershoot_moves = 0;
  int overshoot_moves = 0;

  double lo() const { return std::min(undershoot, overshoot); }
  double hi() const { return std::max(undershoot, overshoot); }
};

/// Seed near gamma = 0 on the undershoot side and the analytic bound plus
/// margin on the overshoot side, both verified by classification. A
/// failing endpoint is moved geometrically (seed halved, bound doubled) up
/// to max_bracket_moves times before Error(BracketNotFound).
Bracket initial_bracket(const Params& params, Mode mode,
                        const ShootConfig& cfg);

struct TailDiagnostics {
  double limit = 0.0;
  double gap = 0.0;
  // Slope of log|f' - 1| against t over the last quarter of the samples.
  std::optional<double> decay_rate;
};

/// Requires a trajectory that reached its horizon (Error(Domain)) with at
/// least 8 samples in its last quarter (Error(InsufficientData)).
TailDiagnostics tail_diagnostics(const Trajectory& traj);

struct ResidualReport {
  double worst_i1 = 0.0;
  // Worst |i1| / (1 + largest term magnitude).
  double worst_i1_relative = 0.0;
  // Worst exp-identity residual divided by max(1, exp((1+lambda) F)), i.e.
  // in units of f''.
  double worst_exp_scaled = 0.0;
  // Last sample time at which the exp identity was evaluated.
  double exp_horizon = 0.0;
  std::size_t exp_skipped = 0;
  // Every sample within identity_bound for both identities.
  bool within_bound = true;
};

ResidualReport audit_residuals(const Trajectory& traj, const Params& params,
                               double gamma, const IntegratorConfig& cfg);

/// Bound on an identity residual whose largest term has magnitude `scale`:
/// 10 rtol (1 + scale).
double identity_bound(const IntegratorConfig& cfg, double scale);

enum class SolveStatus { Converged, ToleranceNotMet, MaxIterations, Undetermined };

std::string_view to_string(SolveStatus status);

struct ShootResult {
  Params params;
  std::optional<Mode> mode;  // empty on the beta = 1 path
  double gamma_star = 0.0;
  std::pair<double, double> bracket_final{0.0, 0.0};
  std::optional<Tag> lo_tag;
  std::optional<Tag> hi_tag;
  Trajectory profile;
  Classification final_cls;
  TailDiagnostics tail;
  ResidualReport residuals;
  int iterations = 0;
  SolveStatus status = SolveStatus::Converged;
  std::string note;
};

/// Bisects the verified bracket to width <= max(gamma_abs_tol,
/// gamma_rel_tol |gamma|) and certifies the midpoint as type (c) with the
/// invariant slack. For beta == 1 returns the exact linear solution with
/// gamma* = 0. Throws Error(Domain) on invalid parameters and
/// Error(BracketNotFound) when no bracket verifies.
ShootResult solve(const Params& params, const ShootConfig& cfg);

/// The exact linear solution sampled on [0, t_max].
Trajectory linear_profile(const Params& params, const IntegratorConfig& cfg);

}  // namespace mixconv
