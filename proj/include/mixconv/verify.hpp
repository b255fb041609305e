#pragma once

// Independent checks on a solve: rigidity of the linear solution, the
// v(y) reformulation integrated separately, audits of the two first
// integrals and the type (a)/(b) partition of a gamma grid.

#include <string>
#include <string_view>
#include <vector>

#include "mixconv/shoot.hpp"

namespace mixconv {

enum class CheckStatus { Pass, Fail, Skipped };

std::string_view to_string(CheckStatus status);

struct CheckEntry {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double metric = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckEntry> checks;
  Params params;
  double gamma_star = 0.0;

  /// Throws Error(Domain) on a duplicate name or a Skipped entry without a
  /// reason.
  void add(CheckEntry entry);
  const CheckEntry* find(std::string_view name) const;
  /// No Fail entries (Skipped entries are ignored).
  bool passed() const;
};

// Looser than the solver tolerances so that a pass is not a restatement of
// the step-size control.
struct VerifyConfig {
  double lemma_tol = 1e-10;
  double identity_tol = 1e-8;
  double v_tol = 1e-4;
  double v_delta = 1e-3;
  double v_rtol = 1e-12;
  double v_atol = 1e-12;
  int partition_grid = 50;
  unsigned workers = 1;
};

/// Integrates from (f, f', f'')(0) = (alpha, 1, 0) and checks that
/// max(|f' - 1|, |f''|) <= lemma_tol on [0, t_max]. beta of `params` is
/// ignored.
CheckEntry check_lemma_vanish(const Params& params, const ShootConfig& cfg,
                              const VerifyConfig& vcfg);

/// max(|f' - 1|, |f''|) over [0, t_max] for the IVP from (alpha, 1, gamma0).
double linear_departure(const Params& params, double gamma0,
                        const IntegratorConfig& cfg);

struct VProfile {
  std::vector<double> y;
  std::vector<double> v;
  std::vector<double> vp;
};

/// Integrates v'' = (1+lambda) v v'^2 / sqrt(y) + 4 lambda (1 - sqrt(y)) v'^3
/// from y = beta^2 with v = alpha, v' = 1 / (2 gamma) and records v at the
/// requested abscissae (monotone, starting at beta^2 side). Uses a separate
/// Runge-Kutta implementation from the main integrator. Throws
/// Error(NumericalFailure) if v becomes non-finite.
VProfile integrate_v(const Params& params, double gamma,
                     const std::vector<double>& ys, const VerifyConfig& vcfg);

/// Compares v(f'(t)^2) with f(t) along the solved profile over
/// [beta^2, 1 - delta] (convex) or [1 + delta, beta^2] (concave). The
/// concave variant is an extension beyond the convex derivation and is
/// never a Fail on its own (Skipped with the measured gap instead).
CheckEntry check_v_equivalence(const ShootResult& result,
                               const VerifyConfig& vcfg);

/// Worst residuals of both first integrals along the profile. Two entries:
/// "identity_i1" and "identity_exp" (the latter in f'' units, Skipped when
/// the whole profile lies beyond the overflow horizon).
std::vector<CheckEntry> check_identities(const ShootResult& result,
                                         const ShootConfig& cfg,
                                         const VerifyConfig& vcfg);

struct PartitionOutcome {
  std::vector<double> gammas;
  std::vector<Classification> classes;
  bool single_threshold = false;
  // Last undershoot and first overshoot grid values in overshoot direction.
  double threshold_lo = 0.0;
  double threshold_hi = 0.0;
};

/// Classifies n_grid equally spaced gamma values across the verified
/// bracket. Throws Error(Domain) for n_grid < 10.
PartitionOutcome classify_grid(const Params& params, Mode mode, int n_grid,
                               const ShootConfig& cfg, unsigned workers);

/// Single undershoot/overshoot threshold (at most one side-less point at
/// the switch) containing gamma_star up to the bisection tolerance.
/// Violations are reported as Fail with the offending gamma values.
CheckEntry check_partition(const Params& params, Mode mode, int n_grid,
                           double gamma_star, const ShootConfig& cfg,
                           const VerifyConfig& vcfg);

/// Solve followed by every check.
VerificationReport run_verification(const Params& params,
                                    const ShootConfig& cfg,
                                    const VerifyConfig& vcfg);

}  // namespace mixconv
