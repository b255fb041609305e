#pragma once

// Adaptive Dormand-Prince 5(4) integration of the augmented IVP
//
//   (f, f', f'', F, I, J)(0) = (alpha, beta, gamma, 0, 0, 0)
//
// with event detection on the dense-output interpolant.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mixconv/model.hpp"

namespace mixconv {

struct IntegratorConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 1e-3;
  double h_min = 1e-14;
  double h_max = 0.25;
  // Finite stand-in for t -> infinity.
  double t_max = 50.0;
  // |f|, |f'| or |f''| above this is reported as finite-time blow-up.
  double blowup_cap = 1e8;
  // Past (1 + lambda) F > exp_cap the J accumulator is frozen.
  double exp_cap = kDefaultExpCap;
  int max_doublings = 4;
  // Consecutive samples differ by at most this much in f' (relative to
  // |f'| / 100 once |f'| exceeds 100).
  double max_slope_jump = 0.01;
  long max_steps = 5'000'000;

  /// Throws Error(Domain) on inconsistent settings.
  void validate() const;
};

enum class EventKind { SecondDerivZero, SlopeReachesOne };

std::string_view to_string(EventKind kind);

/// A sign change of f'' - offset (SecondDerivZero) or f' - 1 - offset
/// (SlopeReachesOne). `direction` is +1 for upward crossings, -1 for
/// downward ones and 0 for both. A crossing is accepted only if `guard`
/// (when set) holds at the localized crossing; otherwise it is recorded
/// as rejected and integration continues.
struct EventSpec {
  EventKind kind = EventKind::SecondDerivZero;
  int direction = 0;
  std::function<bool(const AugState&)> guard;
  double offset = 0.0;

  double value(const AugState& s) const;
  bool crosses(double before, double after) const;
};

enum class StopKind { ReachedHorizon, Event, BlowUp, StepUnderflow };

std::string_view to_string(StopKind kind);

struct StopReason {
  StopKind kind = StopKind::ReachedHorizon;
  double t = 0.0;
  std::optional<EventKind> event;
};

struct RejectedCrossing {
  EventKind kind;
  AugState state;
};

struct Trajectory {
  std::vector<AugState> samples;
  StopReason stop;
  double horizon = 0.0;
  int doublings = 0;
  std::vector<RejectedCrossing> rejected;
  // Step size to resume with.
  double next_h = 0.0;

  const AugState& back() const { return samples.back(); }
};

/// Dense output of one accepted step, the fourth-order continuous
/// extension of Dormand-Prince:
///   y(t0 + th h) = r0 + th (r1 + (1-th)(r2 + th (r3 + (1-th) r4))).
class DenseStep {
 public:
  DenseStep(double t0, double h, const std::array<StateVec, 5>& coeffs)
      : t0_(t0), h_(h), r_(coeffs) {}

  double t0() const { return t0_; }
  double t1() const { return t0_ + h_; }
  AugState at(double t) const;

 private:
  double t0_;
  double h_;
  std::array<StateVec, 5> r_;
};

struct EventHit {
  double t;
  AugState state;
};

/// Crossing time of `event` on the dense step, to relative accuracy 1e-12,
/// via TOMS 748 bracketing. Throws Error(NotBracketed) if the event
/// function does not change sign over the step.
EventHit locate_event(const DenseStep& step, const EventSpec& event);

/// Integrates from t = 0 to cfg.t_max or the first accepted event, blow-up
/// or step underflow. Throws Error(IntegrationStalled) if the step size
/// underflows before t = h_init and Error(NumericalFailure) if non-finite
/// values cannot be avoided by step reduction.
Trajectory integrate_ivp(const Params& params, double gamma,
                         std::span<const EventSpec> events,
                         const IntegratorConfig& cfg);

/// Doubles the horizon of a trajectory that stopped at ReachedHorizon and
/// continues from its final state with the same events. Returns it
/// unchanged once cfg.max_doublings extensions have been made.
Trajectory extend_horizon(Trajectory traj, const Params& params,
                          std::span<const EventSpec> events,
                          const IntegratorConfig& cfg);

}  // namespace mixconv
