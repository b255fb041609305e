#pragma once

// Mixed-convection similarity equation
//
//   f''' + (1 + lambda) f f'' + 2 lambda (1 - f') f' = 0,
//   f(0) = alpha,  f'(0) = beta,  f'(inf) = 1,
//
// its exact solution for beta = 1, the two first integrals used as
// accuracy checks, and the equivalent second-order equation for
// v(y) = f(t) with y = f'(t)^2.

#include <array>
#include <optional>

namespace mixconv {

/// Beta values within this distance of 1 are treated as exactly 1.
inline constexpr double kBetaSnap = 1e-12;

/// Default cap on (1 + lambda) F beyond which the exponential first
/// integral is no longer evaluated.
inline constexpr double kDefaultExpCap = 500.0;

struct Params {
  double lambda = 1.0;
  double alpha = 0.0;
  double beta = 0.5;
};

/// Throws Error(Domain) unless beta > 0 and lambda > 0. lambda == 0 is
/// admitted only when `allow_lambda_zero` is set (Blasius validation).
/// Negative lambda is always rejected: the problem is not well posed there.
void validate(const Params& params, bool allow_lambda_zero = false);

/// Copy of `params` with beta snapped to 1 when within kBetaSnap of it.
Params normalized(Params params);

bool is_linear_case(const Params& params);

/// Number of integrated components: f, f', f'', F, I, J.
inline constexpr std::size_t kStateSize = 6;
using StateVec = std::array<double, kStateSize>;

/// Integration state augmented with quadrature accumulators.
///   big_f = int_0^t f,   acc_i = int_0^t f'^2,
///   acc_j = int_0^t 2 lambda (1 - f') f' exp((1 + lambda) F).
struct AugState {
  double t = 0.0;
  double f = 0.0;
  double fp = 0.0;
  double fpp = 0.0;
  double big_f = 0.0;
  double acc_i = 0.0;
  double acc_j = 0.0;

  StateVec vec() const { return {f, fp, fpp, big_f, acc_i, acc_j}; }
  static AugState from(double t, const StateVec& y) {
    return {t, y[0], y[1], y[2], y[3], y[4], y[5]};
  }
};

/// IVP data at t = 0 with f''(0) = gamma and zero accumulators.
AugState initial_state(const Params& params, double gamma);

/// Right-hand side of the augmented first-order system. The exponential
/// weight is evaluated in log space; once (1 + lambda) F exceeds
/// `exp_cap` the J accumulator is frozen (derivative 0).
/// Throws Error(Domain) on non-finite input.
StateVec rhs(const AugState& state, const Params& params,
             double exp_cap = kDefaultExpCap);

/// Third derivative from the equation itself.
double third_derivative(double f, double fp, double fpp, double lambda);

/// Exact solution f = t + alpha (a solution for every lambda when beta = 1),
/// with its accumulators.
AugState exact_linear(const Params& params, double t);

/// Integrated form of the equation on [0, t]:
///   f'' - gamma + (1+lambda)(f f' - alpha beta) + 2 lambda (f - alpha)
///     - (3 lambda + 1) int_0^t f'^2.
/// Zero on exact solutions.
double identity_i1_residual(const AugState& state, const Params& params,
                            double gamma);

/// Largest magnitude among the terms of identity_i1_residual, used to
/// scale its tolerance.
double identity_i1_scale(const AugState& state, const Params& params,
                         double gamma);

/// f'' exp((1+lambda) F) - gamma + J, with F(0) = 0. Zero on exact
/// solutions. Returns nullopt past the overflow horizon, i.e. once
/// (1 + lambda) F > exp_cap.
std::optional<double> identity_exp_residual(const AugState& state,
                                            const Params& params, double gamma,
                                            double exp_cap = kDefaultExpCap);

/// State of the transformed equation in y = f'^2.
struct VState {
  double y = 0.0;
  double v = 0.0;
  double vp = 0.0;
};

/// (v', v'') with
///   v'' = (1 + lambda) v v'^2 / sqrt(y) + 4 lambda (1 - sqrt(y)) v'^3.
/// Throws Error(Domain) for y <= 0.
std::array<double, 2> v_rhs(const VState& state, const Params& params);

}  // namespace mixconv
