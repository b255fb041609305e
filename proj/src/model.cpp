#include "mixconv/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mixconv/errors.hpp"

namespace mixconv {

void validate(const Params& params, bool allow_lambda_zero) {
  if (!std::isfinite(params.lambda) || !std::isfinite(params.alpha) ||
      !std::isfinite(params.beta)) {
    throw Error(ErrorCode::Domain, "parameters must be finite");
  }
  if (!(params.beta > 0.0)) {
    throw Error(ErrorCode::Domain, "beta must be > 0");
  }
  if (params.lambda < 0.0) {
    throw Error(ErrorCode::Domain,
                "lambda must be > 0: for lambda < 0 the problem can have "
                "infinitely many solutions and is not supported");
  }
  if (params.lambda == 0.0 && !allow_lambda_zero) {
    throw Error(ErrorCode::Domain,
                "lambda must be > 0 (lambda = 0 is the Blasius case, enable "
                "it explicitly for validation runs)");
  }
}

Params normalized(Params params) {
  if (std::abs(params.beta - 1.0) <= kBetaSnap) params.beta = 1.0;
  return params;
}

bool is_linear_case(const Params& params) { return params.beta == 1.0; }

AugState initial_state(const Params& params, double gamma) {
  return {0.0, params.alpha, params.beta, gamma, 0.0, 0.0, 0.0};
}

double third_derivative(double f, double fp, double fpp, double lambda) {
  return -(1.0 + lambda) * f * fpp - 2.0 * lambda * (1.0 - fp) * fp;
}

StateVec rhs(const AugState& s, const Params& params, double exp_cap) {
  if (!std::isfinite(s.t) || !std::isfinite(s.f) || !std::isfinite(s.fp) ||
      !std::isfinite(s.fpp) || !std::isfinite(s.big_f) ||
      !std::isfinite(s.acc_i) || !std::isfinite(s.acc_j)) {
    throw Error(ErrorCode::Domain, "rhs: non-finite state");
  }
  const double lam = params.lambda;
  const double exponent = (1.0 + lam) * s.big_f;

  double dj = 0.0;
  const double weight = 2.0 * lam * (1.0 - s.fp) * s.fp;
  if (exponent <= exp_cap && weight != 0.0) {
    dj = std::copysign(std::exp(std::log(std::abs(weight)) + exponent), weight);
  }
  return {s.fp, s.fpp, third_derivative(s.f, s.fp, s.fpp, lam), s.f,
          s.fp * s.fp, dj};
}

AugState exact_linear(const Params& params, double t) {
  const double a = params.alpha;
  return {t, t + a, 1.0, 0.0, 0.5 * t * t + a * t, t, 0.0};
}

double identity_i1_residual(const AugState& s, const Params& p, double gamma) {
  const double lam = p.lambda;
  return s.fpp - gamma + (1.0 + lam) * (s.f * s.fp - p.alpha * p.beta) +
         2.0 * lam * (s.f - p.alpha) - (3.0 * lam + 1.0) * s.acc_i;
}

double identity_i1_scale(const AugState& s, const Params& p, double gamma) {
  const double lam = p.lambda;
  return std::max({std::abs(s.fpp), std::abs(gamma),
                   std::abs((1.0 + lam) * s.f * s.fp),
                   std::abs((1.0 + lam) * p.alpha * p.beta),
                   std::abs(2.0 * lam * s.f), std::abs(2.0 * lam * p.alpha),
                   std::abs((3.0 * lam + 1.0) * s.acc_i)});
}

std::optional<double> identity_exp_residual(const AugState& s, const Params& p,
                                            double gamma, double exp_cap) {
  const double exponent = (1.0 + p.lambda) * s.big_f;
  if (exponent > exp_cap) return std::nullopt;
  const double weighted =
      s.fpp == 0.0
          ? 0.0
          : std::copysign(std::exp(std::log(std::abs(s.fpp)) + exponent),
                          s.fpp);
  return weighted - gamma + s.acc_j;
}

std::array<double, 2> v_rhs(const VState& s, const Params& params) {
  if (!(s.y > 0.0)) throw Error(ErrorCode::Domain, "v_rhs: y must be > 0");
  const double lam = params.lambda;
  const double root = std::sqrt(s.y);
  const double vp2 = s.vp * s.vp;
  return {s.vp, (1.0 + lam) * s.v * vp2 / root +
                    4.0 * lam * (1.0 - root) * vp2 * s.vp};
}

}  // namespace mixconv
