#pragma once

// Reference shooting solver used only by the tests: classical RK4 with a
// fixed step and plain bisection. Deliberately shares no code with the
// library (its own state, right-hand side and stopping rules).

#include <array>
#include <cmath>

namespace oracle {

struct Rk4Shooter {
  double lambda;
  double alpha;
  double beta;
  double step = 1e-4;
  double horizon = 30.0;

  using State = std::array<double, 3>;

  State deriv(const State& s) const {
    return {s[1], s[2],
            -(1.0 + lambda) * s[0] * s[2] - 2.0 * lambda * (1.0 - s[1]) * s[1]};
  }

  State rk4(const State& s) const {
    const double h = step;
    auto axpy = [](const State& a, double w, const State& b) {
      return State{a[0] + w * b[0], a[1] + w * b[1], a[2] + w * b[2]};
    };
    const State k1 = deriv(s);
    const State k2 = deriv(axpy(s, 0.5 * h, k1));
    const State k3 = deriv(axpy(s, 0.5 * h, k2));
    const State k4 = deriv(axpy(s, h, k3));
    State out;
    for (int i = 0; i < 3; ++i) {
      out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
  }

  // True when f' passes 1 before f'' changes sign (i.e. gamma overshoots).
  bool overshoots(double gamma) const {
    const bool convex = beta < 1.0;
    State s{alpha, beta, gamma};
    const auto steps = static_cast<long>(horizon / step);
    for (long i = 0; i < steps; ++i) {
      s = rk4(s);
      if (convex) {
        if (s[1] >= 1.0) return true;
        if (s[2] < 0.0) return false;
      } else {
        if (s[1] <= 1.0) return true;
        if (s[2] > 0.0) return false;
      }
    }
    return false;
  }

  // gamma* by bisection between a non-overshooting and an overshooting
  // value.
  double solve(double undershoot, double overshoot, double tol = 1e-11) const {
    for (int i = 0; i < 200 && std::abs(overshoot - undershoot) > tol; ++i) {
      const double mid = 0.5 * (undershoot + overshoot);
      (overshoots(mid) ? overshoot : undershoot) = mid;
    }
    return 0.5 * (undershoot + overshoot);
  }
};

}  // namespace oracle
