#include "mixconv/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "mixconv/errors.hpp"

namespace mixconv {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0,
                 c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                 a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0,
                 a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0,
                 e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

// PI step-size controller constants.
constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kMinShrink = 0.2;
constexpr double kMaxGrow = 10.0;

constexpr std::size_t kAccJ = 5;

bool all_finite(const StateVec& y) {
  return std::all_of(y.begin(), y.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string describe(const AugState& s) {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << s.t << " f=" << s.f << " fp=" << s.fp << " fpp=" << s.fpp;
  return os.str();
}

struct StepOutcome {
  StateVec y1;
  StateVec k7;
  double err = 0.0;
  std::array<StateVec, 5> dense;
  bool finite = true;
};

class Stepper {
 public:
  Stepper(const Params& params, const IntegratorConfig& cfg)
      : params_(params), cfg_(cfg) {}

  std::optional<StateVec> eval(double t, const StateVec& y) const {
    if (!all_finite(y)) return std::nullopt;
    return rhs(AugState::from(t, y), params_, cfg_.exp_cap);
  }

  StepOutcome step(double t, const StateVec& y, const StateVec& k1,
                   double h) const {
    StepOutcome out;
    auto combine = [&](std::initializer_list<std::pair<double, const StateVec*>>
                           terms) {
      StateVec r = y;
      for (std::size_t i = 0; i < kStateSize; ++i) {
        double acc = 0.0;
        for (const auto& [w, k] : terms) acc += w * (*k)[i];
        r[i] += h * acc;
      }
      return r;
    };
    auto stage = [&](double c, const StateVec& ys, StateVec& k) {
      auto v = eval(t + c * h, ys);
      if (!v) return false;
      k = *v;
      return true;
    };

    StateVec k2, k3, k4, k5, k6;
    if (!stage(c2, combine({{a21, &k1}}), k2) ||
        !stage(c3, combine({{a31, &k1}, {a32, &k2}}), k3) ||
        !stage(c4, combine({{a41, &k1}, {a42, &k2}, {a43, &k3}}), k4) ||
        !stage(c5,
               combine({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}),
               k5) ||
        !stage(1.0,
               combine({{a61, &k1},
                        {a62, &k2},
                        {a63, &k3},
                        {a64, &k4},
                        {a65, &k5}}),
               k6)) {
      out.finite = false;
      return out;
    }
    out.y1 = combine(
        {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    if (!stage(1.0, out.y1, out.k7)) {
      out.finite = false;
      return out;
    }

    // J only enters the checks multiplied by exp(-(1+lambda) F), so its
    // absolute tolerance grows with that weight.
    const double exponent = std::min(
        (1.0 + params_.lambda) * std::max(y[3], out.y1[3]), cfg_.exp_cap);
    const double weight = std::exp(std::max(exponent, 0.0));
    double sum = 0.0;
    for (std::size_t i = 0; i < kStateSize; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                            e5 * k5[i] + e6 * k6[i] + e7 * out.k7[i]);
      double sc =
          cfg_.atol + cfg_.rtol * std::max(std::abs(y[i]), std::abs(out.y1[i]));
      if (i == kAccJ) sc += cfg_.atol * weight;
      sum += (e / sc) * (e / sc);
    }
    out.err = std::sqrt(sum / static_cast<double>(kStateSize));
    if (!std::isfinite(out.err)) {
      out.finite = false;
      return out;
    }

    auto& r = out.dense;
    for (std::size_t i = 0; i < kStateSize; ++i) {
      const double dy = out.y1[i] - y[i];
      const double bspl = h * k1[i] - dy;
      r[0][i] = y[i];
      r[1][i] = dy;
      r[2][i] = bspl;
      r[3][i] = dy - h * out.k7[i] - bspl;
      r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                     d6 * k6[i] + d7 * out.k7[i]);
    }
    return out;
  }

 private:
  const Params& params_;
  const IntegratorConfig& cfg_;
};

}  // namespace

void IntegratorConfig::validate() const {
  const bool ok = h_min > 0.0 && h_min <= h_init && h_init <= h_max &&
                  rtol > 0.0 && atol > 0.0 && t_max > 0.0 &&
                  blowup_cap > 0.0 && max_doublings >= 0 &&
                  max_slope_jump > 0.0 && max_steps > 0;
  if (!ok) throw Error(ErrorCode::Domain, "invalid integrator configuration");
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::SecondDerivZero:
      return "second-derivative-zero";
    case EventKind::SlopeReachesOne:
      return "slope-reaches-one";
  }
  return "unknown";
}

std::string_view to_string(StopKind kind) {
  switch (kind) {
    case StopKind::ReachedHorizon:
      return "reached-horizon";
    case StopKind::Event:
      return "event";
    case StopKind::BlowUp:
      return "blow-up";
    case StopKind::StepUnderflow:
      return "step-underflow";
  }
  return "unknown";
}

double EventSpec::value(const AugState& s) const {
  switch (kind) {
    case EventKind::SecondDerivZero:
      return s.fpp - offset;
    case EventKind::SlopeReachesOne:
      return s.fp - 1.0 - offset;
  }
  return 0.0;
}

bool EventSpec::crosses(double before, double after) const {
  const bool down = before >= 0.0 && after < 0.0;
  const bool up = before <= 0.0 && after > 0.0;
  if (direction < 0) return down;
  if (direction > 0) return up;
  return down || up;
}

AugState DenseStep::at(double t) const {
  const double th = (t - t0_) / h_;
  const double th1 = 1.0 - th;
  StateVec y;
  for (std::size_t i = 0; i < kStateSize; ++i) {
    y[i] = r_[0][i] +
           th * (r_[1][i] +
                 th1 * (r_[2][i] + th * (r_[3][i] + th1 * r_[4][i])));
  }
  return AugState::from(t, y);
}

namespace {

EventHit locate_between(const DenseStep& step, const EventSpec& event,
                        double a, double b) {
  auto g = [&](double t) { return event.value(step.at(t)); };
  const double ga = g(a);
  const double gb = g(b);
  if (ga == 0.0) return {a, step.at(a)};
  if (gb == 0.0) return {b, step.at(b)};
  if ((ga > 0.0) == (gb > 0.0)) {
    throw Error(ErrorCode::NotBracketed,
                "locate_event: event function does not change sign");
  }
  const double width = b - a;
  auto tol = [width](double x, double y) {
    return std::abs(x - y) <=
           std::max(1e-12 * std::max(std::abs(x), std::abs(y)),
                    1e-15 * width);
  };
  std::uintmax_t iters = 200;
  const auto [lo, hi] =
      boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
  const double t = 0.5 * (lo + hi);
  return {t, step.at(t)};
}

struct Crossing {
  EventKind kind;
  const EventSpec* spec;
  EventHit hit;
};

// Sign changes at the step endpoints and at one interior sample, so that a
// tangential pair of crossings inside one step is less likely to be missed.
std::vector<Crossing> find_crossings(const DenseStep& step,
                                     const AugState& start,
                                     const AugState& end,
                                     std::span<const EventSpec> events) {
  std::vector<Crossing> found;
  const double tm = 0.5 * (step.t0() + step.t1());
  const AugState mid = step.at(tm);
  for (const auto& ev : events) {
    const double g0 = ev.value(start);
    const double gm = ev.value(mid);
    const double g1 = ev.value(end);
    if (ev.crosses(g0, gm)) {
      found.push_back({ev.kind, &ev, locate_between(step, ev, start.t, tm)});
    }
    if (ev.crosses(gm, g1)) {
      found.push_back({ev.kind, &ev, locate_between(step, ev, tm, end.t)});
    }
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const Crossing& x, const Crossing& y) {
                     return x.hit.t < y.hit.t;
                   });
  return found;
}

// Above this |f'| the allowed jump between samples grows in proportion to
// |f'|, so runaway (blow-up) trajectories stay finite in size.
constexpr double kAbsoluteJumpLimit = 100.0;
constexpr double kMaxPiecesPerStep = 4096.0;

void append_samples(Trajectory& traj, const DenseStep& step, double t_stop,
                    const AugState& stop_state, double max_jump) {
  const AugState from = traj.back();
  const double jump = std::abs(stop_state.fp - from.fp);
  const double level =
      std::min(std::abs(from.fp), std::abs(stop_state.fp)) / kAbsoluteJumpLimit;
  const double allowed = max_jump * std::max(1.0, level);
  const auto pieces = static_cast<long>(
      std::min(std::ceil(jump / allowed), kMaxPiecesPerStep));
  for (long i = 1; i < pieces; ++i) {
    const double t =
        from.t + (t_stop - from.t) * static_cast<double>(i) /
                     static_cast<double>(pieces);
    traj.samples.push_back(step.at(t));
  }
  if (t_stop > traj.back().t) traj.samples.push_back(stop_state);
}

bool beyond_cap(const AugState& s, double cap) {
  return std::abs(s.f) > cap || std::abs(s.fp) > cap || std::abs(s.fpp) > cap;
}

void advance(Trajectory& traj, const Params& params,
             std::span<const EventSpec> events, const IntegratorConfig& cfg,
             double t_end) {
  const Stepper stepper(params, cfg);
  double t = traj.back().t;
  StateVec y = traj.back().vec();
  auto k1_opt = stepper.eval(t, y);
  if (!k1_opt) {
    throw Error(ErrorCode::NumericalFailure,
                "non-finite initial state: " + describe(traj.back()));
  }
  StateVec k1 = *k1_opt;
  double h = std::min(traj.next_h > 0.0 ? traj.next_h : cfg.h_init, cfg.h_max);
  double facold = 1e-4;
  bool last_rejected = false;
  long steps = 0;

  while (t_end - t > 1e-14 * std::max(1.0, std::abs(t_end))) {
    if (++steps > cfg.max_steps) {
      throw Error(ErrorCode::IntegrationStalled,
                  "step budget exhausted at " + describe(traj.back()));
    }
    const bool final_step = t + h >= t_end;
    const double h_try = final_step ? t_end - t : h;
    const StepOutcome out = stepper.step(t, y, k1, h_try);

    if (!out.finite) {
      h = h_try * kMinShrink;
      last_rejected = true;
      if (h < cfg.h_min) {
        throw Error(ErrorCode::NumericalFailure,
                    "non-finite values; last good state " +
                        describe(traj.back()));
      }
      continue;
    }

    if (out.err > 1.0) {
      h = h_try /
          std::min(1.0 / kMinShrink, std::pow(out.err, kExpo) / kSafety);
      last_rejected = true;
      if (h < cfg.h_min) {
        if (t < cfg.h_init) {
          throw Error(ErrorCode::IntegrationStalled,
                      "step size underflow at " + describe(traj.back()));
        }
        traj.stop = {StopKind::StepUnderflow, t, std::nullopt};
        traj.next_h = cfg.h_min;
        return;
      }
      continue;
    }

    const double fac11 = std::pow(out.err, kExpo);
    const double fac = std::clamp(fac11 / std::pow(facold, kBeta) / kSafety,
                                  1.0 / kMaxGrow, 1.0 / kMinShrink);
    double h_new = h_try / fac;
    if (last_rejected) h_new = std::min(h_new, h_try);
    if (final_step) h_new = std::max(h_new, h);
    facold = std::max(out.err, 1e-4);
    last_rejected = false;

    const double t1 = final_step ? t_end : t + h_try;
    const AugState start = traj.back();
    const AugState end = AugState::from(t1, out.y1);
    const DenseStep dense(t, h_try, out.dense);

    for (const auto& c : find_crossings(dense, start, end, events)) {
      if (!c.spec->guard || c.spec->guard(c.hit.state)) {
        append_samples(traj, dense, c.hit.t, c.hit.state, cfg.max_slope_jump);
        traj.stop = {StopKind::Event, c.hit.t, c.kind};
        traj.next_h = std::min(h_new, cfg.h_max);
        return;
      }
      traj.rejected.push_back({c.kind, c.hit.state});
    }

    append_samples(traj, dense, t1, end, cfg.max_slope_jump);
    if (beyond_cap(end, cfg.blowup_cap)) {
      traj.stop = {StopKind::BlowUp, t1, std::nullopt};
      traj.next_h = std::min(h_new, cfg.h_max);
      return;
    }
    t = t1;
    y = out.y1;
    k1 = out.k7;
    h = std::min(h_new, cfg.h_max);
  }
  traj.stop = {StopKind::ReachedHorizon, t, std::nullopt};
  traj.next_h = h;
}

}  // namespace

EventHit locate_event(const DenseStep& step, const EventSpec& event) {
  return locate_between(step, event, step.t0(), step.t1());
}

Trajectory integrate_ivp(const Params& params, double gamma,
                         std::span<const EventSpec> events,
                         const IntegratorConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(gamma)) {
    throw Error(ErrorCode::Domain, "gamma must be finite");
  }
  Trajectory traj;
  traj.samples.push_back(initial_state(params, gamma));
  traj.horizon = cfg.t_max;
  advance(traj, params, events, cfg, cfg.t_max);
  return traj;
}

Trajectory extend_horizon(Trajectory traj, const Params& params,
                          std::span<const EventSpec> events,
                          const IntegratorConfig& cfg) {
  if (traj.stop.kind != StopKind::ReachedHorizon ||
      traj.doublings >= cfg.max_doublings) {
    return traj;
  }
  traj.horizon *= 2.0;
  ++traj.doublings;
  advance(traj, params, events, cfg, traj.horizon);
  return traj;
}

}  // namespace mixconv
