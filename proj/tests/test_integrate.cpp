#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixconv/errors.hpp"
#include "mixconv/integrate.hpp"
#include "mixconv/shoot.hpp"

using namespace mixconv;

namespace {

const Params kConvex{1.0, 0.0, 0.5};

std::vector<EventSpec> ab_events() { return mode_events(Mode::Convex); }

DenseStep fpp_step(double t0, double h, const std::array<double, 5>& r) {
  std::array<StateVec, 5> c{};
  for (int k = 0; k < 5; ++k) c[k][2] = r[k];
  return DenseStep(t0, h, c);
}

}  // namespace

TEST_CASE("config validation") {
  IntegratorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.h_min = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.rtol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.t_max = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("linear solution reaches the horizon") {
  for (double alpha : {-1.0, 0.0, 2.0}) {
    const Params p{1.0, alpha, 1.0};
    const auto traj = integrate_ivp(p, 0.0, {}, IntegratorConfig{});
    CHECK(traj.stop.kind == StopKind::ReachedHorizon);
    CHECK(traj.back().t == 50.0);
    CHECK(traj.back().f == doctest::Approx(50.0 + alpha).epsilon(1e-12));
    CHECK(traj.samples.front().t == 0.0);
    CHECK(traj.samples.front().f == alpha);
  }
}

TEST_CASE("small gamma turns over, large gamma overshoots") {
  const auto events = ab_events();
  const auto a = integrate_ivp(kConvex, 1e-6, events, IntegratorConfig{});
  REQUIRE(a.stop.kind == StopKind::Event);
  CHECK(a.stop.event == EventKind::SecondDerivZero);
  CHECK(a.back().fp < 1.0);
  CHECK(std::abs(a.back().fpp) < 1e-10);

  const auto b = integrate_ivp(kConvex, 2.5, events, IntegratorConfig{});
  REQUIRE(b.stop.kind == StopKind::Event);
  CHECK(b.stop.event == EventKind::SlopeReachesOne);
  CHECK(b.back().fpp > 0.0);
  CHECK(std::abs(b.back().fp - 1.0) < 1e-10);
}

TEST_CASE("samples are time ordered with bounded slope jumps") {
  const auto traj = integrate_ivp(kConvex, 0.7, {}, IntegratorConfig{});
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    CHECK(traj.samples[i].t > traj.samples[i - 1].t);
    CHECK(std::abs(traj.samples[i].fp - traj.samples[i - 1].fp) <= 0.01 + 1e-12);
  }
}

TEST_CASE("locate_event on a linear event function") {
  const auto step = fpp_step(2.0, 0.5, {-1.0, 2.0, 0.0, 0.0, 0.0});
  EventSpec ev{EventKind::SecondDerivZero, 0, {}, 0.0};
  const auto hit = locate_event(step, ev);
  CHECK(hit.t == doctest::Approx(2.25).epsilon(1e-13));
  CHECK(std::abs(hit.state.fpp) < 1e-13);
}

TEST_CASE("locate_event recovers a cubic root") {
  for (double c : {0.1, 0.37, 0.5, 0.83}) {
    // -c + th + th (1 - th)(th - c): a cubic with its only root in [0, 1]
    // at th = c.
    const auto step = fpp_step(0.0, 1.0, {-c, 1.0, -c, 1.0, 0.0});
    EventSpec ev{EventKind::SecondDerivZero, +1, {}, 0.0};
    const auto hit = locate_event(step, ev);
    CHECK(std::abs(hit.t - c) <= 1e-12);
  }
}

TEST_CASE("locate_event needs a sign change") {
  const auto step = fpp_step(0.0, 1.0, {1.0, 0.5, 0.0, 0.0, 0.0});
  EventSpec ev{EventKind::SecondDerivZero, 0, {}, 0.0};
  try {
    locate_event(step, ev);
    FAIL("expected NotBracketed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotBracketed);
  }
}

TEST_CASE("event directions") {
  EventSpec down{EventKind::SecondDerivZero, -1, {}, 0.0};
  CHECK(down.crosses(1.0, -1.0));
  CHECK(down.crosses(0.0, -1.0));
  CHECK_FALSE(down.crosses(-1.0, 1.0));
  EventSpec up{EventKind::SlopeReachesOne, +1, {}, 0.0};
  CHECK(up.crosses(-1.0, 1.0));
  CHECK_FALSE(up.crosses(1.0, -1.0));
  EventSpec any{EventKind::SlopeReachesOne, 0, {}, 0.0};
  CHECK(any.crosses(1.0, -1.0));
  CHECK(any.crosses(-1.0, 1.0));
  AugState s;
  s.fp = 1.25;
  s.fpp = 0.5;
  CHECK(EventSpec{EventKind::SlopeReachesOne, 0, {}, 0.25}.value(s) == 0.0);
  CHECK(EventSpec{EventKind::SecondDerivZero, 0, {}, 0.5}.value(s) == 0.0);
}

TEST_CASE("guard rejects a crossing and integration continues") {
  // A concave trajectory that turns over (f'' up through 0) while f' > 1,
  // watched with the convex guard f' < 1.
  auto events = ab_events();
  events.resize(1);
  events[0].direction = 0;
  IntegratorConfig cfg;
  cfg.t_max = 10.0;
  const auto traj = integrate_ivp({1.0, 0.0, 2.0}, -1e-3, events, cfg);
  REQUIRE_FALSE(traj.rejected.empty());
  CHECK(traj.rejected.front().kind == EventKind::SecondDerivZero);
  CHECK(traj.rejected.front().state.fp >= 1.0);
  CHECK(std::abs(traj.rejected.front().state.fpp) < 1e-10);
  CHECK(traj.back().t > traj.rejected.front().state.t);
  CHECK(traj.stop.kind != StopKind::Event);
}

TEST_CASE("blow-up is detected") {
  IntegratorConfig cfg;
  const auto traj = integrate_ivp({1.0, 0.0, 2.0}, -50.0, {}, cfg);
  CHECK(traj.stop.kind == StopKind::BlowUp);
  CHECK(traj.stop.t < cfg.t_max);
}

TEST_CASE("horizon extension") {
  IntegratorConfig cfg;
  cfg.t_max = 10.0;
  const Params lin{2.0, 1.0, 1.0};
  auto traj = integrate_ivp(lin, 0.0, {}, cfg);
  traj = extend_horizon(std::move(traj), lin, {}, cfg);
  CHECK(traj.horizon == 20.0);
  CHECK(traj.doublings == 1);
  CHECK(traj.back().t == 20.0);
  for (const auto& s : traj.samples) {
    CHECK(s.fp == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.f == doctest::Approx(s.t + 1.0).epsilon(1e-12));
  }

  const auto events = mode_events(Mode::Convex, 1e-8);
  cfg.t_max = 3.0;
  auto c = integrate_ivp(kConvex, 0.72740470775806609, events, cfg);
  REQUIRE(c.stop.kind == StopKind::ReachedHorizon);
  const double gap0 = std::abs(c.back().fp - 1.0);
  c = extend_horizon(std::move(c), kConvex, events, cfg);
  REQUIRE(c.stop.kind == StopKind::ReachedHorizon);
  CHECK(c.back().t == 6.0);
  CHECK(std::abs(c.back().fp - 1.0) < gap0);

  cfg.max_doublings = 1;
  auto capped = extend_horizon(c, kConvex, events, cfg);
  CHECK(capped.horizon == c.horizon);
  CHECK(capped.samples.size() == c.samples.size());
}

TEST_CASE("self-convergence when tolerances are halved") {
  IntegratorConfig coarse;
  coarse.rtol = 1e-8;
  coarse.atol = 1e-10;
  coarse.t_max = 5.0;
  IntegratorConfig fine = coarse;
  fine.rtol /= 2.0;
  fine.atol /= 2.0;
  for (double gamma : {0.3, 0.7, 1.5}) {
    const auto a = integrate_ivp(kConvex, gamma, {}, coarse).back();
    const auto b = integrate_ivp(kConvex, gamma, {}, fine).back();
    CHECK(std::abs(a.fpp - b.fpp) < 10.0 * coarse.rtol * (1.0 + std::abs(a.fpp)));
    CHECK(std::abs(a.fp - b.fp) < 10.0 * coarse.rtol * (1.0 + std::abs(a.fp)));
  }
}

TEST_CASE("event time does not depend on the step cap") {
  const auto events = ab_events();
  for (double gamma : {1e-6, 0.5, 2.5}) {
    IntegratorConfig a;
    IntegratorConfig b;
    b.h_max = a.h_max / 4.0;
    const auto ta = integrate_ivp(kConvex, gamma, events, a);
    const auto tb = integrate_ivp(kConvex, gamma, events, b);
    REQUIRE(ta.stop.kind == StopKind::Event);
    REQUIRE(tb.stop.kind == StopKind::Event);
    CHECK(std::abs(ta.stop.t - tb.stop.t) < 1e-9);
  }
}

TEST_CASE("identity residuals stay within bound along a trajectory") {
  IntegratorConfig cfg;
  for (const Params& p : {kConvex, Params{2.0, 0.0, 1.5}, Params{0.5, 1.0, 0.2}}) {
    const double gamma = p.beta < 1.0 ? 0.6 : -1.0;
    cfg.t_max = 6.0;
    const auto traj = integrate_ivp(p, gamma, {}, cfg);
    for (const auto& s : traj.samples) {
      const double scale = identity_i1_scale(s, p, gamma);
      CHECK(std::abs(identity_i1_residual(s, p, gamma)) <=
            identity_bound(cfg, scale));
      if (const auto e = identity_exp_residual(s, p, gamma)) {
        const double w = std::max(1.0, std::exp((1.0 + p.lambda) * s.big_f));
        const double exp_scale = std::max(std::abs(s.fpp), std::abs(gamma));
        CHECK(std::abs(*e) / w <= identity_bound(cfg, exp_scale));
      }
    }
  }
}

TEST_CASE("finite differences of the samples match the right-hand side") {
  IntegratorConfig cfg;
  cfg.t_max = 8.0;
  cfg.h_max = 0.05;
  const auto traj = integrate_ivp(kConvex, 0.7274, {}, cfg);
  const auto& s = traj.samples;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double h0 = s[i].t - s[i - 1].t;
    const double h1 = s[i + 1].t - s[i].t;
    if (h0 < 1e-3 || h1 < 1e-3) continue;
    const auto d = rhs(s[i], kConvex);
    auto diff = [&](double y0, double y1, double y2) {
      return (h0 * h0 * y2 - h1 * h1 * y0 - (h0 * h0 - h1 * h1) * y1) /
             (h0 * h1 * (h0 + h1));
    };
    const double tol = 10.0 * h0 * h1 + 1e-8;
    CHECK(std::abs(diff(s[i - 1].f, s[i].f, s[i + 1].f) - d[0]) <= tol);
    CHECK(std::abs(diff(s[i - 1].fp, s[i].fp, s[i + 1].fp) - d[1]) <= tol);
    CHECK(std::abs(diff(s[i - 1].fpp, s[i].fpp, s[i + 1].fpp) - d[2]) <= tol);
  }
}
