#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixconv/errors.hpp"
#include "mixconv/shoot.hpp"
#include "oracle/rk4_oracle.hpp"

using namespace mixconv;

namespace {

const Params kConvex{1.0, 0.0, 0.5};
const Params kConcave{2.0, 0.0, 1.5};

// Frozen from the RK4 reference shooter (tests/oracle).
constexpr double kGoldenConvex = 0.727404707762854;
constexpr double kGoldenConcave = -1.37174404811435;
constexpr double kGoldenBlasius = 0.413560766233168;

ShootConfig blasius_cfg() {
  ShootConfig cfg;
  cfg.allow_lambda_zero = true;
  return cfg;
}

}  // namespace

TEST_CASE("mode follows beta") {
  CHECK(mode_for(kConvex) == Mode::Convex);
  CHECK(mode_for(kConcave) == Mode::Concave);
  CHECK_THROWS_AS(mode_for({1.0, 0.0, 1.0}), Error);
}

TEST_CASE("classification examples") {
  const ShootConfig cfg;
  CHECK(classify(kConvex, 0.0, Mode::Convex, cfg).tag == Tag::TypeA);
  CHECK(classify({1.0, 0.0, 2.0}, 0.0, Mode::Concave, cfg).tag == Tag::TypeA);
  const auto b = classify(kConvex, 2.5, Mode::Convex, cfg);
  CHECK(b.tag == Tag::TypeB);
  REQUIRE(b.t_event);
  CHECK(b.witness.fpp > 0.0);
  CHECK(std::abs(b.witness.fp - 1.0) < 1e-10);
  const auto a = classify(kConvex, 1e-6, Mode::Convex, cfg);
  CHECK(a.tag == Tag::TypeA);
  CHECK(std::abs(a.witness.fpp) < 1e-10);
  CHECK(a.witness.fp < 1.0);
  CHECK(classify({1.0, 0.0, 1.0}, 0.0, Mode::Convex, cfg).tag == Tag::TypeC);
}

TEST_CASE("classification preconditions") {
  const ShootConfig cfg;
  CHECK_THROWS_AS(classify(kConvex, -0.1, Mode::Convex, cfg), Error);
  CHECK_THROWS_AS(classify(kConvex, -0.1, Mode::Concave, cfg), Error);
  CHECK_THROWS_AS(classify(kConcave, 0.1, Mode::Concave, cfg), Error);
  CHECK_THROWS_AS(classify({-1.0, 0.0, 0.5}, 0.1, Mode::Convex, cfg), Error);
}

TEST_CASE("sides of the threshold") {
  Classification c;
  c.tag = Tag::TypeA;
  CHECK(side_of(c) == Side::Undershoot);
  c.tag = Tag::TypeC;
  CHECK(side_of(c) == Side::Undershoot);
  c.tag = Tag::TypeB;
  CHECK(side_of(c) == Side::Overshoot);
  c.tag = Tag::BlowUp;
  CHECK_FALSE(side_of(c).has_value());
  c.tag = Tag::Undetermined;
  c.stop = StopKind::ReachedHorizon;
  CHECK(side_of(c) == Side::Undershoot);
  c.stop = StopKind::Event;
  CHECK_FALSE(side_of(c).has_value());
}

TEST_CASE("analytic bracket bounds") {
  CHECK(convex_gamma_bound(kConvex) == doctest::Approx(2.0));
  CHECK(concave_gamma_bound({1.0, 0.0, 2.0}) ==
        doctest::Approx(-4.0 * std::sqrt(2.0)));
  double prev = convex_gamma_bound({1.0, 0.0, 0.9});
  for (double beta : {0.99, 0.999, 0.99999, 1.0 - 1e-10}) {
    const double b = convex_gamma_bound({1.0, 0.0, beta});
    CHECK(b > 0.0);
    CHECK(b < prev);
    prev = b;
  }
  CHECK(prev < 1e-4);
  CHECK(gamma_bound(kConvex, Mode::Convex) == convex_gamma_bound(kConvex));
}

TEST_CASE("initial bracket verifies both endpoints") {
  const ShootConfig cfg;
  const auto b = initial_bracket(kConvex, Mode::Convex, cfg);
  CHECK(b.undershoot_cls.tag == Tag::TypeA);
  CHECK(b.overshoot_cls.tag == Tag::TypeB);
  CHECK(b.analytic_bound == doctest::Approx(2.0));
  CHECK(b.overshoot == doctest::Approx(2.2));
  CHECK(b.undershoot_moves == 0);
  CHECK(b.overshoot_moves == 0);
  CHECK(b.lo() == b.undershoot);

  const auto c = initial_bracket(kConcave, Mode::Concave, cfg);
  CHECK(c.undershoot_cls.tag == Tag::TypeA);
  CHECK(c.overshoot_cls.tag == Tag::TypeB);
  CHECK(c.undershoot < 0.0);
  CHECK(c.overshoot < c.undershoot);
  CHECK(c.lo() == c.overshoot);
}

TEST_CASE("solve matches the reference values") {
  const ShootConfig cfg;
  const auto a = solve(kConvex, cfg);
  CHECK(a.status == SolveStatus::Converged);
  CHECK(std::abs(a.gamma_star - kGoldenConvex) < 1e-8);
  const auto b = solve(kConcave, cfg);
  CHECK(b.status == SolveStatus::Converged);
  CHECK(std::abs(b.gamma_star - kGoldenConcave) < 1e-8);
  const auto c = solve({0.0, 0.0, 0.3}, blasius_cfg());
  CHECK(c.status == SolveStatus::Converged);
  CHECK(std::abs(c.gamma_star - kGoldenBlasius) < 1e-8);
}

TEST_CASE("solve agrees with a fresh run of the reference shooter") {
  const ShootConfig cfg;
  const oracle::Rk4Shooter ref{kConvex.lambda, kConvex.alpha, kConvex.beta};
  const double expected = ref.solve(0.0, 2.2);
  CHECK(std::abs(solve(kConvex, cfg).gamma_star - expected) < 1e-5);
}

TEST_CASE("solve rejects bad parameters") {
  const ShootConfig cfg;
  CHECK_THROWS_AS(solve({0.0, 0.0, 0.3}, cfg), Error);
  CHECK_THROWS_AS(solve({-0.5, 0.0, 0.3}, blasius_cfg()), Error);
  CHECK_THROWS_AS(solve({1.0, 0.0, -0.3}, cfg), Error);
}

TEST_CASE("beta = 1 is the exact linear solution") {
  const ShootConfig cfg;
  for (double beta : {1.0, 1.0 + 1e-13}) {
    const auto r = solve({2.0, -1.0, beta}, cfg);
    CHECK(r.gamma_star == 0.0);
    CHECK(r.iterations == 0);
    CHECK_FALSE(r.mode.has_value());
    CHECK(r.final_cls.tag == Tag::TypeC);
    for (const auto& s : r.profile.samples) {
      CHECK(s.f == s.t - 1.0);
      CHECK(s.fp == 1.0);
      CHECK(s.fpp == 0.0);
    }
  }
}

TEST_CASE("convex profile invariants") {
  const ShootConfig cfg;
  const auto r = solve(kConvex, cfg);
  REQUIRE(r.status == SolveStatus::Converged);
  CHECK(r.gamma_star > 0.0);
  CHECK(r.final_cls.tag == Tag::TypeC);
  CHECK(r.bracket_final.second - r.bracket_final.first <=
        cfg.gamma_abs_tol + cfg.gamma_rel_tol * std::abs(r.gamma_star));
  CHECK(r.lo_tag == Tag::TypeA);
  CHECK(r.hi_tag == Tag::TypeB);
  const double eps = 1e-8;
  const double lam = kConvex.lambda;
  for (const auto& s : r.profile.samples) {
    CHECK(s.fpp > -eps);
    CHECK(s.fp >= kConvex.beta - eps);
    CHECK(s.fp <= 1.0 + eps);
  }
  // J >= 0 as long as 0 <= f' <= 1 has held, hence f'' exp((1+lambda)F)
  // <= gamma there.
  double gap_held = 1.0;
  for (const auto& s : r.profile.samples) {
    if (s.fp < 0.0 || s.fp > 1.0) break;
    gap_held = 1.0 - s.fp;
    CHECK(s.acc_j >= 0.0);
    CHECK(s.fpp <= r.gamma_star * std::exp(-(1.0 + lam) * s.big_f) + eps);
  }
  // The prefix runs until f' has converged to 1.
  CHECK(gap_held < 1e-9);
  CHECK(r.tail.gap <= cfg.tail_tol);
  CHECK(r.residuals.worst_i1 <= 1e-8);
  CHECK(r.residuals.worst_exp_scaled <= 1e-8);
}

TEST_CASE("concave profile invariants") {
  const ShootConfig cfg;
  const auto r = solve(kConcave, cfg);
  REQUIRE(r.status == SolveStatus::Converged);
  CHECK(r.gamma_star < 0.0);
  CHECK(r.lo_tag == Tag::TypeB);
  CHECK(r.hi_tag == Tag::TypeA);
  const double eps = 1e-8;
  for (const auto& s : r.profile.samples) {
    CHECK(s.fpp < eps);
    CHECK(s.fp <= kConcave.beta + eps);
    CHECK(s.fp >= 1.0 - eps);
  }
  CHECK(r.tail.gap <= cfg.tail_tol);
}

TEST_CASE("gamma* decreases along beta and matches the reference sweep") {
  const ShootConfig cfg;
  const std::vector<double> betas{0.1, 0.3, 0.5, 0.7, 0.9};
  const std::vector<double> golden{1.01924139679881, 0.913204415985024,
                                   0.727404707762854, 0.476989927369031,
                                   0.171389934035595};
  double prev = INFINITY;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const auto r = solve({1.0, 0.0, betas[i]}, cfg);
    CHECK(r.status == SolveStatus::Converged);
    CHECK(std::abs(r.gamma_star - golden[i]) < 1e-8);
    CHECK(r.gamma_star < prev);
    prev = r.gamma_star;
  }
}

TEST_CASE("gamma* is continuous in beta") {
  const ShootConfig cfg;
  for (const Params& p : {kConvex, kConcave}) {
    Params q = p;
    q.beta += 1e-6;
    CHECK(std::abs(solve(p, cfg).gamma_star - solve(q, cfg).gamma_star) < 1e-3);
  }
}

TEST_CASE("other parameter points converge") {
  const ShootConfig cfg;
  for (const Params& p : {Params{1.0, -1.0, 0.2}, Params{0.5, 1.0, 2.0},
                          Params{2.0, 1.0, 0.8}, Params{0.5, -1.0, 1.2}}) {
    const auto r = solve(p, cfg);
    CHECK(r.status == SolveStatus::Converged);
    CHECK(r.final_cls.tag == Tag::TypeC);
    CHECK((p.beta < 1.0 ? r.gamma_star > 0.0 : r.gamma_star < 0.0));
  }
}

TEST_CASE("tail diagnostics") {
  const ShootConfig cfg;
  const auto lin = linear_profile({1.0, 0.0, 1.0}, cfg.integrator);
  const auto t0 = tail_diagnostics(lin);
  CHECK(t0.limit == 1.0);
  CHECK(t0.gap == 0.0);
  CHECK_FALSE(t0.decay_rate.has_value());

  const auto r = solve(kConvex, cfg);
  const auto t1 = tail_diagnostics(r.profile);
  CHECK(t1.gap <= cfg.tail_tol);
  CHECK(t1.limit == r.profile.back().fp);

  // Below gamma* with lambda = 0 the slope saturates short of 1.
  const Params blasius{0.0, 0.0, 0.3};
  const auto low = integrate_ivp(blasius, 0.05, {}, cfg.integrator);
  REQUIRE(low.stop.kind == StopKind::ReachedHorizon);
  CHECK(tail_diagnostics(low).gap > 1e-2);

  Trajectory few;
  few.stop = {StopKind::ReachedHorizon, 4.0, std::nullopt};
  for (int i = 0; i < 5; ++i) few.samples.push_back(exact_linear({}, i));
  try {
    tail_diagnostics(few);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }

  const auto ev = integrate_ivp(kConvex, 2.5, mode_events(Mode::Convex),
                                cfg.integrator);
  CHECK_THROWS_AS(tail_diagnostics(ev), Error);
}

TEST_CASE("final-bracket endpoints straddle a type (c) profile") {
  const ShootConfig cfg;
  const auto r = solve(kConvex, cfg);
  // The bracket endpoints are decided by the same events as bisection.
  const auto lo = classify(kConvex, r.bracket_final.first, Mode::Convex, cfg);
  const auto hi = classify(kConvex, r.bracket_final.second, Mode::Convex, cfg);
  CHECK(side_of(lo) == Side::Undershoot);
  CHECK(side_of(hi) == Side::Overshoot);
}
