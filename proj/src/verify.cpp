#include "mixconv/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "mixconv/errors.hpp"
#include "mixconv/parallel.hpp"

namespace mixconv {
namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

std::string_view to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::Skipped:
      return "skipped";
  }
  return "unknown";
}

void VerificationReport::add(CheckEntry entry) {
  if (find(entry.name) != nullptr) {
    throw Error(ErrorCode::Domain, "duplicate check name: " + entry.name);
  }
  if (entry.status == CheckStatus::Skipped && entry.detail.empty()) {
    throw Error(ErrorCode::Domain, "skipped check needs a reason: " + entry.name);
  }
  checks.push_back(std::move(entry));
}

const CheckEntry* VerificationReport::find(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

bool VerificationReport::passed() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckEntry& c) {
    return c.status == CheckStatus::Fail;
  });
}

double linear_departure(const Params& params, double gamma0,
                        const IntegratorConfig& cfg) {
  const Params start{params.lambda, params.alpha, 1.0};
  const Trajectory traj = integrate_ivp(start, gamma0, {}, cfg);
  double worst = 0.0;
  for (const auto& s : traj.samples) {
    worst = std::max({worst, std::abs(s.fp - 1.0), std::abs(s.fpp)});
  }
  if (traj.stop.kind != StopKind::ReachedHorizon) {
    worst = std::max(worst, cfg.blowup_cap);
  }
  return worst;
}

CheckEntry check_lemma_vanish(const Params& params, const ShootConfig& cfg,
                              const VerifyConfig& vcfg) {
  CheckEntry e{"lemma_vanish", CheckStatus::Pass, 0.0, {}};
  e.metric = linear_departure(params, 0.0, cfg.integrator);
  if (e.metric > vcfg.lemma_tol) e.status = CheckStatus::Fail;
  e.detail = "max(|f'-1|,|f''|) on [0," + fmt(cfg.integrator.t_max) +
             "] from (alpha,1,0): " + fmt(e.metric);
  return e;
}

VProfile integrate_v(const Params& params, double gamma,
                     const std::vector<double>& ys, const VerifyConfig& vcfg) {
  namespace odeint = boost::numeric::odeint;
  using VVec = std::array<double, 2>;
  if (ys.empty()) return {};
  if (gamma == 0.0) throw Error(ErrorCode::Domain, "integrate_v: gamma = 0");

  VVec x{params.alpha, 1.0 / (2.0 * gamma)};
  auto system = [&params](const VVec& s, VVec& ds, double y) {
    const auto d = v_rhs(VState{y, s[0], s[1]}, params);
    ds[0] = d[0];
    ds[1] = d[1];
  };
  VProfile out;
  auto observer = [&out](const VVec& s, double y) {
    if (!std::isfinite(s[0]) || !std::isfinite(s[1])) {
      throw Error(ErrorCode::NumericalFailure,
                  "v became non-finite at y=" + fmt(y));
    }
    out.y.push_back(y);
    out.v.push_back(s[0]);
    out.vp.push_back(s[1]);
  };
  const double span = ys.back() - ys.front();
  const double dy0 = span == 0.0 ? 1e-6 : span * 1e-4;
  try {
    odeint::integrate_times(
        odeint::make_dense_output(vcfg.v_atol, vcfg.v_rtol,
                                  odeint::runge_kutta_dopri5<VVec>()),
        system, x, ys.begin(), ys.end(), dy0, observer);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    throw Error(ErrorCode::NumericalFailure,
                std::string("v integration failed: ") + ex.what());
  }
  return out;
}

CheckEntry check_v_equivalence(const ShootResult& result,
                               const VerifyConfig& vcfg) {
  CheckEntry e{"v_equivalence", CheckStatus::Pass, 0.0, {}};
  const Params& p = result.params;
  if (!result.mode || result.gamma_star == 0.0) {
    e.detail = "beta = 1: f'' vanishes identically, nothing to transform";
    return e;
  }
  const bool convex = *result.mode == Mode::Convex;
  const double y0 = p.beta * p.beta;
  const double y_end = convex ? 1.0 - vcfg.v_delta : 1.0 + vcfg.v_delta;
  const std::string prefix = convex ? "" : "extended check (concave branch): ";

  std::vector<double> ys{y0};
  std::vector<double> fs{p.alpha};
  for (const auto& s : result.profile.samples) {
    const double y = s.fp * s.fp;
    const bool inside = convex ? (y > ys.back() && y <= y_end)
                               : (y < ys.back() && y >= y_end);
    if (inside) {
      ys.push_back(y);
      fs.push_back(s.f);
    }
  }

  VProfile vp;
  VProfile tail;
  try {
    vp = integrate_v(p, result.gamma_star, ys, vcfg);
    const double d = vcfg.v_delta;
    tail = integrate_v(p, result.gamma_star,
                       convex ? std::vector<double>{y0, 1.0 - 2.0 * d, 1.0 - d}
                              : std::vector<double>{y0, 1.0 + 2.0 * d, 1.0 + d},
                       vcfg);
  } catch (const Error& ex) {
    e.status = convex ? CheckStatus::Fail : CheckStatus::Skipped;
    e.metric = std::numeric_limits<double>::infinity();
    e.detail = prefix + ex.what();
    return e;
  }

  double worst = 0.0;
  double worst_y = y0;
  for (std::size_t i = 0; i < vp.v.size(); ++i) {
    const double gap = std::abs(vp.v[i] - fs[i]);
    if (gap > worst) {
      worst = gap;
      worst_y = vp.y[i];
    }
  }
  e.metric = worst;
  const bool diverging = tail.v.size() == 3 && tail.v[2] > tail.v[1];
  const bool ok = worst <= vcfg.v_tol && diverging;
  e.detail = prefix + "sup|v(f'^2)-f| = " + fmt(worst) + " at y=" +
             fmt(worst_y) + " over " + std::to_string(ys.size()) +
             " samples; v growing towards y=1: " + (diverging ? "yes" : "no");
  if (!ok) e.status = convex ? CheckStatus::Fail : CheckStatus::Skipped;
  return e;
}

std::vector<CheckEntry> check_identities(const ShootResult& result,
                                         const ShootConfig& cfg,
                                         const VerifyConfig& vcfg) {
  const ResidualReport rep = audit_residuals(result.profile, result.params,
                                             result.gamma_star, cfg.integrator);
  CheckEntry i1{"identity_i1", CheckStatus::Pass, rep.worst_i1, {}};
  i1.detail = "worst |i1| = " + fmt(rep.worst_i1) + " (relative " +
              fmt(rep.worst_i1_relative) + ") over " +
              std::to_string(result.profile.samples.size()) + " samples";
  if (rep.worst_i1 > vcfg.identity_tol) i1.status = CheckStatus::Fail;

  CheckEntry ex{"identity_exp", CheckStatus::Pass, rep.worst_exp_scaled, {}};
  const std::size_t evaluated = result.profile.samples.size() - rep.exp_skipped;
  if (evaluated == 0) {
    ex.status = CheckStatus::Skipped;
    ex.detail = "whole profile beyond the overflow horizon";
    return {i1, ex};
  }
  ex.detail = "worst |exp residual| exp(-(1+lambda)F) = " +
              fmt(rep.worst_exp_scaled) + " up to t=" + fmt(rep.exp_horizon) +
              "; " + std::to_string(rep.exp_skipped) +
              " samples beyond the overflow horizon skipped";
  if (rep.worst_exp_scaled > vcfg.identity_tol) ex.status = CheckStatus::Fail;
  return {i1, ex};
}

PartitionOutcome classify_grid(const Params& params, Mode mode, int n_grid,
                               const ShootConfig& cfg, unsigned workers) {
  if (n_grid < 10) throw Error(ErrorCode::Domain, "partition grid needs >= 10 points");
  const Bracket b = initial_bracket(params, mode, cfg);
  PartitionOutcome out;
  const auto n = static_cast<std::size_t>(n_grid);
  out.gammas.resize(n);
  out.classes.resize(n);
  // Ordered from the undershoot end to the overshoot end.
  for (std::size_t k = 0; k < n; ++k) {
    out.gammas[k] = b.undershoot + (b.overshoot - b.undershoot) *
                                       static_cast<double>(k) /
                                       static_cast<double>(n - 1);
  }
  out.gammas.back() = b.overshoot;
  parallel_for(n, workers, [&](std::size_t k) {
    out.classes[k] = classify(params, out.gammas[k], mode, cfg);
  });

  // Expected pattern: U...U [?] O...O with at most one side-less point.
  std::size_t k = 0;
  while (k < n && side_of(out.classes[k]) == Side::Undershoot) ++k;
  const std::size_t last_under = k;  // index one past the undershoot run
  std::size_t unknown = 0;
  while (k < n && !side_of(out.classes[k])) {
    ++k;
    ++unknown;
  }
  const std::size_t first_over = k;
  while (k < n && side_of(out.classes[k]) == Side::Overshoot) ++k;
  out.single_threshold =
      k == n && unknown <= 1 && last_under > 0 && first_over < n;
  if (out.single_threshold) {
    out.threshold_lo = out.gammas[last_under - 1];
    out.threshold_hi = out.gammas[first_over];
  }
  return out;
}

CheckEntry check_partition(const Params& params, Mode mode, int n_grid,
                           double gamma_star, const ShootConfig& cfg,
                           const VerifyConfig& vcfg) {
  CheckEntry e{"partition", CheckStatus::Pass, 0.0, {}};
  const PartitionOutcome g = classify_grid(params, mode, n_grid, cfg, vcfg.workers);
  if (!g.single_threshold) {
    e.status = CheckStatus::Fail;
    e.metric = std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os.precision(17);
    os << "no single undershoot/overshoot threshold; labels:";
    for (std::size_t k = 0; k < g.gammas.size(); ++k) {
      os << ' ' << g.gammas[k] << '=' << to_string(g.classes[k].tag);
    }
    e.detail = os.str();
    return e;
  }
  const double lo = std::min(g.threshold_lo, g.threshold_hi);
  const double hi = std::max(g.threshold_lo, g.threshold_hi);
  const double tol =
      cfg.gamma_abs_tol + cfg.gamma_rel_tol * std::abs(gamma_star);
  const double threshold = 0.5 * (lo + hi);
  e.metric = std::abs(threshold - gamma_star);
  const bool contains = gamma_star >= lo - tol && gamma_star <= hi + tol;
  std::ostringstream os;
  os.precision(17);
  os << n_grid << "-point grid switches between " << lo << " and " << hi
     << "; gamma* = " << gamma_star
     << (contains ? " lies inside" : " lies OUTSIDE");
  e.detail = os.str();
  if (!contains) e.status = CheckStatus::Fail;
  return e;
}

VerificationReport run_verification(const Params& params,
                                    const ShootConfig& cfg,
                                    const VerifyConfig& vcfg) {
  const ShootResult result = solve(params, cfg);
  VerificationReport rep;
  rep.params = result.params;
  rep.gamma_star = result.gamma_star;

  CheckEntry s{"solve", CheckStatus::Pass, result.tail.gap, {}};
  s.detail = std::string(to_string(result.status)) + ", " +
             std::to_string(result.iterations) + " bisection steps, final " +
             std::string(to_string(result.final_cls.tag));
  if (!result.note.empty()) s.detail += "; " + result.note;
  if (result.status != SolveStatus::Converged) s.status = CheckStatus::Fail;
  rep.add(std::move(s));

  rep.add(check_lemma_vanish(result.params, cfg, vcfg));
  rep.add(check_v_equivalence(result, vcfg));
  for (auto& c : check_identities(result, cfg, vcfg)) rep.add(std::move(c));
  if (result.mode) {
    rep.add(check_partition(result.params, *result.mode, vcfg.partition_grid,
                            result.gamma_star, cfg, vcfg));
  } else {
    rep.add({"partition", CheckStatus::Pass, 0.0,
             "beta = 1: gamma* = 0 without shooting"});
  }
  return rep;
}

}  // namespace mixconv
