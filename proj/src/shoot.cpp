#include "mixconv/shoot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mixconv/errors.hpp"

namespace mixconv {

std::string_view to_string(Mode mode) {
  return mode == Mode::Convex ? "convex" : "concave";
}

std::string_view to_string(Tag tag) {
  switch (tag) {
    case Tag::TypeA:
      return "TypeA";
    case Tag::TypeB:
      return "TypeB";
    case Tag::TypeC:
      return "TypeC";
    case Tag::BlowUp:
      return "BlowUp";
    case Tag::Undetermined:
      return "Undetermined";
  }
  return "unknown";
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::ToleranceNotMet:
      return "tolerance-not-met";
    case SolveStatus::MaxIterations:
      return "max-iterations";
    case SolveStatus::Undetermined:
      return "undetermined";
  }
  return "unknown";
}

Mode mode_for(const Params& params) {
  if (params.beta < 1.0) return Mode::Convex;
  if (params.beta > 1.0) return Mode::Concave;
  throw Error(ErrorCode::Domain,
              "beta = 1 has the exact linear solution; no shooting mode");
}

std::vector<EventSpec> mode_events(Mode mode, double slack) {
  if (mode == Mode::Convex) {
    return {
        {EventKind::SecondDerivZero, -1,
         [](const AugState& s) { return s.fp < 1.0; }, -slack},
        {EventKind::SlopeReachesOne, +1,
         [](const AugState& s) { return s.fpp > 0.0; }, slack},
    };
  }
  return {
      {EventKind::SecondDerivZero, +1,
       [](const AugState& s) { return s.fp > 1.0; }, slack},
      {EventKind::SlopeReachesOne, -1,
       [](const AugState& s) { return s.fpp < 0.0; }, -slack},
  };
}

double identity_bound(const IntegratorConfig& cfg, double scale) {
  return 10.0 * cfg.rtol * (1.0 + scale);
}

ResidualReport audit_residuals(const Trajectory& traj, const Params& params,
                               double gamma, const IntegratorConfig& cfg) {
  ResidualReport rep;
  for (const auto& s : traj.samples) {
    const double r1 = std::abs(identity_i1_residual(s, params, gamma));
    const double scale1 = identity_i1_scale(s, params, gamma);
    rep.worst_i1 = std::max(rep.worst_i1, r1);
    rep.worst_i1_relative = std::max(rep.worst_i1_relative, r1 / (1.0 + scale1));
    if (r1 > identity_bound(cfg, scale1)) rep.within_bound = false;

    const auto re = identity_exp_residual(s, params, gamma, cfg.exp_cap);
    if (!re) {
      ++rep.exp_skipped;
      continue;
    }
    const double exponent = (1.0 + params.lambda) * s.big_f;
    const double inv_weight = std::exp(-std::max(exponent, 0.0));
    const double scaled = std::abs(*re) * inv_weight;
    const double scale_e =
        std::max({std::abs(s.fpp), std::abs(gamma) * inv_weight,
                  std::abs(s.acc_j) * inv_weight});
    rep.worst_exp_scaled = std::max(rep.worst_exp_scaled, scaled);
    rep.exp_horizon = s.t;
    if (scaled > identity_bound(cfg, scale_e)) rep.within_bound = false;
  }
  return rep;
}

namespace {

void check_preconditions(const Params& params, double gamma, Mode mode) {
  if (!std::isfinite(gamma)) {
    throw Error(ErrorCode::Domain, "gamma must be finite");
  }
  if (mode == Mode::Convex) {
    if (!(params.beta > 0.0 && params.beta <= 1.0) || gamma < 0.0) {
      throw Error(ErrorCode::Domain,
                  "convex mode requires 0 < beta <= 1 and gamma >= 0");
    }
  } else if (!(params.beta >= 1.0) || gamma > 0.0) {
    throw Error(ErrorCode::Domain,
                "concave mode requires beta >= 1 and gamma <= 0");
  }
}

Classification from_event(const Trajectory& traj) {
  Classification c;
  c.stop = StopKind::Event;
  c.t_event = traj.stop.t;
  c.witness = traj.back();
  c.tag = *traj.stop.event == EventKind::SecondDerivZero ? Tag::TypeA
                                                         : Tag::TypeB;
  return c;
}

}  // namespace

Probe probe(const Params& params, double gamma, Mode mode,
            const ShootConfig& cfg, ClassifyOptions opts) {
  validate(params, cfg.allow_lambda_zero);
  check_preconditions(params, gamma, mode);
  const auto events = mode_events(mode, opts.slack);
  Probe out{{}, integrate_ivp(params, gamma, events, cfg.integrator)};
  Trajectory& traj = out.traj;
  Classification& c = out.cls;

  while (true) {
    c = {};
    c.stop = traj.stop.kind;
    c.witness = traj.back();
    if (!traj.rejected.empty()) {
      // f'' = 0 with f' = 1 at one point: only the linear solution does that.
      c.tag = Tag::Undetermined;
      c.t_event = traj.rejected.front().state.t;
      c.witness = traj.rejected.front().state;
      c.note = "simultaneous f''=0 and f'=1 (rigid linear case)";
      return out;
    }
    switch (traj.stop.kind) {
      case StopKind::Event:
        c = from_event(traj);
        return out;
      case StopKind::BlowUp: {
        const auto rep = audit_residuals(traj, params, gamma, cfg.integrator);
        if (!rep.within_bound) {
          std::ostringstream os;
          os.precision(17);
          os << "blow-up with identity residual " << rep.worst_i1
             << " above bound at t=" << traj.stop.t;
          throw Error(ErrorCode::NumericalFailure, os.str());
        }
        c.tag = Tag::BlowUp;
        c.t_event = traj.stop.t;
        return out;
      }
      case StopKind::StepUnderflow:
        c.tag = Tag::Undetermined;
        c.note = "step-size underflow";
        return out;
      case StopKind::ReachedHorizon:
        break;
    }
    c.tail_gap = std::abs(traj.back().fp - 1.0);
    if (*c.tail_gap <= cfg.tail_tol) {
      c.tag = Tag::TypeC;
      return out;
    }
    if (!opts.extend || traj.doublings >= cfg.integrator.max_doublings) {
      c.tag = Tag::Undetermined;
      c.note = "tail gap above tolerance at the horizon";
      return out;
    }
    traj = extend_horizon(std::move(traj), params, events, cfg.integrator);
  }
}

Classification classify(const Params& params, double gamma, Mode mode,
                        const ShootConfig& cfg, ClassifyOptions opts) {
  return probe(params, gamma, mode, cfg, opts).cls;
}

std::optional<Side> side_of(const Classification& cls) {
  switch (cls.tag) {
    case Tag::TypeA:
    case Tag::TypeC:
      return Side::Undershoot;
    case Tag::TypeB:
      return Side::Overshoot;
    case Tag::Undetermined:
      if (cls.stop == StopKind::ReachedHorizon) return Side::Undershoot;
      return std::nullopt;
    case Tag::BlowUp:
      return std::nullopt;
  }
  return std::nullopt;
}

double convex_gamma_bound(const Params& p) {
  return (1.0 + p.lambda) * (std::abs(p.alpha) - p.alpha * p.beta) +
         std::sqrt(2.0 * (3.0 * p.lambda + 1.0) * (1.0 - p.beta));
}

double concave_gamma_bound(const Params& p) {
  return -(1.0 + p.lambda) * (p.alpha * p.beta + std::abs(p.alpha) * p.beta) -
         p.beta * std::sqrt(2.0 * (3.0 * p.lambda + 1.0) * (p.beta - 1.0));
}

double gamma_bound(const Params& params, Mode mode) {
  return mode == Mode::Convex ? convex_gamma_bound(params)
                              : concave_gamma_bound(params);
}

Bracket initial_bracket(const Params& params, Mode mode,
                        const ShootConfig& cfg) {
  const ClassifyOptions quick{0.0, false};
  const double sign = mode == Mode::Convex ? 1.0 : -1.0;
  Bracket b;
  b.analytic_bound = gamma_bound(params, mode);

  b.undershoot = sign * cfg.seed;
  b.undershoot_cls = classify(params, b.undershoot, mode, cfg, quick);
  while (side_of(b.undershoot_cls) != Side::Undershoot) {
    if (b.undershoot_moves >= cfg.max_bracket_moves) break;
    b.undershoot *= 0.5;
    ++b.undershoot_moves;
    b.undershoot_cls = classify(params, b.undershoot, mode, cfg, quick);
  }

  b.overshoot = b.analytic_bound * (1.0 + cfg.bracket_margin) + sign * 1e-12;
  b.overshoot_cls = classify(params, b.overshoot, mode, cfg, quick);
  while (side_of(b.overshoot_cls) != Side::Overshoot) {
    if (b.overshoot_moves >= cfg.max_bracket_moves) break;
    b.overshoot *= 2.0;
    ++b.overshoot_moves;
    b.overshoot_cls = classify(params, b.overshoot, mode, cfg, quick);
  }

  if (side_of(b.undershoot_cls) != Side::Undershoot ||
      side_of(b.overshoot_cls) != Side::Overshoot) {
    std::ostringstream os;
    os.precision(17);
    os << "no verified bracket: gamma=" << b.undershoot << " is "
       << to_string(b.undershoot_cls.tag) << ", gamma=" << b.overshoot
       << " is " << to_string(b.overshoot_cls.tag);
    throw Error(ErrorCode::BracketNotFound, os.str());
  }
  return b;
}

TailDiagnostics tail_diagnostics(const Trajectory& traj) {
  if (traj.stop.kind != StopKind::ReachedHorizon) {
    throw Error(ErrorCode::Domain,
                "tail diagnostics need a trajectory that reached its horizon");
  }
  const std::size_t n = traj.samples.size();
  const std::size_t first = n - n / 4;
  if (n - first < 8) {
    throw Error(ErrorCode::InsufficientData,
                "fewer than 8 samples in the trajectory tail");
  }
  TailDiagnostics d;
  d.limit = traj.back().fp;
  d.gap = std::abs(d.limit - 1.0);

  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t m = 0;
  for (std::size_t i = first; i < n; ++i) {
    const auto& s = traj.samples[i];
    const double g = std::abs(s.fp - 1.0);
    if (g <= 0.0) continue;
    const double y = std::log(g);
    st += s.t;
    sy += y;
    stt += s.t * s.t;
    sty += s.t * y;
    ++m;
  }
  const double mm = static_cast<double>(m);
  const double den = mm * stt - st * st;
  if (m >= 2 && den > 0.0) d.decay_rate = (mm * sty - st * sy) / den;
  return d;
}

Trajectory linear_profile(const Params& params, const IntegratorConfig& cfg) {
  Trajectory traj;
  const auto n = static_cast<long>(std::ceil(cfg.t_max / cfg.h_max));
  for (long i = 0; i <= n; ++i) {
    const double t = std::min(cfg.t_max, static_cast<double>(i) * cfg.h_max);
    traj.samples.push_back(exact_linear(params, t));
  }
  traj.stop = {StopKind::ReachedHorizon, cfg.t_max, std::nullopt};
  traj.horizon = cfg.t_max;
  return traj;
}

namespace {

ShootResult linear_result(const Params& params, const ShootConfig& cfg) {
  ShootResult r;
  r.params = params;
  r.gamma_star = 0.0;
  r.profile = linear_profile(params, cfg.integrator);
  r.final_cls.tag = Tag::TypeC;
  r.final_cls.witness = r.profile.back();
  r.final_cls.tail_gap = 0.0;
  r.tail = tail_diagnostics(r.profile);
  r.residuals = audit_residuals(r.profile, params, 0.0, cfg.integrator);
  r.note = "beta = 1: exact linear solution f = t + alpha";
  return r;
}

}  // namespace

ShootResult solve(const Params& raw, const ShootConfig& cfg) {
  validate(raw, cfg.allow_lambda_zero);
  cfg.integrator.validate();
  const Params params = normalized(raw);
  if (is_linear_case(params)) return linear_result(params, cfg);

  const Mode mode = mode_for(params);
  const Bracket bracket = initial_bracket(params, mode, cfg);

  ShootResult r;
  r.params = params;
  r.mode = mode;

  const ClassifyOptions quick{0.0, false};
  double under = bracket.undershoot;
  double over = bracket.overshoot;
  Tag under_tag = bracket.undershoot_cls.tag;
  Tag over_tag = bracket.overshoot_cls.tag;
  auto width_ok = [&] {
    return std::abs(over - under) <=
           std::max(cfg.gamma_abs_tol,
                    cfg.gamma_rel_tol *
                        std::max(std::abs(under), std::abs(over)));
  };
  while (!width_ok()) {
    if (r.iterations >= cfg.max_iterations) {
      r.status = SolveStatus::MaxIterations;
      r.note = "bisection iteration limit reached";
      break;
    }
    const double mid = 0.5 * (under + over);
    const Classification c = classify(params, mid, mode, cfg, quick);
    ++r.iterations;
    const auto side = side_of(c);
    if (!side) {
      r.status = SolveStatus::Undetermined;
      r.note = "gamma inside the bracket is " + std::string(to_string(c.tag)) +
               (c.note.empty() ? "" : " (" + c.note + ")");
      break;
    }
    if (*side == Side::Undershoot) {
      under = mid;
      under_tag = c.tag;
    } else {
      over = mid;
      over_tag = c.tag;
    }
  }

  r.bracket_final = {std::min(under, over), std::max(under, over)};
  r.lo_tag = under < over ? under_tag : over_tag;
  r.hi_tag = under < over ? over_tag : under_tag;
  r.gamma_star = 0.5 * (under + over);

  Probe fin = probe(params, r.gamma_star, mode, cfg,
                    ClassifyOptions{cfg.invariant_slack, true});
  r.final_cls = fin.cls;
  r.profile = std::move(fin.traj);
  r.residuals = audit_residuals(r.profile, params, r.gamma_star, cfg.integrator);
  if (r.profile.stop.kind == StopKind::ReachedHorizon) {
    r.tail = tail_diagnostics(r.profile);
  } else {
    r.tail.limit = r.profile.back().fp;
    r.tail.gap = std::abs(r.tail.limit - 1.0);
  }
  if (r.status == SolveStatus::Converged && r.final_cls.tag != Tag::TypeC) {
    r.status = SolveStatus::ToleranceNotMet;
    std::ostringstream os;
    os.precision(6);
    os << "final profile is " << to_string(r.final_cls.tag)
       << ", tail gap " << r.tail.gap;
    r.note = os.str();
  }
  return r;
}

}  // namespace mixconv
