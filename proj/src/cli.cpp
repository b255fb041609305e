#include "mixconv/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "mixconv/errors.hpp"
#include "mixconv/parallel.hpp"

namespace mixconv::cli {

using nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<double> parse_grid(std::string_view spec) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : spec) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  const bool geometric = parts.size() == 4 && parts[3] == "geom";
  if (parts.size() != 3 && !geometric) {
    throw std::invalid_argument("grid must be a:b:n or a:b:n:geom, got '" +
                                std::string(spec) + "'");
  }
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || !std::isfinite(v)) {
      throw std::invalid_argument("bad number in grid: '" + s + "'");
    }
    return v;
  };
  const double a = number(parts[0]);
  const double b = number(parts[1]);
  std::size_t used = 0;
  long n = 0;
  try {
    n = std::stol(parts[2], &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != parts[2].size() || n < 1) {
    throw std::invalid_argument("grid count must be a positive integer");
  }
  if (geometric && !(a > 0.0 && b > 0.0)) {
    throw std::invalid_argument("geometric grid needs positive endpoints");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out.push_back(geometric ? a * std::pow(b / a, s) : a + (b - a) * s);
  }
  if (n > 1) out.back() = b;
  return out;
}

std::string status_label(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::ToleranceNotMet:
    case SolveStatus::MaxIterations:
      return "tolerance-not-met";
    case SolveStatus::Undetermined:
      return "undetermined";
  }
  return "undetermined";
}

SweepRecord sweep_record(const ShootResult& r) {
  return {r.params.lambda, r.params.alpha,  r.params.beta,
          r.gamma_star,    r.tail.gap,      r.iterations,
          r.residuals.worst_i1, status_label(r.status)};
}

void write_profile_csv(std::ostream& os, const ShootResult& r) {
  os << kProfileHeader << '\n';
  for (const auto& s : r.profile.samples) {
    os << format_double(s.t) << ',' << format_double(s.f) << ','
       << format_double(s.fp) << ',' << format_double(s.fpp) << ','
       << format_double(identity_i1_residual(s, r.params, r.gamma_star))
       << '\n';
  }
}

ordered_json profile_json(const ShootResult& r) {
  ordered_json rows = ordered_json::array();
  for (const auto& s : r.profile.samples) {
    rows.push_back({s.t, s.f, s.fp, s.fpp,
                    identity_i1_residual(s, r.params, r.gamma_star)});
  }
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["columns"] = {"t", "f", "fp", "fpp", "i1_residual"};
  j["rows"] = std::move(rows);
  return j;
}

namespace {

ordered_json record_json(const SweepRecord& rec) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["lambda"] = rec.lambda;
  j["alpha"] = rec.alpha;
  j["beta"] = rec.beta;
  j["gamma_star"] = rec.gamma_star;
  j["tail_gap"] = rec.tail_gap;
  j["iterations"] = rec.iterations;
  j["worst_i1_residual"] = rec.worst_i1_residual;
  j["status"] = rec.status;
  return j;
}

ordered_json state_json(const AugState& s) {
  ordered_json j;
  j["t"] = s.t;
  j["f"] = s.f;
  j["fp"] = s.fp;
  j["fpp"] = s.fpp;
  return j;
}

}  // namespace

ordered_json summary_json(const ShootResult& r) {
  return record_json(sweep_record(r));
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& rows) {
  os << kSweepHeader << '\n';
  for (const auto& r : rows) {
    os << format_double(r.lambda) << ',' << format_double(r.alpha) << ','
       << format_double(r.beta) << ',' << format_double(r.gamma_star) << ','
       << format_double(r.tail_gap) << ',' << r.iterations << ','
       << format_double(r.worst_i1_residual) << ',' << r.status << '\n';
  }
}

ordered_json sweep_json(const std::vector<SweepRecord>& rows) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["records"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json rec = record_json(r);
    rec.erase("schema_version");
    j["records"].push_back(std::move(rec));
  }
  return j;
}

ordered_json classification_json(const Params& params, double gamma, Mode mode,
                                 const Classification& cls) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["lambda"] = params.lambda;
  j["alpha"] = params.alpha;
  j["beta"] = params.beta;
  j["gamma"] = gamma;
  j["mode"] = std::string(to_string(mode));
  j["tag"] = std::string(to_string(cls.tag));
  j["t_event"] = cls.t_event ? ordered_json(*cls.t_event) : ordered_json();
  j["stop"] = std::string(to_string(cls.stop));
  j["tail_gap"] = cls.tail_gap ? ordered_json(*cls.tail_gap) : ordered_json();
  j["witness"] = state_json(cls.witness);
  j["note"] = cls.note;
  return j;
}

ordered_json report_json(const VerificationReport& rep,
                         const std::string& timestamp) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  if (!timestamp.empty()) j["generated_at"] = timestamp;
  j["lambda"] = rep.params.lambda;
  j["alpha"] = rep.params.alpha;
  j["beta"] = rep.params.beta;
  j["gamma_star"] = rep.gamma_star;
  j["passed"] = rep.passed();
  j["checks"] = ordered_json::array();
  for (const auto& c : rep.checks) {
    ordered_json e;
    e["name"] = c.name;
    e["status"] = std::string(to_string(c.status));
    e["metric"] = c.metric;
    e["detail"] = c.detail;
    j["checks"].push_back(std::move(e));
  }
  return j;
}

namespace {

struct Options {
  Params params{std::nan(""), std::nan(""), std::nan("")};
  ShootConfig shoot;
  VerifyConfig verify;
  double gamma = std::nan("");
  std::string mode = "auto";
  std::string out;
  std::string format = "csv";
  std::string lambda_grid;
  std::string beta_grid;
  bool no_timestamp = false;
  unsigned threads = default_workers();
};

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void add_params(CLI::App* cmd, Options& o, bool required) {
  auto* l = cmd->add_option("--lambda", o.params.lambda, "Power-law exponent lambda");
  auto* a = cmd->add_option("--alpha", o.params.alpha, "Wall value f(0)");
  auto* b = cmd->add_option("--beta", o.params.beta, "Wall slope f'(0) (> 0)");
  if (required) {
    l->required();
    a->required();
    b->required();
  }
}

void add_integrator(CLI::App* cmd, Options& o) {
  auto& ic = o.shoot.integrator;
  cmd->add_option("--tmax", ic.t_max, "Integration horizon")
      ->capture_default_str();
  cmd->add_option("--rtol", ic.rtol, "Relative tolerance")->capture_default_str();
  cmd->add_option("--atol", ic.atol, "Absolute tolerance")->capture_default_str();
  cmd->add_option("--gamma-tol", o.shoot.gamma_abs_tol,
                  "Bisection width tolerance on gamma (absolute)")
      ->capture_default_str();
  cmd->add_flag("--allow-lambda-zero", o.shoot.allow_lambda_zero,
                "Admit lambda = 0 (Blasius validation)");
  cmd->add_option("--config", "Flat key=value file with flag defaults");
}

void add_output(CLI::App* cmd, Options& o) {
  cmd->add_option("--out", o.out, "Output file (default: standard output)");
  cmd->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

// Config file lines "key = value" become "--key=value" arguments placed
// before the command-line ones, so explicit flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path || args.size() < 2) return args;
  std::ifstream in(*path);
  if (!in) throw std::invalid_argument("cannot read config file " + *path);
  std::vector<std::string> extra;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line without '=': " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "config") continue;
    extra.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out{args[0], args[1]};
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

std::ostream& open_out(const Options& o, std::ofstream& file, std::ostream& out) {
  if (o.out.empty()) return out;
  file.open(o.out, std::ios::binary);
  if (!file) throw std::invalid_argument("cannot write " + o.out);
  return file;
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Domain:
      return kExitUsage;
    case ErrorCode::BracketNotFound:
      return kExitBracket;
    default:
      return kExitIntegration;
  }
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  ShootResult r;
  try {
    r = solve(o.params, o.shoot);
  } catch (const Error& e) {
    err << "solve: " << e.what() << '\n';
    if (e.code() == ErrorCode::BracketNotFound) {
      ordered_json j;
      j["schema_version"] = kSchemaVersion;
      j["lambda"] = o.params.lambda;
      j["alpha"] = o.params.alpha;
      j["beta"] = o.params.beta;
      j["gamma_star"] = nullptr;
      j["tail_gap"] = nullptr;
      j["iterations"] = 0;
      j["worst_i1_residual"] = nullptr;
      j["status"] = "bracket-not-found";
      out << j.dump(2) << '\n';
    }
    return exit_for(e);
  }
  if (!o.out.empty()) {
    std::ofstream file;
    std::ostream& os = open_out(o, file, out);
    if (o.format == "json") {
      os << profile_json(r).dump(2) << '\n';
    } else {
      write_profile_csv(os, r);
    }
  }
  out << summary_json(r).dump(2) << '\n';
  if (r.status != SolveStatus::Converged) {
    err << "solve: " << r.note << '\n';
    return kExitTolerance;
  }
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const auto lambdas = parse_grid(o.lambda_grid);
  const auto betas = parse_grid(o.beta_grid);
  for (double l : lambdas) {
    validate({l, o.params.alpha, 1.0}, o.shoot.allow_lambda_zero);
  }
  for (double b : betas) validate({lambdas.front(), o.params.alpha, b}, true);

  std::vector<SweepRecord> rows(lambdas.size() * betas.size());
  parallel_for(rows.size(), o.threads, [&](std::size_t i) {
    const Params p{lambdas[i / betas.size()], o.params.alpha,
                   betas[i % betas.size()]};
    try {
      rows[i] = sweep_record(solve(p, o.shoot));
    } catch (const Error& e) {
      SweepRecord rec{p.lambda, p.alpha, p.beta, std::nan(""), std::nan(""),
                      0, std::nan(""), "undetermined"};
      if (e.code() == ErrorCode::BracketNotFound) rec.status = "bracket-not-found";
      rows[i] = rec;
    }
  });

  std::ofstream file;
  std::ostream& os = open_out(o, file, out);
  if (o.format == "json") {
    os << sweep_json(rows).dump(2) << '\n';
  } else {
    write_sweep_csv(os, rows);
  }
  bool all = true;
  for (const auto& r : rows) {
    if (r.status != "converged") {
      all = false;
      err << "sweep: lambda=" << format_double(r.lambda)
          << " beta=" << format_double(r.beta) << ": " << r.status << '\n';
    }
  }
  return all ? kExitOk : kExitTolerance;
}

int cmd_classify(const Options& o, std::ostream& out, std::ostream& err) {
  validate(o.params, o.shoot.allow_lambda_zero);
  const Params p = normalized(o.params);
  Mode mode;
  if (o.mode == "convex") {
    mode = Mode::Convex;
  } else if (o.mode == "concave") {
    mode = Mode::Concave;
  } else {
    mode = p.beta > 1.0 ? Mode::Concave : Mode::Convex;
  }
  try {
    const Classification c = classify(p, o.gamma, mode, o.shoot);
    out << classification_json(p, o.gamma, mode, c).dump(2) << '\n';
  } catch (const Error& e) {
    err << "classify: " << e.what() << '\n';
    return exit_for(e);
  }
  return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  VerificationReport rep;
  try {
    VerifyConfig vcfg = o.verify;
    vcfg.workers = o.threads;
    rep = run_verification(o.params, o.shoot, vcfg);
  } catch (const Error& e) {
    err << "validate: " << e.what() << '\n';
    return exit_for(e);
  }
  std::ofstream file;
  std::ostream& os = open_out(o, file, out);
  os << report_json(rep, o.no_timestamp ? std::string() : utc_timestamp())
            .dump(2)
     << '\n';
  for (const auto& c : rep.checks) {
    if (c.status == CheckStatus::Fail) {
      err << "validate: check " << c.name << " failed: " << c.detail << '\n';
    }
  }
  return rep.passed() ? kExitOk : kExitTolerance;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out,
        std::ostream& err) {
  Options o;
  CLI::App app{"Shooting solver for the mixed-convection similarity equation "
               "f''' + (1+lambda) f f'' + 2 lambda (1-f') f' = 0",
               "mixconv"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* solve_cmd = app.add_subcommand("solve", "Solve one boundary-value problem");
  add_params(solve_cmd, o, true);
  add_integrator(solve_cmd, o);
  add_output(solve_cmd, o);

  auto* sweep_cmd = app.add_subcommand("sweep", "Solve over a (lambda, beta) grid");
  sweep_cmd->add_option("--lambda-grid", o.lambda_grid, "a:b:n or a:b:n:geom")
      ->required();
  sweep_cmd->add_option("--beta-grid", o.beta_grid, "a:b:n or a:b:n:geom")
      ->required();
  sweep_cmd->add_option("--alpha", o.params.alpha, "Wall value f(0)")->required();
  sweep_cmd->add_option("--threads", o.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  add_integrator(sweep_cmd, o);
  add_output(sweep_cmd, o);

  auto* classify_cmd =
      app.add_subcommand("classify", "Classify one initial-value trajectory");
  add_params(classify_cmd, o, true);
  classify_cmd->add_option("--gamma", o.gamma, "Initial curvature f''(0)")
      ->required();
  classify_cmd->add_option("--mode", o.mode, "Event set")
      ->check(CLI::IsMember({"auto", "convex", "concave"}))
      ->capture_default_str();
  add_integrator(classify_cmd, o);

  auto* validate_cmd =
      app.add_subcommand("validate", "Solve and run the verification suite");
  add_params(validate_cmd, o, true);
  add_integrator(validate_cmd, o);
  validate_cmd->add_option("--out", o.out, "Report file (default: standard output)");
  validate_cmd->add_option("--threads", o.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  validate_cmd->add_flag("--no-timestamp", o.no_timestamp,
                         "Omit generated_at from the report");

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::stringstream o_ss, e_ss;
    const int code = app.exit(e, o_ss, e_ss);
    out << o_ss.str();
    err << e_ss.str();
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (*solve_cmd) return cmd_solve(o, out, err);
    if (*sweep_cmd) return cmd_sweep(o, out, err);
    if (*classify_cmd) return cmd_classify(o, out, err);
    return cmd_validate(o, out, err);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_for(e);
  } catch (const std::invalid_argument& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace mixconv::cli
