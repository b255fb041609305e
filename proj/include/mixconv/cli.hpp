#pragma once

// Command-line front end and the file formats it writes.
//
//   mixconv solve    --lambda L --alpha A --beta B [--out FILE --format csv|json]
//   mixconv sweep    --lambda-grid a:b:n --beta-grid a:b:n --alpha A
//   mixconv classify --lambda L --alpha A --beta B --gamma G [--mode M]
//   mixconv validate --lambda L --alpha A --beta B [--out FILE]
//
// Exit statuses: 0 success, 1 integration failure, 2 tolerance not met /
// failed check, 3 bracket not found, 64 usage error.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mixconv/shoot.hpp"
#include "mixconv/verify.hpp"

namespace mixconv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIntegration = 1;
inline constexpr int kExitTolerance = 2;
inline constexpr int kExitBracket = 3;
inline constexpr int kExitUsage = 64;

inline constexpr int kSchemaVersion = 1;

/// Exact header line of the profile CSV.
inline constexpr std::string_view kProfileHeader = "t,f,fp,fpp,i1_residual";
inline constexpr std::string_view kSweepHeader =
    "lambda,alpha,beta,gamma_star,tail_gap,iterations,worst_i1_residual,status";

/// 17 significant digits.
std::string format_double(double x);

/// "a:b:n" (arithmetic) or "a:b:n:geom" (geometric, a and b > 0). Throws
/// std::invalid_argument on malformed input or n < 1.
std::vector<double> parse_grid(std::string_view spec);

struct SweepRecord {
  double lambda = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma_star = 0.0;
  double tail_gap = 0.0;
  int iterations = 0;
  double worst_i1_residual = 0.0;
  // converged | bracket-not-found | tolerance-not-met | undetermined
  std::string status;
};

std::string status_label(SolveStatus status);

SweepRecord sweep_record(const ShootResult& result);

void write_profile_csv(std::ostream& os, const ShootResult& result);
nlohmann::ordered_json profile_json(const ShootResult& result);
nlohmann::ordered_json summary_json(const ShootResult& result);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& rows);
nlohmann::ordered_json sweep_json(const std::vector<SweepRecord>& rows);
nlohmann::ordered_json classification_json(const Params& params, double gamma,
                                           Mode mode,
                                           const Classification& cls);
/// `timestamp` empty means no generated_at field.
nlohmann::ordered_json report_json(const VerificationReport& report,
                                   const std::string& timestamp);

/// Runs the command line `args` (args[0] is the program name). Regular
/// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace mixconv::cli
