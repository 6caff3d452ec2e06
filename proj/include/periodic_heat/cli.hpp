#pragma once

// Command-line front end: configuration, dispatch and output.

#include "periodic_heat/periodic_complex.hpp"
#include "periodic_heat/presets.hpp"
#include "periodic_heat/report.hpp"

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace periodic_heat::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,       // bad flags, parameters or files
  kValidation = 2,  // malformed or non-generating complex
  kSolver = 3,
  kResource = 4,
  kCheckFailed = 5,  // all-checks found a failing criterion
};

struct RunConfig {
  std::string command;
  std::string preset;
  std::string complex_file;
  presets::PresetParams params;

  double t = 1.0;
  std::vector<double> t_list{25.0, 50.0, 100.0, 200.0, 400.0};
  int N = 0;            // 0: automatic
  double C = 9.0;
  int window = -1;      // -1: ceil(4 sqrt(t lambda_max(A)))
  std::size_t count = 200000;
  std::uint64_t seed = 1;
  double tol = 1e-8;
  std::string out;      // empty: stdout
  std::string format;   // empty: the command's natural format

  int n_max = 16;
  std::vector<int> v;   // empty: (1, ..., 1)
  int theta_grid = 8;
  int bands = 0;        // 0: min(|V|, 8)
  double fd_step = 1e-3;
  double gap_radius = 0.5;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"validate",  "effective-metric", "bands",       "heat-table",
                                              "asymptotics", "walk",           "stable-norm", "all-checks"};
  return names;
}

/// Parses flags (and an optional --config file of key = value lines; flags win).
/// Throws ParameterError on invalid values; CLI11 parse errors propagate.
RunConfig parse(int argc, const char* const* argv);

/// Range checks done before any computation.
void validate_config(const RunConfig& config);

PeriodicComplex load_complex(const RunConfig& config);

/// Every effective setting, echoed into outputs.
report::Json config_json(const RunConfig& config);

/// Consolidated per-criterion report; `passed` is set when nothing failed.
report::Json all_checks(const RunConfig& config, const PeriodicComplex& c, bool& passed);

/// Runs the configured command, writing to out (or config.out). Returns an exit code.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// argv entry point used by the executable.
int main(int argc, const char* const* argv);

}  // namespace periodic_heat::cli
