#ifndef BLOCHFEM_TOOLS_RUN_CONFIG_HPP
#define BLOCHFEM_TOOLS_RUN_CONFIG_HPP

#include <json.hpp>
#include <string>
#include <vector>

#include "blochfem/reginn.hpp"

namespace blochfem::app {

constexpr int kManifestVersion = 1;
constexpr const char* kLibraryVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUnexpected = 1, kConfigError = 2, kSolverError = 3, kNonConvergence = 4 };

struct InverseSettings {
  int nx = 4;  ///< regions per horizontal axis
  int nz = 4;  ///< vertical layers
  MeasurementMode mode = MeasurementMode::Volume;
  Real epsilon = 0.05;
  std::uint64_t seed = 1;
  ReginnConfig reginn;
  int fine_M = 7;
  int fine_N = 128;
  int fine_J = 600;
  std::string model = "dense";  ///< dense | iterative
  std::string data;             ///< measurement file for invert; empty: synthesise
};

struct RunConfig {
  std::string command = "direct";  ///< direct | table | synth | invert
  ProblemConfig problem;
  std::string source_case = "u1";
  std::vector<int> M_list{2, 3, 4};
  std::vector<int> N_list{8, 16};
  InverseSettings inverse;
  std::string out = "out";
  bool diagnostics = false;
  nlohmann::json resolved;  ///< full config after defaults and overrides
};

/// Applies "a.b.c=value" overrides; value is parsed as JSON when possible,
/// otherwise taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Validates keys and values; throws ConfigError on unknown keys or
/// inconsistent physics.
RunConfig parse_run_config(const nlohmann::json& j);

/// Executes the command and writes its artifacts into cfg.out; returns an
/// exit code.
int run(const RunConfig& cfg);

/// Parse, validate and run; maps exceptions to exit codes.
int run_from_file(const std::string& path, const std::vector<std::string>& overrides, bool diagnostics,
                  int workers, const std::string& out);

}  // namespace blochfem::app

#endif  // BLOCHFEM_TOOLS_RUN_CONFIG_HPP
