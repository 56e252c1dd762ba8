#pragma once

// Command implementations behind the `lifeplan` executable. Each returns a
// process exit code and reports errors on `err`.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lifeplan::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kSolverTimeout = 3,
  kIo = 4,
};

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string config_path;
  std::string config_hash;  // FNV-1a of the config file bytes
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  /// Command-specific JSON object, serialized.
  std::string details = "{}";

  std::string to_json() const;
};

/// Cache directory: $LIFEPLAN_CACHE_DIR if set, else `.lifeplan-cache`.
std::string cache_dir();

struct Common {
  std::string config;
  std::vector<std::string> argv;
  std::optional<std::string> manifest;
};

int cmd_validate(const Common& c, std::ostream& out, std::ostream& err);
int cmd_model(const Common& c, std::ostream& out, std::ostream& err);

struct SolveArgs {
  Common common;
  std::string output;
};
int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err);

struct EvalArgs {
  Common common;
  std::optional<std::string> policy;
  std::optional<std::pair<double, double>> conops;
  std::optional<double> v_acc;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string output;
  std::optional<std::string> events;
};
int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err);

struct SweepArgs {
  Common common;
  std::optional<std::string> lambda;  // "lo:hi:step"
  bool conops_grid = false;
  std::optional<double> v_acc;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string output;
};
int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err);

struct PolicyMapArgs {
  Common common;
  std::string policy;
  double belief_step = 0.01;
  std::string output;
};
int cmd_policy_map(const PolicyMapArgs& a, std::ostream& out, std::ostream& err);

/// Parses "lo:hi:step".
std::vector<double> parse_lambda_range(const std::string& spec);

}  // namespace lifeplan::cli
