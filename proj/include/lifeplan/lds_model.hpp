#pragma once

// The Enceladus Life Detection Suite instantiation: biosignature catalog,
// network structure, default conditional families, instruments, and the
// mission configuration file.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lifeplan/bayesnet.hpp"

namespace lifeplan::lds {

inline constexpr int kNumInstruments = 6;

/// One row of the biosignature / habitability catalog.
struct CatalogEntry {
  std::string id;
  std::string characteristic;
  double lower;
  double upper;
  bool binary;
  std::vector<std::string> parents;
};

/// s_L followed by o_1 ... o_10, in index order.
const std::vector<CatalogEntry>& biosignature_catalog();

struct InstrumentSpec {
  int action = 0;  // 0-based: a_1 is 0
  std::string name;
  std::vector<std::string> measured;  // ascending catalog order
  double usage = 0.0;                 // fraction of the chamber
};

struct SolverSettings {
  double precision = 1e-3;
  double timeout_seconds = 600.0;
};

struct EvaluationSettings {
  int rollouts = 10000;
  int horizon = 200;
  std::uint64_t seed = 1;
};

struct SweepSettings {
  double lambda_lo = 0.7;
  double lambda_hi = 1.0;
  double lambda_step = 0.05;
  std::vector<double> t_biotic{0.9, 0.925, 0.95, 0.975, 1.0};
  std::vector<double> t_abiotic{0.0, 0.025, 0.05, 0.075, 0.1};
};

struct MissionConfig {
  double v_acc = 0.03;
  /// Absent means 0.5 * v_acc, re-derived when v_acc is overridden.
  std::optional<double> sigma_acc;
  double s_v_max = 1.0;
  double volume_step = 0.01;
  double p_biotic = 0.5;
  double lambda = 0.72;
  double discount = 0.99;
  /// Reward is -accumulate_cost per accumulation step.
  double accumulate_cost = 1e-3;
  double infeasible_penalty = 10.0;
  /// Bin counts for the non-binary observation variables.
  std::map<std::string, int> bins{{"o_5", 4}, {"o_6", 3}, {"o_7", 3}, {"o_8", 3}, {"o_9", 3}, {"o_10", 3}};
  std::array<double, kNumInstruments> usage{0.01, 0.06, 0.02, 0.03, 0.01, 0.89};
  std::size_t cpt_samples_per_row = bayesnet::kDefaultSamplesPerRow;
  std::uint64_t network_seed = 20250101;
  /// Optional network definition; relative paths resolve against the config
  /// file's directory.
  std::string network_file;
  SolverSettings solver;
  EvaluationSettings evaluation;
  SweepSettings sweep;

  double sigma() const { return sigma_acc.value_or(0.5 * v_acc); }
};

/// Field-level problems, each message naming the offending field. Empty iff
/// the configuration is usable.
std::vector<std::string> validate_config(const MissionConfig& config);

/// Parses a config document. Unknown fields are rejected. Does not validate
/// ranges; see validate_config.
MissionConfig parse_config(std::string_view json_text, const std::string& base_dir = ".");
MissionConfig load_config(const std::string& path);
std::string dump_config(const MissionConfig& config);

std::vector<InstrumentSpec> instruments(const MissionConfig& config);
std::string_view instrument_name(int action);

/// Bin edges used for a catalog variable with `bins` bins.
std::vector<double> default_bin_edges(const CatalogEntry& entry, int bins);

/// The default network definition: catalog structure plus the default
/// conditional families, binned per config.
bayesnet::NetworkDefinition default_network_definition(const MissionConfig& config);

struct LdsNetwork {
  bayesnet::NetworkDefinition definition;
  bayesnet::DiscreteBayesNet discrete;
  bayesnet::ContinuousNetwork continuous;
};

/// Discretized network (for belief updates) paired with its continuous
/// families (for simulation). Uses config.network_file when set. Throws
/// ValidationError for families outside their variable's range and for
/// networks that do not cover the instruments' measurements.
LdsNetwork build_default_network(const MissionConfig& config);

/// Variable indices measured by an instrument, ascending.
std::vector<int> measured_indices(const InstrumentSpec& instrument, const bayesnet::DiscreteBayesNet& net);

/// Cartesian product of the measured variables' bins, lexicographic with the
/// lowest variable index most significant.
std::vector<std::vector<int>> joint_observation_alphabet(const InstrumentSpec& instrument,
                                                         const bayesnet::DiscreteBayesNet& net);

}  // namespace lifeplan::lds
