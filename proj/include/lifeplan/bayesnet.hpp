#pragma once

// Discrete Bayesian networks over categorical variables: representation,
// structural validation, ancestral sampling, histogram discretization of
// continuous conditional families, and exact evidence likelihoods by
// variable elimination.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lifeplan/rng.hpp"

namespace lifeplan::bayesnet {

struct VariableSpec {
  std::string id;
  int cardinality = 2;
  /// Empty, or cardinality + 1 strictly ascending boundaries in native units.
  std::vector<double> bin_edges;
  std::vector<std::string> parents;

  bool has_edges() const { return !bin_edges.empty(); }
  double lower() const { return bin_edges.front(); }
  double upper() const { return bin_edges.back(); }

  /// Bin holding x: edges[i] <= x < edges[i+1]; the last bin is closed.
  /// Throws ValidationError when x lies outside [lower(), upper()].
  int bin_of(double x) const;
};

/// Rows are indexed by the joint parent assignment in mixed radix, first
/// listed parent most significant. A parentless variable has one row.
struct ConditionalTable {
  std::string variable;
  std::vector<std::vector<double>> rows;
};

enum class FamilyKind { Bernoulli, TruncatedCount, TruncatedGaussian, BetaScaled };

std::string_view to_string(FamilyKind kind);
FamilyKind family_kind_from_string(std::string_view name);

/// Parameters of one family row, in the variable's native units.
///   bernoulli           first = P(value = 1)
///   truncated-count     first = Poisson mean
///   truncated-gaussian  first = mean, second = standard deviation
///   beta-scaled         first = alpha, second = beta (mapped onto [lower, upper])
struct FamilyParams {
  double first = 0.0;
  double second = 0.0;

  friend bool operator==(const FamilyParams&, const FamilyParams&) = default;
};

struct ContinuousFamily {
  std::string variable;
  FamilyKind kind = FamilyKind::Bernoulli;
  std::vector<FamilyParams> rows;

  /// Draws one native-unit value from row `row`, truncated to the spec's
  /// declared range.
  double sample(std::size_t row, const VariableSpec& spec, Rng& rng) const;
};

struct ValidationIssue {
  enum class Kind { BadSpec, UnknownParent, Cycle, RootCount, MissingTable, MissingRow, RowSum, NegativeEntry };
  Kind kind;
  std::string message;
};

std::string_view to_string(ValidationIssue::Kind kind);

/// Variables and their conditional tables. Construction never throws on
/// semantic problems; validate_network() reports them and the inference
/// entry points refuse networks that do not validate.
class DiscreteBayesNet {
 public:
  DiscreteBayesNet() = default;
  DiscreteBayesNet(std::vector<VariableSpec> variables, std::vector<ConditionalTable> tables);

  const std::vector<VariableSpec>& variables() const { return variables_; }
  /// Aligned with variables(); entry i is the table of variable i (possibly
  /// empty if none was supplied).
  const std::vector<ConditionalTable>& tables() const { return tables_; }
  std::size_t size() const { return variables_.size(); }

  std::optional<int> find(std::string_view id) const;
  /// Throws Error for unknown ids.
  int index_of(std::string_view id) const;
  /// The (first) parentless variable, or -1 when there is none.
  int root_index() const { return root_; }
  const std::string& root() const;
  const std::vector<int>& parent_indices(int var) const { return parents_[var]; }
  /// Empty when the parent graph has a cycle or an unknown parent.
  const std::vector<int>& topological_indices() const { return topo_; }

  /// Row of `var`'s table selected by the parent values in `assignment`
  /// (indexed by variable).
  std::size_t row_index(int var, std::span<const int> assignment) const;
  double probability(int var, std::span<const int> assignment) const;

 private:
  std::vector<VariableSpec> variables_;
  std::vector<ConditionalTable> tables_;
  std::vector<std::vector<int>> parents_;
  std::vector<int> topo_;
  int root_ = -1;
};

std::vector<ValidationIssue> validate_network(const DiscreteBayesNet& net);

/// Variable ids with every variable after all of its parents. Throws
/// CycleError (message names the cycle) or ValidationError.
std::vector<std::string> topological_order(const DiscreteBayesNet& net);

/// Histogram binning of a continuous family by Monte Carlo sampling.
/// Deterministic for a given seed. Throws ValidationError if the spec has no
/// bin edges, samples_per_row is too small, or a sample escapes the range.
ConditionalTable discretize(const ContinuousFamily& family, const VariableSpec& spec,
                            std::size_t samples_per_row, std::uint64_t seed);

inline constexpr std::size_t kMinSamplesPerRow = 10000;
inline constexpr std::size_t kDefaultSamplesPerRow = 100000;

/// Bin indices for every variable, drawn in topological order with the root
/// clamped to root_bin.
std::vector<int> sample_ancestral(const DiscreteBayesNet& net, int root_bin, Rng& rng);
std::vector<int> sample_ancestral(const DiscreteBayesNet& net, int root_bin, std::uint64_t seed);

/// Structure plus one continuous family per non-root variable. Used by the
/// simulator to generate native-unit measurements.
struct ContinuousNetwork {
  std::vector<VariableSpec> variables;
  std::vector<std::optional<ContinuousFamily>> families;  // aligned; root has none
  int root = -1;
  std::vector<int> topological;  // variable indices
  std::vector<std::vector<int>> parents;
};

/// Builds the index caches of a ContinuousNetwork (topological order and
/// parent indices). Throws ValidationError on structural problems.
ContinuousNetwork make_continuous_network(std::vector<VariableSpec> variables,
                                          std::vector<std::optional<ContinuousFamily>> families);

/// Native-unit values for every variable. Child rows are selected by the bin
/// of each parent's native value.
std::vector<double> sample_ancestral(const ContinuousNetwork& net, double root_value, Rng& rng);

struct Evidence {
  int variable;
  int bin;
};

/// P(evidence | root = root_bin) by variable elimination over the unobserved
/// non-root variables (reverse topological order). Evidence on the root or on
/// unknown variables throws Error. Zero-probability evidence returns 0.
double evidence_likelihood(const DiscreteBayesNet& net, std::span<const Evidence> evidence, int root_bin);
double evidence_likelihood(const DiscreteBayesNet& net, const std::map<std::string, int>& evidence,
                           int root_bin);

// ---------------------------------------------------------------------------
// Network definition files

/// A network as described on disk: per non-root variable either a continuous
/// family (discretized on load) or an explicit table.
struct NetworkDefinition {
  std::vector<VariableSpec> variables;
  std::vector<std::optional<ContinuousFamily>> families;
  std::vector<std::optional<ConditionalTable>> tables;
};

NetworkDefinition parse_network_definition(std::string_view json_text);
NetworkDefinition load_network_definition(const std::string& path);
std::string dump_network_definition(const NetworkDefinition& def);

/// Discrete network from a definition. The root gets a uniform placeholder
/// table (the prior over the root lives outside the network).
DiscreteBayesNet discretize_network(const NetworkDefinition& def, std::size_t samples_per_row,
                                    std::uint64_t seed);
ContinuousNetwork continuous_network(const NetworkDefinition& def);

}  // namespace lifeplan::bayesnet
