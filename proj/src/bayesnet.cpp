#include "lifeplan/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "lifeplan/error.hpp"

namespace lifeplan::bayesnet {

namespace {

constexpr double kRowSumTolerance = 1e-9;

// Kahn's algorithm, smallest index first so the order is stable.
std::vector<int> kahn_order(const std::vector<std::vector<int>>& parents) {
  const int n = static_cast<int>(parents.size());
  std::vector<int> pending(n, 0);
  std::vector<std::vector<int>> children(n);
  for (int v = 0; v < n; ++v) {
    for (int p : parents[v]) {
      children[p].push_back(v);
      ++pending[v];
    }
  }
  std::set<int> ready;
  for (int v = 0; v < n; ++v)
    if (pending[v] == 0) ready.insert(v);
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (int c : children[v])
      if (--pending[c] == 0) ready.insert(c);
  }
  if (static_cast<int>(order.size()) != n) order.clear();
  return order;
}

// Some cycle in the parent graph, as variable indices with the first node
// repeated at the end. Empty when the graph is acyclic.
std::vector<int> find_cycle(const std::vector<std::vector<int>>& parents) {
  const int n = static_cast<int>(parents.size());
  std::vector<int> color(n, 0), via(n, -1);
  for (int start = 0; start < n; ++start) {
    if (color[start] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
    color[start] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < parents[v].size()) {
        int p = parents[v][next++];
        if (color[p] == 1) {
          // p is on the stack: walk back from v to p.
          std::vector<int> cycle{p};
          for (int w = v; w != p; w = via[w]) cycle.push_back(w);
          cycle.push_back(p);
          // Reverse so arrows read parent -> child.
          std::reverse(cycle.begin(), cycle.end());
          return cycle;
        }
        if (color[p] == 0) {
          color[p] = 1;
          via[p] = v;
          stack.emplace_back(p, 0);
        }
      } else {
        color[v] = 2;
        stack.pop_back();
      }
    }
  }
  return {};
}

std::string describe_cycle(const std::vector<VariableSpec>& vars, const std::vector<int>& cycle) {
  std::string out;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    if (i) out += " -> ";
    out += vars[cycle[i]].id;
  }
  return out;
}

std::vector<std::vector<int>> resolve_parents(const std::vector<VariableSpec>& vars) {
  std::vector<std::vector<int>> parents(vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v) {
    for (const auto& pid : vars[v].parents) {
      for (std::size_t u = 0; u < vars.size(); ++u) {
        if (vars[u].id == pid) {
          parents[v].push_back(static_cast<int>(u));
          break;
        }
      }
    }
  }
  return parents;
}

// A table factor over ascending variable indices; the last variable varies
// fastest in `values`.
struct Factor {
  std::vector<int> vars;
  std::vector<int> cards;
  std::vector<double> values;

  std::size_t stride_of(int var) const {
    std::size_t stride = 1;
    for (std::size_t i = vars.size(); i-- > 0;) {
      if (vars[i] == var) return stride;
      stride *= static_cast<std::size_t>(cards[i]);
    }
    return 0;
  }
};

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(out.vars));
  std::size_t total = 1;
  std::vector<std::size_t> sa, sb;
  for (int v : out.vars) {
    auto ia = std::find(a.vars.begin(), a.vars.end(), v);
    int card = ia != a.vars.end() ? a.cards[ia - a.vars.begin()]
                                  : b.cards[std::find(b.vars.begin(), b.vars.end(), v) - b.vars.begin()];
    out.cards.push_back(card);
    sa.push_back(a.stride_of(v));
    sb.push_back(b.stride_of(v));
    total *= static_cast<std::size_t>(card);
  }
  out.values.resize(total);
  std::vector<int> digit(out.vars.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t k = 0; k < total; ++k) {
    out.values[k] = a.values[ia] * b.values[ib];
    for (std::size_t d = out.vars.size(); d-- > 0;) {
      if (++digit[d] < out.cards[d]) {
        ia += sa[d];
        ib += sb[d];
        break;
      }
      ia -= sa[d] * static_cast<std::size_t>(out.cards[d] - 1);
      ib -= sb[d] * static_cast<std::size_t>(out.cards[d] - 1);
      digit[d] = 0;
    }
  }
  return out;
}

Factor sum_out(const Factor& f, int var) {
  auto it = std::find(f.vars.begin(), f.vars.end(), var);
  const std::size_t pos = static_cast<std::size_t>(it - f.vars.begin());
  Factor out;
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    if (i == pos) continue;
    out.vars.push_back(f.vars[i]);
    out.cards.push_back(f.cards[i]);
  }
  std::size_t inner = 1;
  for (std::size_t i = pos + 1; i < f.vars.size(); ++i) inner *= static_cast<std::size_t>(f.cards[i]);
  const std::size_t card = static_cast<std::size_t>(f.cards[pos]);
  const std::size_t outer = f.values.size() / (inner * card);
  out.values.assign(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < card; ++c)
      for (std::size_t i = 0; i < inner; ++i) out.values[o * inner + i] += f.values[(o * card + c) * inner + i];
  return out;
}

void require_valid(const DiscreteBayesNet& net) {
  auto issues = validate_network(net);
  if (!issues.empty()) throw ValidationError("network does not validate: " + issues.front().message);
}

}  // namespace

// ---------------------------------------------------------------------------

int VariableSpec::bin_of(double x) const {
  if (!has_edges()) {
    const double r = std::round(x);
    if (r != x || r < 0 || r >= cardinality)
      throw ValidationError("value " + std::to_string(x) + " is not a bin of '" + id + "'");
    return static_cast<int>(r);
  }
  if (!(x >= bin_edges.front() && x <= bin_edges.back()))
    throw ValidationError("value " + std::to_string(x) + " outside range of '" + id + "'");
  auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), x);
  int bin = static_cast<int>(it - bin_edges.begin()) - 1;
  return std::min(bin, cardinality - 1);
}

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Bernoulli: return "bernoulli";
    case FamilyKind::TruncatedCount: return "truncated-count";
    case FamilyKind::TruncatedGaussian: return "truncated-gaussian";
    case FamilyKind::BetaScaled: return "beta-scaled";
  }
  return "?";
}

FamilyKind family_kind_from_string(std::string_view name) {
  for (auto k : {FamilyKind::Bernoulli, FamilyKind::TruncatedCount, FamilyKind::TruncatedGaussian,
                 FamilyKind::BetaScaled})
    if (to_string(k) == name) return k;
  throw ParseError("unknown family kind '" + std::string(name) + "'");
}

std::string_view to_string(ValidationIssue::Kind kind) {
  using K = ValidationIssue::Kind;
  switch (kind) {
    case K::BadSpec: return "bad-spec";
    case K::UnknownParent: return "unknown-parent";
    case K::Cycle: return "cycle";
    case K::RootCount: return "root-count";
    case K::MissingTable: return "missing-table";
    case K::MissingRow: return "missing-row";
    case K::RowSum: return "row-sum";
    case K::NegativeEntry: return "negative-entry";
  }
  return "?";
}

double ContinuousFamily::sample(std::size_t row, const VariableSpec& spec, Rng& rng) const {
  const FamilyParams& p = rows.at(row);
  switch (kind) {
    case FamilyKind::Bernoulli:
      return uniform01(rng) < p.first ? 1.0 : 0.0;
    case FamilyKind::TruncatedCount: {
      // Inverse CDF over the Poisson pmf restricted to the integer range.
      const int lo = static_cast<int>(std::ceil(spec.lower()));
      const int hi = static_cast<int>(std::floor(spec.upper()));
      double total = 0.0;
      std::vector<double> pmf(static_cast<std::size_t>(hi - lo + 1));
      for (int k = lo; k <= hi; ++k) {
        double w = p.first > 0 ? std::exp(k * std::log(p.first) - p.first - std::lgamma(k + 1.0))
                               : (k == 0 ? 1.0 : 0.0);
        pmf[static_cast<std::size_t>(k - lo)] = w;
        total += w;
      }
      if (!(total > 0)) return static_cast<double>(p.first < lo ? lo : hi);
      double u = uniform01(rng) * total;
      for (int k = lo; k <= hi; ++k) {
        u -= pmf[static_cast<std::size_t>(k - lo)];
        if (u < 0) return k;
      }
      return hi;
    }
    case FamilyKind::TruncatedGaussian: {
      const double lo = spec.lower(), hi = spec.upper();
      if (!(p.second > 0)) return std::clamp(p.first, lo, hi);
      boost::math::normal_distribution<double> nd(p.first, p.second);
      const double cl = boost::math::cdf(nd, lo);
      const double ch = boost::math::cdf(nd, hi);
      if (!(ch - cl > 1e-300)) return p.first < lo ? lo : hi;
      const double u = cl + uniform01(rng) * (ch - cl);
      if (u <= 0.0) return lo;
      if (u >= 1.0) return hi;
      return std::clamp(boost::math::quantile(nd, u), lo, hi);
    }
    case FamilyKind::BetaScaled: {
      std::gamma_distribution<double> ga(p.first, 1.0), gb(p.second, 1.0);
      const double x = ga(rng);
      const double y = gb(rng);
      const double t = (x + y) > 0 ? x / (x + y) : 0.5;
      return std::clamp(spec.lower() + t * (spec.upper() - spec.lower()), spec.lower(), spec.upper());
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

DiscreteBayesNet::DiscreteBayesNet(std::vector<VariableSpec> variables, std::vector<ConditionalTable> tables)
    : variables_(std::move(variables)) {
  tables_.resize(variables_.size());
  for (std::size_t v = 0; v < variables_.size(); ++v) tables_[v].variable = variables_[v].id;
  for (auto& t : tables) {
    for (std::size_t v = 0; v < variables_.size(); ++v) {
      if (variables_[v].id == t.variable) {
        tables_[v] = std::move(t);
        break;
      }
    }
  }
  parents_ = resolve_parents(variables_);
  bool parents_known = true;
  for (std::size_t v = 0; v < variables_.size(); ++v)
    if (parents_[v].size() != variables_[v].parents.size()) parents_known = false;
  if (parents_known) topo_ = kahn_order(parents_);
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    if (variables_[v].parents.empty()) {
      root_ = static_cast<int>(v);
      break;
    }
  }
}

std::optional<int> DiscreteBayesNet::find(std::string_view id) const {
  for (std::size_t v = 0; v < variables_.size(); ++v)
    if (variables_[v].id == id) return static_cast<int>(v);
  return std::nullopt;
}

int DiscreteBayesNet::index_of(std::string_view id) const {
  if (auto v = find(id)) return *v;
  throw Error("unknown variable '" + std::string(id) + "'");
}

const std::string& DiscreteBayesNet::root() const {
  static const std::string none;
  return root_ >= 0 ? variables_[root_].id : none;
}

std::size_t DiscreteBayesNet::row_index(int var, std::span<const int> assignment) const {
  std::size_t row = 0;
  for (int p : parents_[var]) row = row * static_cast<std::size_t>(variables_[p].cardinality) + assignment[p];
  return row;
}

double DiscreteBayesNet::probability(int var, std::span<const int> assignment) const {
  return tables_[var].rows[row_index(var, assignment)][assignment[var]];
}

// ---------------------------------------------------------------------------

std::vector<ValidationIssue> validate_network(const DiscreteBayesNet& net) {
  using K = ValidationIssue::Kind;
  std::vector<ValidationIssue> issues;
  const auto& vars = net.variables();
  std::set<std::string> seen_ids;
  for (const auto& v : vars) {
    if (!seen_ids.insert(v.id).second) issues.push_back({K::BadSpec, "duplicate variable id '" + v.id + "'"});
    if (v.cardinality < 2)
      issues.push_back({K::BadSpec, "variable '" + v.id + "' has cardinality " + std::to_string(v.cardinality)});
    if (v.has_edges()) {
      if (v.bin_edges.size() != static_cast<std::size_t>(v.cardinality) + 1)
        issues.push_back({K::BadSpec, "variable '" + v.id + "' needs cardinality + 1 bin edges"});
      for (std::size_t i = 1; i < v.bin_edges.size(); ++i)
        if (!(v.bin_edges[i] > v.bin_edges[i - 1])) {
          issues.push_back({K::BadSpec, "bin edges of '" + v.id + "' are not strictly ascending"});
          break;
        }
    }
    std::set<std::string> ps;
    for (const auto& p : v.parents) {
      if (p == v.id) issues.push_back({K::BadSpec, "variable '" + v.id + "' lists itself as a parent"});
      if (!ps.insert(p).second) issues.push_back({K::BadSpec, "variable '" + v.id + "' repeats parent '" + p + "'"});
      if (!net.find(p)) issues.push_back({K::UnknownParent, "variable '" + v.id + "' has unknown parent '" + p + "'"});
    }
  }

  const auto parents = resolve_parents(vars);
  auto cycle = find_cycle(parents);
  if (!cycle.empty()) issues.push_back({K::Cycle, "cycle " + describe_cycle(vars, cycle)});

  const auto roots = std::count_if(vars.begin(), vars.end(), [](const VariableSpec& v) { return v.parents.empty(); });
  if (roots != 1)
    issues.push_back({K::RootCount, "expected exactly one parentless root variable, found " + std::to_string(roots)});

  for (std::size_t i = 0; i < vars.size(); ++i) {
    const int v = static_cast<int>(i);
    const auto& table = net.tables()[i];
    if (table.rows.empty()) {
      issues.push_back({K::MissingTable, "variable '" + vars[i].id + "' has no conditional table"});
      continue;
    }
    std::size_t expected = 1;
    for (int p : parents[i]) expected *= static_cast<std::size_t>(std::max(vars[p].cardinality, 0));
    if (table.rows.size() != expected) {
      issues.push_back({K::MissingRow, "table of '" + vars[i].id + "' has " + std::to_string(table.rows.size()) +
                                           " rows, expected " + std::to_string(expected)});
    }
    (void)v;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      if (row.size() != static_cast<std::size_t>(vars[i].cardinality)) {
        issues.push_back({K::MissingRow, "row " + std::to_string(r) + " of '" + vars[i].id + "' has " +
                                             std::to_string(row.size()) + " entries"});
        continue;
      }
      double sum = 0.0;
      bool negative = false;
      for (double x : row) {
        if (x < 0 || !std::isfinite(x)) negative = true;
        sum += x;
      }
      if (negative)
        issues.push_back({K::NegativeEntry, "row " + std::to_string(r) + " of '" + vars[i].id + "' has a negative or non-finite entry"});
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        std::ostringstream msg;
        msg << "row " << r << " of '" << vars[i].id << "' sums to " << sum;
        issues.push_back({K::RowSum, msg.str()});
      }
    }
  }
  return issues;
}

std::vector<std::string> topological_order(const DiscreteBayesNet& net) {
  const auto parents = resolve_parents(net.variables());
  for (std::size_t v = 0; v < net.size(); ++v)
    if (parents[v].size() != net.variables()[v].parents.size())
      throw ValidationError("variable '" + net.variables()[v].id + "' has an unknown parent");
  auto order = kahn_order(parents);
  if (order.empty() && net.size() > 0)
    throw CycleError("cycle detected: " + describe_cycle(net.variables(), find_cycle(parents)));
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (int v : order) ids.push_back(net.variables()[v].id);
  return ids;
}

ConditionalTable discretize(const ContinuousFamily& family, const VariableSpec& spec, std::size_t samples_per_row,
                            std::uint64_t seed) {
  if (!spec.has_edges()) throw ValidationError("cannot discretize '" + spec.id + "': no bin edges");
  if (samples_per_row < kMinSamplesPerRow)
    throw ValidationError("samples_per_row must be at least " + std::to_string(kMinSamplesPerRow));
  if (family.rows.empty()) throw ValidationError("family of '" + spec.id + "' has no rows");
  ConditionalTable table;
  table.variable = spec.id;
  table.rows.reserve(family.rows.size());
  for (std::size_t r = 0; r < family.rows.size(); ++r) {
    Rng rng = make_stream(seed, r);
    std::vector<std::size_t> counts(static_cast<std::size_t>(spec.cardinality), 0);
    for (std::size_t n = 0; n < samples_per_row; ++n) {
      const double x = family.sample(r, spec, rng);
      if (!(x >= spec.lower() && x <= spec.upper()))
        throw ValidationError("family of '" + spec.id + "' produced " + std::to_string(x) + " outside its range");
      ++counts[static_cast<std::size_t>(spec.bin_of(x))];
    }
    std::vector<double> row(counts.size());
    for (std::size_t b = 0; b < counts.size(); ++b)
      row[b] = static_cast<double>(counts[b]) / static_cast<double>(samples_per_row);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<int> sample_ancestral(const DiscreteBayesNet& net, int root_bin, Rng& rng) {
  require_valid(net);
  const int root = net.root_index();
  if (root_bin < 0 || root_bin >= net.variables()[root].cardinality)
    throw ValidationError("root value " + std::to_string(root_bin) + " out of range");
  std::vector<int> assignment(net.size(), 0);
  assignment[root] = root_bin;
  for (int v : net.topological_indices()) {
    if (v == root) continue;
    const auto& row = net.tables()[v].rows[net.row_index(v, assignment)];
    double u = uniform01(rng);
    int bin = static_cast<int>(row.size()) - 1;
    for (std::size_t b = 0; b < row.size(); ++b) {
      u -= row[b];
      if (u < 0) {
        bin = static_cast<int>(b);
        break;
      }
    }
    // Guard against rounding leaving u just above zero on a zero-mass tail.
    while (bin > 0 && row[bin] == 0.0) --bin;
    assignment[v] = bin;
  }
  return assignment;
}

std::vector<int> sample_ancestral(const DiscreteBayesNet& net, int root_bin, std::uint64_t seed) {
  Rng rng(seed);
  return sample_ancestral(net, root_bin, rng);
}

ContinuousNetwork make_continuous_network(std::vector<VariableSpec> variables,
                                          std::vector<std::optional<ContinuousFamily>> families) {
  ContinuousNetwork net;
  net.variables = std::move(variables);
  net.families = std::move(families);
  net.families.resize(net.variables.size());
  net.parents = resolve_parents(net.variables);
  for (std::size_t v = 0; v < net.variables.size(); ++v) {
    if (net.parents[v].size() != net.variables[v].parents.size())
      throw ValidationError("variable '" + net.variables[v].id + "' has an unknown parent");
    if (net.variables[v].parents.empty()) {
      if (net.root >= 0) throw ValidationError("more than one parentless variable");
      net.root = static_cast<int>(v);
    } else {
      if (!net.families[v]) throw ValidationError("variable '" + net.variables[v].id + "' has no continuous family");
      std::size_t rows = 1;
      for (int p : net.parents[v]) rows *= static_cast<std::size_t>(net.variables[p].cardinality);
      if (net.families[v]->rows.size() != rows)
        throw ValidationError("family of '" + net.variables[v].id + "' has " +
                              std::to_string(net.families[v]->rows.size()) + " rows, expected " + std::to_string(rows));
    }
  }
  if (net.root < 0) throw ValidationError("network has no root");
  net.topological = kahn_order(net.parents);
  if (net.topological.empty() && !net.variables.empty()) throw CycleError("continuous network has a cycle");
  return net;
}

std::vector<double> sample_ancestral(const ContinuousNetwork& net, double root_value, Rng& rng) {
  const auto& root_spec = net.variables[net.root];
  (void)root_spec.bin_of(root_value);  // range check
  std::vector<double> values(net.variables.size(), 0.0);
  std::vector<int> bins(net.variables.size(), 0);
  values[net.root] = root_value;
  bins[net.root] = root_spec.bin_of(root_value);
  for (int v : net.topological) {
    if (v == net.root) continue;
    std::size_t row = 0;
    for (int p : net.parents[v]) row = row * static_cast<std::size_t>(net.variables[p].cardinality) + bins[p];
    values[v] = net.families[v]->sample(row, net.variables[v], rng);
    bins[v] = net.variables[v].bin_of(values[v]);
  }
  return values;
}

double evidence_likelihood(const DiscreteBayesNet& net, std::span<const Evidence> evidence, int root_bin) {
  require_valid(net);
  const int root = net.root_index();
  const int n = static_cast<int>(net.size());
  if (root_bin < 0 || root_bin >= net.variables()[root].cardinality)
    throw Error("root value " + std::to_string(root_bin) + " out of range");

  // -1 = free, otherwise clamped bin.
  std::vector<int> clamp(n, -1);
  clamp[root] = root_bin;
  for (const auto& e : evidence) {
    if (e.variable < 0 || e.variable >= n) throw Error("unknown evidence variable index " + std::to_string(e.variable));
    if (e.variable == root) throw Error("evidence on the root variable '" + net.root() + "'");
    if (e.bin < 0 || e.bin >= net.variables()[e.variable].cardinality)
      throw Error("evidence bin " + std::to_string(e.bin) + " out of range for '" + net.variables()[e.variable].id + "'");
    clamp[e.variable] = e.bin;
  }

  std::vector<Factor> factors;
  factors.reserve(n);
  std::vector<int> assignment(n, 0);
  for (int v = 0; v < n; ++v) {
    if (v == root) continue;
    Factor f;
    std::vector<int> scope = net.parent_indices(v);
    scope.push_back(v);
    std::sort(scope.begin(), scope.end());
    for (int u : scope) {
      if (clamp[u] >= 0) {
        assignment[u] = clamp[u];
      } else {
        f.vars.push_back(u);
        f.cards.push_back(net.variables()[u].cardinality);
      }
    }
    std::size_t total = 1;
    for (int c : f.cards) total *= static_cast<std::size_t>(c);
    f.values.resize(total);
    std::vector<int> digit(f.vars.size(), 0);
    for (std::size_t k = 0; k < total; ++k) {
      for (std::size_t d = 0; d < f.vars.size(); ++d) assignment[f.vars[d]] = digit[d];
      f.values[k] = net.probability(v, assignment);
      for (std::size_t d = f.vars.size(); d-- > 0;) {
        if (++digit[d] < f.cards[d]) break;
        digit[d] = 0;
      }
    }
    factors.push_back(std::move(f));
  }

  // Eliminate free variables in reverse topological order. Products are
  // rescaled when they drift towards underflow; the scale is restored at the
  // end.
  double log_scale = 0.0;
  const auto& topo = net.topological_indices();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const int v = *it;
    if (clamp[v] >= 0) continue;
    std::vector<Factor> keep, bucket;
    for (auto& f : factors) {
      if (std::binary_search(f.vars.begin(), f.vars.end(), v))
        bucket.push_back(std::move(f));
      else
        keep.push_back(std::move(f));
    }
    if (bucket.empty()) {
      factors = std::move(keep);
      continue;
    }
    Factor prod = std::move(bucket.front());
    for (std::size_t i = 1; i < bucket.size(); ++i) prod = multiply(prod, bucket[i]);
    Factor reduced = sum_out(prod, v);
    const double peak = reduced.values.empty() ? 0.0 : *std::max_element(reduced.values.begin(), reduced.values.end());
    if (peak > 0 && peak < 1e-150) {
      for (double& x : reduced.values) x /= peak;
      log_scale += std::log(peak);
    }
    keep.push_back(std::move(reduced));
    factors = std::move(keep);
  }

  double result = 1.0;
  for (const auto& f : factors) result *= f.values.at(0);
  if (log_scale != 0.0) result *= std::exp(log_scale);
  return std::clamp(result, 0.0, 1.0);
}

double evidence_likelihood(const DiscreteBayesNet& net, const std::map<std::string, int>& evidence, int root_bin) {
  std::vector<Evidence> ev;
  ev.reserve(evidence.size());
  for (const auto& [id, bin] : evidence) ev.push_back({net.index_of(id), bin});
  return evidence_likelihood(net, ev, root_bin);
}

}  // namespace lifeplan::bayesnet
