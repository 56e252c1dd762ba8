#include <algorithm>
#include <cmath>
#include <map>

#include <doctest.h>

#include "lifeplan/bayesnet.hpp"
#include "lifeplan/error.hpp"
#include "support.hpp"

using namespace lifeplan;
using namespace lifeplan::bayesnet;

namespace {

// s -> a -> b, plus s -> c. All binary.
DiscreteBayesNet chain() {
  std::vector<VariableSpec> vars{{"s", 2, {}, {}}, {"a", 2, {}, {"s"}}, {"b", 2, {}, {"a"}}, {"c", 2, {}, {"s"}}};
  std::vector<ConditionalTable> tables{
      {"s", {{0.5, 0.5}}},
      {"a", {{0.9, 0.1}, {0.2, 0.8}}},
      {"b", {{0.7, 0.3}, {0.4, 0.6}}},
      {"c", {{0.6, 0.4}, {0.1, 0.9}}},
  };
  return {vars, tables};
}

bool has_issue(const DiscreteBayesNet& net, ValidationIssue::Kind kind) {
  for (const auto& i : validate_network(net))
    if (i.kind == kind) return true;
  return false;
}

}  // namespace

TEST_CASE("topological order puts parents first") {
  auto net = chain();
  auto order = topological_order(net);
  REQUIRE(order.size() == 4);
  auto pos = [&](const std::string& id) { return std::find(order.begin(), order.end(), id) - order.begin(); };
  CHECK(pos("s") < pos("a"));
  CHECK(pos("a") < pos("b"));
  CHECK(pos("s") < pos("c"));
  CHECK(validate_network(net).empty());
}

TEST_CASE("a cycle is reported by name") {
  std::vector<VariableSpec> vars{{"r", 2, {}, {}}, {"x", 2, {}, {"r", "y"}}, {"y", 2, {}, {"x"}}};
  std::vector<ConditionalTable> tables{{"r", {{0.5, 0.5}}},
                                       {"x", std::vector<std::vector<double>>(4, {0.5, 0.5})},
                                       {"y", {{0.5, 0.5}, {0.5, 0.5}}}};
  DiscreteBayesNet net(vars, tables);
  CHECK(has_issue(net, ValidationIssue::Kind::Cycle));
  try {
    topological_order(net);
    FAIL("expected CycleError");
  } catch (const CycleError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('x') != std::string::npos);
    CHECK(msg.find('y') != std::string::npos);
  }
}

TEST_CASE("validation flags malformed tables and structure") {
  auto vars = chain().variables();
  auto tables = chain().tables();

  auto bad_sum = tables;
  bad_sum[2].rows[1] = {0.4, 0.5};
  CHECK(has_issue(DiscreteBayesNet(vars, bad_sum), ValidationIssue::Kind::RowSum));

  auto short_table = tables;
  short_table[1].rows.pop_back();
  CHECK(has_issue(DiscreteBayesNet(vars, short_table), ValidationIssue::Kind::MissingRow));

  auto negative = tables;
  negative[3].rows[0] = {1.2, -0.2};
  CHECK(has_issue(DiscreteBayesNet(vars, negative), ValidationIssue::Kind::NegativeEntry));

  auto orphan = vars;
  orphan[2].parents = {"nope"};
  CHECK(has_issue(DiscreteBayesNet(orphan, tables), ValidationIssue::Kind::UnknownParent));

  auto two_roots = vars;
  two_roots[3].parents.clear();
  auto two_roots_tables = tables;
  two_roots_tables[3].rows = {{0.5, 0.5}};
  CHECK(has_issue(DiscreteBayesNet(two_roots, two_roots_tables), ValidationIssue::Kind::RootCount));
}

TEST_CASE("bin_of follows half-open edges with a closed last bin") {
  VariableSpec v{"o_5", 4, {0, 3, 8, 15, 22}, {}};
  CHECK(v.bin_of(0.0) == 0);
  CHECK(v.bin_of(2.999) == 0);
  CHECK(v.bin_of(3.0) == 1);
  CHECK(v.bin_of(14.5) == 2);
  CHECK(v.bin_of(22.0) == 3);
  CHECK_THROWS_AS(v.bin_of(22.5), ValidationError);
  CHECK_THROWS_AS(v.bin_of(-0.1), ValidationError);
}

TEST_CASE("histogram discretization of a bernoulli family") {
  VariableSpec spec{"o", 2, {0, 0.5, 1}, {"s"}};
  ContinuousFamily fam{"o", FamilyKind::Bernoulli, {{0.3, 0}, {0.85, 0}}};
  auto table = discretize(fam, spec, 100000, 7);
  REQUIRE(table.rows.size() == 2);
  // 5 binomial standard errors at n = 1e5
  CHECK(std::abs(table.rows[0][1] - 0.3) < 5 * std::sqrt(0.21 / 1e5));
  CHECK(std::abs(table.rows[1][1] - 0.85) < 5 * std::sqrt(0.85 * 0.15 / 1e5));
  CHECK(table.rows[0][0] + table.rows[0][1] == doctest::Approx(1.0));

  auto again = discretize(fam, spec, 100000, 7);
  CHECK(again.rows == table.rows);
  CHECK_THROWS_AS(discretize(fam, spec, 10, 7), ValidationError);
  CHECK_THROWS_AS(discretize(fam, VariableSpec{"o", 2, {}, {"s"}}, 100000, 7), ValidationError);
}

TEST_CASE("histogram discretization of a truncated gaussian") {
  VariableSpec spec{"g", 3, {-3, -1, 1, 3}, {"s"}};
  ContinuousFamily fam{"g", FamilyKind::TruncatedGaussian, {{0.0, 1.0}}};
  auto table = discretize(fam, spec, 200000, 3);
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  const double z = phi(3) - phi(-3);
  const double outer = (phi(-1) - phi(-3)) / z;
  const double middle = (phi(1) - phi(-1)) / z;
  const double tol = 5 * std::sqrt(0.25 / 200000);
  CHECK(std::abs(table.rows[0][0] - outer) < tol);
  CHECK(std::abs(table.rows[0][1] - middle) < tol);
  CHECK(std::abs(table.rows[0][2] - outer) < tol);
}

TEST_CASE("evidence likelihood on a hand-solved chain") {
  auto net = chain();
  const int b = net.index_of("b"), c = net.index_of("c");
  // P(b=1 | s=1) = 0.2*0.3 + 0.8*0.6
  std::vector<Evidence> ev{{b, 1}};
  CHECK(evidence_likelihood(net, ev, 1) == doctest::Approx(0.2 * 0.3 + 0.8 * 0.6).epsilon(1e-14));
  // P(b=0, c=1 | s=0) = (0.9*0.7 + 0.1*0.4) * 0.4
  std::map<std::string, int> named{{"b", 0}, {"c", 1}};
  CHECK(evidence_likelihood(net, named, 0) == doctest::Approx((0.9 * 0.7 + 0.1 * 0.4) * 0.4).epsilon(1e-14));
  CHECK(evidence_likelihood(net, std::vector<Evidence>{}, 0) == doctest::Approx(1.0));
  std::vector<Evidence> on_root{{net.index_of("s"), 1}};
  CHECK_THROWS_AS(evidence_likelihood(net, on_root, 0), Error);
  std::vector<Evidence> bad_bin{{c, 2}};
  CHECK_THROWS_AS(evidence_likelihood(net, bad_bin, 0), Error);
}

TEST_CASE("zero-probability evidence gives zero") {
  auto vars = chain().variables();
  auto tables = chain().tables();
  tables[3].rows[1] = {0.0, 1.0};
  DiscreteBayesNet net(vars, tables);
  std::vector<Evidence> ev{{net.index_of("c"), 0}};
  CHECK(evidence_likelihood(net, ev, 1) == 0.0);
}

TEST_CASE("variable elimination agrees with enumeration on random networks") {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    auto net = testing::random_network(rng, 5, 3);
    REQUIRE(validate_network(net).empty());
    std::map<int, int> ev;
    std::vector<Evidence> list;
    for (int v = 1; v < static_cast<int>(net.size()); ++v) {
      if (rng() % 2) continue;
      const int bin = static_cast<int>(rng() % net.variables()[v].cardinality);
      ev[v] = bin;
      list.push_back({v, bin});
    }
    for (int r = 0; r < net.variables()[0].cardinality; ++r)
      CHECK(std::abs(evidence_likelihood(net, list, r) - testing::enumerate_likelihood(net, ev, r)) < 1e-12);
  }
}

TEST_CASE("ancestral sampling frequencies follow the tables") {
  auto net = chain();
  Rng rng(5);
  const int n = 40000;
  int b_hits = 0;
  for (int i = 0; i < n; ++i) {
    auto x = sample_ancestral(net, 1, rng);
    CHECK(x[0] == 1);
    b_hits += x[net.index_of("b")];
  }
  const double p = 0.2 * 0.3 + 0.8 * 0.6;
  CHECK(std::abs(b_hits / double(n) - p) < 5 * std::sqrt(p * (1 - p) / n));
  CHECK(sample_ancestral(net, 0, std::uint64_t{11}) == sample_ancestral(net, 0, std::uint64_t{11}));
}

TEST_CASE("network definitions round-trip through text") {
  auto def = lds::default_network_definition({});
  const std::string text = dump_network_definition(def);
  auto back = parse_network_definition(text);
  CHECK(dump_network_definition(back) == text);
  REQUIRE(back.variables.size() == def.variables.size());
  for (std::size_t i = 0; i < def.variables.size(); ++i) {
    CHECK(back.variables[i].id == def.variables[i].id);
    CHECK(back.variables[i].bin_edges == def.variables[i].bin_edges);
    CHECK(back.families[i].has_value() == def.families[i].has_value());
    if (def.families[i]) CHECK(back.families[i]->rows == def.families[i]->rows);
  }
}

TEST_CASE("malformed network files are rejected") {
  CHECK_THROWS_AS(parse_network_definition("{not json"), ParseError);
  CHECK_THROWS_AS(parse_network_definition(R"({"format":"other/1","variables":[]})"), ParseError);
  CHECK_THROWS_AS(parse_network_definition(R"({"format":"lifeplan-network/1"})"), ParseError);
  CHECK_THROWS_AS(load_network_definition("/nonexistent/net.json"), IoError);
  CHECK_THROWS_AS(family_kind_from_string("lognormal"), ParseError);
}
