#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <doctest.h>

#include "lifeplan/error.hpp"
#include "lifeplan/solver.hpp"
#include "support.hpp"

using namespace lifeplan;
using namespace lifeplan::solver;
using lifeplan::pomdp::Belief;
using lifeplan::pomdp::PomdpModel;

TEST_CASE("zero-reward model is worth nothing everywhere") {
  auto t = testing::toys::declare();
  for (double& r : t.rewards) r = 0.0;
  PomdpModel m(t);
  auto p = solve(m, Belief{{0.5, 0.5}}, {});
  CHECK(p.meta.converged);
  for (double b : {0.0, 0.3, 1.0}) CHECK(std::abs(policy_value(p, Belief{{1 - b, b}})) < 1e-9);
}

TEST_CASE("two-state oracle agrees with expectimax and hand values") {
  SUBCASE("envelope keeps only lines on top inside [0, 1]") {
    auto env = testing::upper_envelope({{0, 0}, {1, -5}, {-5, 1}, {0.2, 0.2}, {-1, -1}});
    CHECK(env.size() == 3);
    CHECK(env[1] == testing::Line{0.2, 0.2});
    auto sum = testing::envelope_sum(env, {{0, 1}});
    CHECK(sum.size() == 3);
    CHECK(testing::TwoStateValue{sum}(0.3) == doctest::Approx(testing::TwoStateValue{env}(0.3) + 0.3));
  }
  SUBCASE("an action-free model has its blind value") {
    // one action, no sensing: V = r / (1 - g) when the state never moves
    pomdp::ModelTables t;
    t.num_states = 2;
    t.num_actions = 1;
    t.discount = 0.5;
    t.action_names = {"wait"};
    t.alphabet_sizes = {1};
    t.visible = {0, 0};
    t.terminal = {0, 0};
    t.transitions = {{{0, 1.0}}, {{1, 1.0}}};
    t.rewards = {-1, 3};
    t.observations = {{1.0}, {1.0}};
    auto v = testing::two_state_value(t);
    CHECK(v(0.0) == doctest::Approx(-2.0));
    CHECK(v(1.0) == doctest::Approx(6.0));
  }
  for (const auto& t : {testing::toys::tiger(), testing::toys::maintenance(), testing::toys::declare()}) {
    const auto v = testing::two_state_value(t);
    REQUIRE(v.error_bound < 1e-5);
    const auto [rlo, rhi] = testing::reward_range(t);
    for (double x : {0.1, 0.5, 0.8}) {
      const std::vector<double> b{1 - x, x};
      CHECK(v(x) >= testing::expectimax(t, b, 5, rlo / (1 - t.discount)) - v.error_bound);
      CHECK(v(x) <= testing::expectimax(t, b, 5, rhi / (1 - t.discount)) + v.error_bound);
    }
  }
}

TEST_CASE("tiger value at the uniform belief is bracketed by expectimax") {
  auto t = testing::toys::tiger();
  PomdpModel m(t);
  SolveOptions opt;
  opt.precision = 1e-3;
  auto p = solve(m, Belief{{0.5, 0.5}}, opt);
  REQUIRE(p.meta.converged);
  CHECK(p.meta.lower <= p.meta.upper + 1e-9);
  CHECK(p.meta.gap() <= opt.precision + 1e-12);
  auto [rlo, rhi] = testing::reward_range(t);
  const double lo = testing::expectimax(t, {0.5, 0.5}, 8, rlo / (1 - t.discount));
  const double hi = testing::expectimax(t, {0.5, 0.5}, 8, rhi / (1 - t.discount));
  CHECK(p.meta.lower >= lo - opt.precision);
  CHECK(p.meta.lower <= hi + opt.precision);
  // listening is the only sensible first move when undecided
  CHECK(policy_action(p, Belief{{0.5, 0.5}}) == 0);
  CHECK(policy_action(p, Belief{{0.0, 1.0}}) == 1);
}

TEST_CASE("bounds move monotonically and stay ordered") {
  auto t = testing::toys::maintenance();
  PomdpModel m(t);
  Sarsop s(m, Belief{{1.0, 0.0}}, {});
  for (int i = 0; i < 200 && !s.step(); ++i) {
  }
  const auto& tr = s.trace();
  REQUIRE(tr.size() >= 2);
  for (std::size_t i = 1; i < tr.size(); ++i) {
    CHECK(tr[i].lower >= tr[i - 1].lower - 1e-12);
    CHECK(tr[i].upper <= tr[i - 1].upper + 1e-12);
  }
  for (const auto& b : s.sampled_beliefs()) CHECK(s.lower(b) <= s.upper(b) + 1e-6);
  for (double x = 0.0; x <= 1.0; x += 0.05) {
    Belief b{{1 - x, x}};
    CHECK(s.lower(b) <= s.upper(b) + 1e-6);
  }
  CHECK(s.root_lower() <= s.root_upper() + 1e-9);
  CHECK(s.num_vectors() > 0);
  CHECK(s.backups() > 0);
}

TEST_CASE("solver handles the full mission model") {
  const auto& lds = testing::default_lds().lds;
  SolveOptions opt;
  opt.precision = 1e-3;
  opt.timeout_seconds = 300;
  auto p = solve(lds.model(), lds.belief_at(0, lds.config().p_biotic), opt);
  CHECK(p.meta.lower <= p.meta.upper + 1e-9);
  CHECK((p.meta.converged || p.meta.timed_out));
  CHECK(p.fingerprint == lds.model().fingerprint());
  // an empty chamber with an undecided belief can only accumulate
  CHECK(policy_action(p, lds.belief_at(0, 0.5)) == pomdp::kAccumulate);
  for (const auto& v : p.vectors)
    for (double x : v.values) CHECK(std::isfinite(x));
}

TEST_CASE("timeout before any backup raises with metadata") {
  PomdpModel m(testing::toys::tiger());
  SolveOptions opt;
  opt.timeout_seconds = 0.0;
  try {
    solve(m, Belief{{0.5, 0.5}}, opt);
    FAIL("expected SolverTimeout");
  } catch (const SolverTimeout& e) {
    CHECK(e.metadata().timed_out);
    CHECK(e.metadata().backups == 0);
  }
}

TEST_CASE("iteration cap returns a partial policy") {
  PomdpModel m(testing::toys::tiger());
  SolveOptions opt;
  opt.max_iterations = 1;
  opt.precision = 1e-9;
  auto p = solve(m, Belief{{0.5, 0.5}}, opt);
  CHECK_FALSE(p.meta.converged);
  CHECK_FALSE(p.vectors.empty());
  CHECK(p.meta.lower <= p.meta.upper);
}

TEST_CASE("policy action ties go to the lowest action id") {
  AlphaPolicy p;
  p.num_states = 2;
  p.num_actions = 3;
  p.vectors = {{2, {1.0, 0.0}}, {0, {1.0, 0.0}}, {1, {0.0, 2.0}}};
  CHECK(policy_action(p, Belief{{1.0, 0.0}}) == 0);
  CHECK(policy_action(p, Belief{{0.0, 1.0}}) == 1);
  CHECK(policy_value(p, Belief{{0.5, 0.5}}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(policy_action(p, Belief{{1.0}}), Error);
  AlphaPolicy empty;
  empty.num_states = 2;
  CHECK_THROWS_AS(policy_action(empty, Belief{{1.0, 0.0}}), Error);
}

TEST_CASE("policy files round-trip exactly") {
  PomdpModel m(testing::toys::declare());
  auto p = solve(m, Belief{{0.3, 0.7}}, {});
  p.lambda = 0.85;
  const std::string text = serialize_policy(p);
  auto back = parse_policy(text);
  CHECK(serialize_policy(back) == text);
  CHECK(back.fingerprint == p.fingerprint);
  CHECK(back.lambda == p.lambda);
  CHECK(back.meta.backups == p.meta.backups);
  REQUIRE(back.vectors.size() == p.vectors.size());
  for (std::size_t i = 0; i < p.vectors.size(); ++i) {
    CHECK(back.vectors[i].action == p.vectors[i].action);
    CHECK(back.vectors[i].values == p.vectors[i].values);
  }

  const std::string path = "roundtrip_policy.txt";
  save_policy(p, path);
  CHECK(serialize_policy(load_policy(path)) == text);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_policy("/nonexistent/policy.txt"), IoError);
}

TEST_CASE("malformed policy text is rejected") {
  CHECK_THROWS_AS(parse_policy("not a policy"), ParseError);
  PomdpModel m(testing::toys::tiger());
  auto p = solve(m, Belief{{0.5, 0.5}}, {});
  std::string text = serialize_policy(p);
  CHECK_THROWS_AS(parse_policy(text.substr(0, text.size() / 2)), ParseError);
}

TEST_CASE("a policy refuses a different model") {
  PomdpModel tiger(testing::toys::tiger());
  PomdpModel other(testing::toys::maintenance());
  auto p = solve(tiger, Belief{{0.5, 0.5}}, {});
  CHECK_NOTHROW(check_compatible(p, tiger));
  CHECK_THROWS_AS(check_compatible(p, other), FingerprintMismatch);
}

TEST_CASE("policy map grid arithmetic") {
  const auto& lds = testing::default_lds().lds;
  AlphaPolicy p;
  p.fingerprint = lds.model().fingerprint();
  p.num_states = lds.model().num_states();
  p.num_actions = lds.model().num_actions();
  std::vector<double> flat(p.num_states, 0.0), tilt(p.num_states, 0.0);
  for (int v = 0; v < lds.volume_cells(); ++v) tilt[lds.state_index(1, v)] = 1.0;
  p.vectors = {{pomdp::kAccumulate, flat}, {pomdp::kDeclareBiotic, tilt}};
  for (auto& x : p.vectors[1].values) x -= 0.5;

  auto cells = policy_map(p, lds, 0.5);
  CHECK(cells.size() == 3u * lds.volume_cells());
  std::set<double> beliefs;
  for (const auto& c : cells) {
    beliefs.insert(c.belief);
    CHECK(c.action == policy_action(p, lds.belief_at(c.volume, c.belief)));
  }
  CHECK(beliefs == std::set<double>{0.0, 0.5, 1.0});
  CHECK(policy_map(p, lds, 0.01, 10).size() == 101u * 11u);
  CHECK_THROWS_AS(policy_map(p, lds, 0.3), Error);
}
