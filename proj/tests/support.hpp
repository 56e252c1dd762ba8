#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.
// The oracles deliberately avoid the library's inference code: they walk the
// raw tables directly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lifeplan/bayesnet.hpp"
#include "lifeplan/lds_model.hpp"
#include "lifeplan/pomdp.hpp"
#include "lifeplan/rng.hpp"

namespace testing {

namespace bn = lifeplan::bayesnet;

/// Random single-root DAG with 2..max_vars variables and 2..max_bins bins.
inline bn::DiscreteBayesNet random_network(lifeplan::Rng& rng, int max_vars, int max_bins) {
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  const int n = pick(2, max_vars);
  std::vector<bn::VariableSpec> vars(n);
  for (int i = 0; i < n; ++i) {
    vars[i].id = "v" + std::to_string(i);
    vars[i].cardinality = pick(2, max_bins);
    if (i == 0) continue;
    // at least one parent keeps the root unique
    for (int j = 0; j < i; ++j)
      if (rng() % 2 == 0) vars[i].parents.push_back(vars[j].id);
    if (vars[i].parents.empty()) vars[i].parents.push_back(vars[pick(0, i - 1)].id);
  }
  std::vector<bn::ConditionalTable> tables(n);
  for (int i = 0; i < n; ++i) {
    std::size_t rows = 1;
    for (const auto& p : vars[i].parents) rows *= vars[std::stoi(p.substr(1))].cardinality;
    tables[i].variable = vars[i].id;
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> row(vars[i].cardinality);
      double sum = 0;
      for (auto& x : row) sum += (x = 0.05 + lifeplan::uniform01(rng));
      for (auto& x : row) x /= sum;
      tables[i].rows.push_back(row);
    }
  }
  return bn::DiscreteBayesNet(vars, tables);
}

/// Row of var's table under a full assignment, first parent most significant.
inline std::size_t oracle_row(const bn::DiscreteBayesNet& net, int var, const std::vector<int>& x) {
  std::size_t row = 0;
  for (const auto& pid : net.variables()[var].parents) {
    int p = 0;
    while (net.variables()[p].id != pid) ++p;
    row = row * net.variables()[p].cardinality + x[p];
  }
  return row;
}

/// P(evidence | root) by summing the full joint.
inline double enumerate_likelihood(const bn::DiscreteBayesNet& net, const std::map<int, int>& evidence, int root_bin) {
  const int n = static_cast<int>(net.size());
  int root = 0;
  while (!net.variables()[root].parents.empty()) ++root;
  std::vector<int> x(n, 0);
  double total = 0.0;
  for (;;) {
    bool consistent = x[root] == root_bin;
    for (auto [v, b] : evidence) consistent = consistent && x[v] == b;
    if (consistent) {
      double p = 1.0;
      for (int v = 0; v < n; ++v)
        if (v != root) p *= net.tables()[v].rows[oracle_row(net, v, x)][x[v]];
      total += p;
    }
    int k = 0;
    while (k < n && ++x[k] == net.variables()[k].cardinality) x[k++] = 0;
    if (k == n) break;
  }
  return total;
}

/// One Bayes filter step by explicit double sum over (s, s').
inline std::vector<double> brute_filter(const lifeplan::pomdp::PomdpModel& m, const std::vector<double>& b, int a,
                                        const lifeplan::pomdp::Observation& o) {
  const int n = m.num_states();
  std::vector<double> joint(n, 0.0);
  for (int s = 0; s < n; ++s) {
    if (b[s] == 0.0) continue;
    for (const auto& t : m.transitions(s, a)) {
      if (m.visible(t.next) != o.visible) continue;
      joint[t.next] += b[s] * t.prob * m.observation_probs(a, t.next)[o.symbol];
    }
  }
  double z = 0.0;
  for (double v : joint) z += v;
  for (double& v : joint) v /= z;
  return joint;
}

/// The default mission model, built once per process.
struct DefaultLds {
  lifeplan::lds::MissionConfig config;
  lifeplan::lds::LdsNetwork network;
  lifeplan::pomdp::LdsPomdp lds;
};

inline const DefaultLds& default_lds() {
  static const DefaultLds fixture = [] {
    DefaultLds f;
    f.network = lifeplan::lds::build_default_network(f.config);
    f.lds = lifeplan::pomdp::build_model(f.config, f.network);
    return f;
  }();
  return fixture;
}

// ---------------------------------------------------------------------------
// Hand-built two-state models for the solver oracles

namespace toys {

using lifeplan::pomdp::ModelTables;

// Classic tiger: listen (85% accurate, -1), open-left, open-right (+10 / -100,
// then the tiger is re-placed uniformly).
inline ModelTables tiger() {
  ModelTables t;
  t.num_states = 2;
  t.num_actions = 3;
  t.discount = 0.95;
  t.action_names = {"listen", "open-left", "open-right"};
  t.alphabet_sizes = {2, 1, 1};
  t.visible = {0, 0};
  t.terminal = {0, 0};
  const std::vector<lifeplan::pomdp::Transition> reset{{0, 0.5}, {1, 0.5}};
  // state 0: tiger behind the left door
  t.transitions = {{{0, 1.0}}, reset, reset, {{1, 1.0}}, reset, reset};
  t.rewards = {-1, -100, 10, -1, 10, -100};
  t.observations = {{0.85, 0.15}, {0.15, 0.85}, {1.0}, {1.0}, {1.0}, {1.0}};
  return t;
}

// Machine that degrades while running. Running pays +1 when good, -1 when
// bad and gives a weak hint; inspecting costs 0.3 and is 95% accurate;
// repairing costs 1 and restores the good state.
inline ModelTables maintenance() {
  ModelTables t;
  t.num_states = 2;
  t.num_actions = 3;
  t.discount = 0.9;
  t.action_names = {"run", "inspect", "repair"};
  t.alphabet_sizes = {2, 2, 1};
  t.visible = {0, 0};
  t.terminal = {0, 0};
  t.transitions = {{{0, 0.9}, {1, 0.1}}, {{0, 1.0}}, {{0, 1.0}}, {{1, 1.0}}, {{1, 1.0}}, {{0, 1.0}}};
  t.rewards = {1, -0.3, -1, -1, -0.3, -1};
  t.observations = {{0.7, 0.3}, {0.4, 0.6}, {0.95, 0.05}, {0.05, 0.95}, {1.0}, {1.0}};
  return t;
}

// Miniature life detection: a noisy sensor and two declarations that are
// free when right and cost 1 when wrong; each declaration starts a new
// sample drawn 30/70.
inline ModelTables declare() {
  ModelTables t;
  t.num_states = 2;
  t.num_actions = 3;
  t.discount = 0.9;
  t.action_names = {"sense", "declare-0", "declare-1"};
  t.alphabet_sizes = {3, 1, 1};
  t.visible = {0, 0};
  t.terminal = {0, 0};
  const std::vector<lifeplan::pomdp::Transition> fresh{{0, 0.3}, {1, 0.7}};
  t.transitions = {{{0, 1.0}}, fresh, fresh, {{1, 1.0}}, fresh, fresh};
  t.rewards = {-0.05, 0, -1, -0.05, -1, 0};
  t.observations = {{0.6, 0.3, 0.1}, {0.15, 0.25, 0.6}, {1.0}, {1.0}, {1.0}, {1.0}};
  return t;
}

}  // namespace toys

/// Depth-limited expectimax over beliefs with a constant leaf value, written
/// against the raw tables.
inline double expectimax(const lifeplan::pomdp::ModelTables& t, const std::vector<double>& b, int depth,
                         double leaf) {
  if (depth == 0) return leaf;
  const int n = t.num_states, na = t.num_actions;
  double best = -1e300;
  for (int a = 0; a < na; ++a) {
    double q = 0.0;
    for (int s = 0; s < n; ++s) q += b[s] * t.rewards[s * na + a];
    std::vector<double> pred(n, 0.0);
    for (int s = 0; s < n; ++s)
      for (const auto& tr : t.transitions[s * na + a]) pred[tr.next] += b[s] * tr.prob;
    double future = 0.0;
    for (int o = 0; o < t.alphabet_sizes[a]; ++o) {
      std::vector<double> post(n);
      double z = 0.0;
      for (int s = 0; s < n; ++s) z += (post[s] = pred[s] * t.observations[a * n + s][o]);
      if (z <= 0.0) continue;
      for (double& x : post) x /= z;
      future += z * expectimax(t, post, depth - 1, leaf);
    }
    best = std::max(best, q + t.discount * future);
  }
  return best;
}

/// Exact value iteration for two-state models. A value function is the upper
/// envelope on [0, 1] of lines V(x) = v0 (1 - x) + v1 x, x = P(state 1),
/// stored left to right.
using Line = std::array<double, 2>;

inline double line_at(const Line& l, double x) { return l[0] * (1 - x) + l[1] * x; }

struct TwoStateValue {
  std::vector<Line> lines;
  double error_bound = 0.0;  // sup-norm distance to the optimal value

  double operator()(double x) const {
    double best = -1e300;
    for (const auto& l : lines) best = std::max(best, line_at(l, x));
    return best;
  }
};

/// Upper hull restricted to [0, 1], ordered by increasing slope.
inline std::vector<Line> upper_envelope(std::vector<Line> lines) {
  auto slope = [](const Line& l) { return l[1] - l[0]; };
  std::sort(lines.begin(), lines.end(), [&](const Line& a, const Line& b) {
    return slope(a) != slope(b) ? slope(a) < slope(b) : a[0] > b[0];
  });
  // where steeper line b overtakes a
  auto cross = [&](const Line& a, const Line& b) { return (a[0] - b[0]) / (slope(b) - slope(a)); };
  std::vector<Line> hull;
  for (const auto& l : lines) {
    if (!hull.empty() && slope(hull.back()) == slope(l)) continue;  // same slope, lower intercept
    while (!hull.empty() && line_at(l, 0.0) >= line_at(hull.back(), 0.0) &&
           (hull.size() == 1 || cross(hull[hull.size() - 2], l) <= cross(hull[hull.size() - 2], hull.back())))
      hull.pop_back();
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], l) <= cross(hull[hull.size() - 2], hull.back()))
      hull.pop_back();
    if (!hull.empty() && cross(hull.back(), l) >= 1.0) continue;  // never on top inside [0, 1]
    hull.push_back(l);
  }
  std::size_t first = 0;
  while (first + 1 < hull.size() && cross(hull[first], hull[first + 1]) <= 0.0) ++first;
  return {hull.begin() + static_cast<std::ptrdiff_t>(first), hull.end()};
}

/// Breakpoints of an envelope, with 0 in front and 1 at the back.
inline std::vector<double> envelope_breaks(const std::vector<Line>& env) {
  std::vector<double> xs{0.0};
  for (std::size_t i = 0; i + 1 < env.size(); ++i) {
    const double den = (env[i + 1][1] - env[i + 1][0]) - (env[i][1] - env[i][0]);
    xs.push_back(std::clamp((env[i][0] - env[i + 1][0]) / den, xs.back(), 1.0));
  }
  xs.push_back(1.0);
  return xs;
}

/// Pointwise sum of two envelopes. The sum of convex piecewise-linear
/// functions only bends where one of the two does.
inline std::vector<Line> envelope_sum(const std::vector<Line>& a, const std::vector<Line>& b) {
  const auto xa = envelope_breaks(a), xb = envelope_breaks(b);
  std::vector<Line> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    out.push_back({a[i][0] + b[j][0], a[i][1] + b[j][1]});
    const double ea = xa[i + 1], eb = xb[j + 1];
    if (ea <= eb) ++i;
    if (eb <= ea) ++j;
  }
  return upper_envelope(std::move(out));
}

/// Drops envelope lines whose removal costs less than `eps` anywhere.
/// Returns the largest value actually lost.
inline double prune_slivers(std::vector<Line>& env, double eps) {
  if (env.size() < 3) return 0.0;
  std::vector<Line> kept{env.front()};
  for (std::size_t i = 1; i + 1 < env.size(); ++i) {
    // without line i the envelope follows its neighbours up to their crossing
    const Line& l = kept.back();
    const Line& r = env[i + 1];
    const double den = (r[1] - r[0]) - (l[1] - l[0]);
    const double x = std::clamp((l[0] - r[0]) / den, 0.0, 1.0);
    if (line_at(env[i], x) - std::max(line_at(l, x), line_at(r, x)) >= eps) kept.push_back(env[i]);
  }
  kept.push_back(env.back());
  if (kept.size() == env.size()) return 0.0;
  kept = upper_envelope(std::move(kept));
  TwoStateValue before{env}, after{kept};
  double loss = 0.0;
  for (double x : envelope_breaks(env)) loss = std::max(loss, before(x) - after(x));
  env = std::move(kept);
  return loss;
}

inline TwoStateValue two_state_value(const lifeplan::pomdp::ModelTables& t, double tol = 1e-7, double sliver = 1e-10) {
  const int na = t.num_actions;
  const double g = t.discount;
  // Start from the blind policies (repeat one action forever): each is a
  // valid lower bound and far closer to the optimum than a constant.
  TwoStateValue v;
  for (int a = 0; a < na; ++a) {
    double m[2][2] = {{1, 0}, {0, 1}};
    for (int s = 0; s < 2; ++s)
      for (const auto& tr : t.transitions[s * na + a]) m[s][tr.next] -= g * tr.prob;
    const double r0 = t.rewards[a], r1 = t.rewards[na + a];
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    v.lines.push_back({(r0 * m[1][1] - m[0][1] * r1) / det, (m[0][0] * r1 - m[1][0] * r0) / det});
  }
  v.lines = upper_envelope(v.lines);
  double pruned = 0.0;  // worst undershoot of any sweep against the exact backup
  double best_delta = 1e300;
  int best_at = 0;
  for (int it = 0; it < 100000; ++it) {
    std::vector<Line> all;
    for (int a = 0; a < na; ++a) {
      std::vector<Line> acc{{t.rewards[a], t.rewards[na + a]}};
      for (int o = 0; o < t.alphabet_sizes[a]; ++o) {
        std::vector<Line> proj;
        for (const auto& l : v.lines) {
          Line p{0.0, 0.0};
          for (int s = 0; s < 2; ++s)
            for (const auto& tr : t.transitions[s * na + a])
              p[s] += g * tr.prob * t.observations[a * 2 + tr.next][o] * l[tr.next];
          proj.push_back(p);
        }
        acc = envelope_sum(acc, upper_envelope(std::move(proj)));
      }
      all.insert(all.end(), acc.begin(), acc.end());
    }
    TwoStateValue next{upper_envelope(std::move(all)), 0.0};
    pruned = std::max(pruned, prune_slivers(next.lines, sliver));
    // both functions are piecewise linear, so the sup gap sits at a breakpoint
    double delta = 0.0;
    for (const auto* f : {&v, &next})
      for (double x : envelope_breaks(f->lines)) delta = std::max(delta, std::abs(next(x) - v(x)));
    v = std::move(next);
    // The bound below holds after any sweep. Pruning can keep delta from
    // reaching tol, so also stop once it has not halved in 50 sweeps.
    if (delta < 0.5 * best_delta) best_delta = delta, best_at = it;
    if (delta <= tol || it - best_at > 50) {
      v.error_bound = g * (delta + pruned) / (1 - g) + pruned;
      return v;
    }
  }
  v.error_bound = 1e300;
  return v;
}

inline std::pair<double, double> reward_range(const lifeplan::pomdp::ModelTables& t) {
  double lo = 1e300, hi = -1e300;
  for (double r : t.rewards) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo, hi};
}

}  // namespace testing
