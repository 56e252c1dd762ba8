#include "lifeplan/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "lifeplan/hash.hpp"

namespace lifeplan::solver {

using pomdp::Belief;
using pomdp::PomdpModel;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kDominanceTol = 1e-9;
constexpr std::size_t kMaxSubsetSupport = 12;

struct Sparse {
  std::vector<int> s;
  std::vector<double> p;
};

Sparse to_sparse(const Belief& b) {
  Sparse out;
  for (std::size_t i = 0; i < b.p.size(); ++i)
    if (b.p[i] > 0.0) {
      out.s.push_back(static_cast<int>(i));
      out.p.push_back(b.p[i]);
    }
  return out;
}

Belief to_dense(const Sparse& b, int n) {
  Belief out;
  out.p.assign(n, 0.0);
  for (std::size_t i = 0; i < b.s.size(); ++i) out.p[b.s[i]] = b.p[i];
  return out;
}

std::uint64_t support_key(const std::vector<int>& states) {
  Fnv1a h;
  for (int s : states) h.i64(s);
  return h.digest();
}

std::uint64_t belief_key(const Sparse& b) {
  Fnv1a h;
  for (std::size_t i = 0; i < b.s.size(); ++i) {
    h.i64(b.s[i]);
    h.f64(b.p[i]);
  }
  return h.digest();
}

struct Child {
  std::int64_t key;  // visible * max_alphabet + symbol
  double prob;
  Sparse b;
};

struct UpperPoint {
  Sparse b;
  double value;
  double base;  // corner interpolation at b
};

}  // namespace

struct Sarsop::Impl {
  const PomdpModel& m;
  SolveOptions opt;
  Sparse root;
  int S, A;
  double gamma;
  std::int64_t max_k = 1;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  // Lower bound. Row-major copies for construction and export, column-major
  // for evaluation; removed vectors hold -inf in every column.
  std::vector<AlphaVector> alphas;
  std::vector<char> alive;
  std::vector<std::vector<double>> cols;
  std::size_t dead = 0;
  // Per visible tag: best alive vector on the uniform belief over that tag.
  std::vector<std::vector<int>> tag_states;
  std::vector<int> tag_best;
  std::vector<double> tag_score;

  // Upper bound.
  std::vector<double> corner;
  std::vector<UpperPoint> points;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;
  std::unordered_map<std::uint64_t, int> by_belief;

  std::vector<TracePoint> trace;
  long iterations = 0;
  long n_backups = 0;
  bool done = false;

  // Scratch.
  mutable std::vector<double> acc;
  std::vector<double> mass;
  std::vector<int> touched;

  Impl(const PomdpModel& model, const Belief& initial, SolveOptions o)
      : m(model), opt(std::move(o)), S(model.num_states()), A(model.num_actions()), gamma(model.discount()) {
    if (initial.p.size() != static_cast<std::size_t>(S)) throw Error("initial belief has the wrong dimension");
    root = to_sparse(initial);
    if (root.s.empty()) throw Error("initial belief is empty");
    for (int a = 0; a < A; ++a) max_k = std::max<std::int64_t>(max_k, m.alphabet_size(a));
    mass.assign(S, 0.0);
    cols.resize(S);
    int max_tag = 0;
    for (int s = 0; s < S; ++s) max_tag = std::max(max_tag, m.visible(s));
    tag_states.resize(max_tag + 1);
    for (int s = 0; s < S; ++s) tag_states[m.visible(s)].push_back(s);
    tag_best.assign(tag_states.size(), -1);
    tag_score.assign(tag_states.size(), kNegInf);
    init_lower();
    init_upper();
    record();
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  bool out_of_time() const { return elapsed() >= opt.timeout_seconds; }

  // ---- lower bound ------------------------------------------------------

  void init_lower() {
    double rmin = std::numeric_limits<double>::infinity();
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) rmin = std::min(rmin, m.reward(s, a));
    // Blind policies: repeat one action forever. Iterating upward from the
    // constant floor keeps every iterate a valid lower bound.
    for (int a = 0; a < A; ++a) {
      std::vector<double> v(S, rmin / (1.0 - gamma)), next(S);
      for (int it = 0; it < 100000; ++it) {
        double delta = 0.0;
        for (int s = 0; s < S; ++s) {
          double x = m.reward(s, a);
          for (const auto& tr : m.transitions(s, a)) x += gamma * tr.prob * v[tr.next];
          next[s] = x;
          delta = std::max(delta, std::abs(x - v[s]));
        }
        v.swap(next);
        if (delta < 1e-11) break;
      }
      insert_alpha({a, std::move(v)});
    }
  }

  double dot_best(const Sparse& b, int* best) const {
    const std::size_t n = alphas.size();
    acc.assign(n, 0.0);
    for (std::size_t i = 0; i < b.s.size(); ++i) {
      const double p = b.p[i];
      const double* c = cols[b.s[i]].data();
      double* out = acc.data();
      for (std::size_t j = 0; j < n; ++j) out[j] += p * c[j];
    }
    double v = kNegInf;
    int arg = -1;
    for (std::size_t j = 0; j < n; ++j)
      if (acc[j] > v) {
        v = acc[j];
        arg = static_cast<int>(j);
      }
    if (best) *best = arg;
    return v;
  }

  double lower(const Sparse& b) const { return dot_best(b, nullptr); }

  double tag_value(const std::vector<double>& v, int tag) const {
    double x = 0.0;
    for (int s : tag_states[tag]) x += v[s];
    return x;
  }

  int best_for_tag(int tag) {
    if (tag_best[tag] < 0 || !alive[tag_best[tag]]) {
      tag_best[tag] = -1;
      tag_score[tag] = kNegInf;
      for (std::size_t j = 0; j < alphas.size(); ++j) {
        if (!alive[j]) continue;
        const double x = tag_value(alphas[j].values, tag);
        if (x > tag_score[tag]) {
          tag_score[tag] = x;
          tag_best[tag] = static_cast<int>(j);
        }
      }
    }
    return tag_best[tag];
  }

  void insert_alpha(AlphaVector v) {
    for (std::size_t j = 0; j < alphas.size(); ++j) {
      if (!alive[j]) continue;
      const auto& o = alphas[j].values;
      bool dominated = true;
      for (int s = 0; s < S && dominated; ++s) dominated = o[s] >= v.values[s] - kDominanceTol;
      if (dominated) return;
    }
    for (std::size_t j = 0; j < alphas.size(); ++j) {
      if (!alive[j]) continue;
      const auto& o = alphas[j].values;
      bool dominates = true;
      for (int s = 0; s < S && dominates; ++s) dominates = v.values[s] >= o[s] - kDominanceTol;
      if (dominates) {
        alive[j] = 0;
        ++dead;
        for (int s = 0; s < S; ++s) cols[s][j] = kNegInf;
      }
    }
    const int idx = static_cast<int>(alphas.size());
    for (int s = 0; s < S; ++s) cols[s].push_back(v.values[s]);
    for (std::size_t t = 0; t < tag_states.size(); ++t) {
      if (tag_best[t] >= 0 && !alive[tag_best[t]]) tag_best[t] = -1;
      const double x = tag_value(v.values, static_cast<int>(t));
      if (tag_best[t] >= 0 && x > tag_score[t]) {
        tag_best[t] = idx;
        tag_score[t] = x;
      }
    }
    alphas.push_back(std::move(v));
    alive.push_back(1);
    if (dead > 256 && dead > alphas.size() / 2) compact();
  }

  void compact() {
    std::vector<AlphaVector> kept;
    for (std::size_t j = 0; j < alphas.size(); ++j)
      if (alive[j]) kept.push_back(std::move(alphas[j]));
    alphas = std::move(kept);
    alive.assign(alphas.size(), 1);
    dead = 0;
    for (int s = 0; s < S; ++s) {
      cols[s].resize(alphas.size());
      for (std::size_t j = 0; j < alphas.size(); ++j) cols[s][j] = alphas[j].values[s];
    }
    std::fill(tag_best.begin(), tag_best.end(), -1);
  }

  // ---- upper bound ------------------------------------------------------

  void init_upper() {
    double rmax = kNegInf;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) rmax = std::max(rmax, m.reward(s, a));
    // Fully observable value iteration from above; every iterate bounds the
    // POMDP value from above.
    corner.assign(S, rmax / (1.0 - gamma));
    std::vector<double> next(S);
    for (int it = 0; it < 1000000; ++it) {
      double delta = 0.0;
      for (int s = 0; s < S; ++s) {
        double best = kNegInf;
        for (int a = 0; a < A; ++a) {
          double x = m.reward(s, a);
          for (const auto& tr : m.transitions(s, a)) x += gamma * tr.prob * corner[tr.next];
          best = std::max(best, x);
        }
        next[s] = best;
        delta = std::max(delta, std::abs(best - corner[s]));
      }
      corner.swap(next);
      if (delta < 1e-11) break;
    }
  }

  double corner_value(const Sparse& b) const {
    double x = 0.0;
    for (std::size_t i = 0; i < b.s.size(); ++i) x += b.p[i] * corner[b.s[i]];
    return x;
  }

  // Sawtooth correction of point q at b, or +inf if supp(q) is not within supp(b).
  static double ratio(const Sparse& b, const Sparse& q) {
    double phi = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    for (std::size_t k = 0; k < q.s.size(); ++k) {
      while (i < b.s.size() && b.s[i] < q.s[k]) ++i;
      if (i == b.s.size() || b.s[i] != q.s[k]) return -1.0;
      phi = std::min(phi, b.p[i] / q.p[k]);
    }
    return phi;
  }

  double upper(const Sparse& b) const {
    const double base = corner_value(b);
    double best = 0.0;  // correction is never positive
    auto scan = [&](const std::vector<int>& ids) {
      for (int id : ids) {
        const auto& q = points[id];
        const double diff = q.value - q.base;
        if (diff >= best) continue;
        const double phi = ratio(b, q.b);
        if (phi < 0.0) continue;
        best = std::min(best, phi * diff);
      }
    };
    const std::size_t n = b.s.size();
    if (n <= kMaxSubsetSupport) {
      std::vector<int> sub;
      for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        sub.clear();
        for (std::size_t i = 0; i < n; ++i)
          if (mask & (1u << i)) sub.push_back(b.s[i]);
        auto it = buckets.find(support_key(sub));
        if (it != buckets.end()) scan(it->second);
      }
    } else {
      for (const auto& [key, ids] : buckets) scan(ids);
    }
    return base + best;
  }

  void insert_upper(const Sparse& b, double value) {
    const std::uint64_t bk = belief_key(b);
    auto found = by_belief.find(bk);
    if (found != by_belief.end() && points[found->second].b.s == b.s && points[found->second].b.p == b.p) {
      points[found->second].value = std::min(points[found->second].value, value);
      return;
    }
    const int id = static_cast<int>(points.size());
    points.push_back({b, value, corner_value(b)});
    buckets[support_key(b.s)].push_back(id);
    by_belief[bk] = id;
    if (points.size() >= prune_at) prune_upper();
  }

  // Drops points the others already bound at least as tightly. Runs each
  // time the set doubles, so the amortized cost stays linear.
  std::size_t prune_at = 64;

  void prune_upper() {
    std::vector<UpperPoint> all = std::move(points);
    points.clear();
    buckets.clear();
    by_belief.clear();
    std::vector<char> keep(all.size(), 1);
    // rebuild with everything, then retire points from the oldest
    for (std::size_t i = 0; i < all.size(); ++i) {
      points.push_back(all[i]);
      buckets[support_key(all[i].b.s)].push_back(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
      const double own = points[i].value;
      points[i].value = points[i].base;  // switch point i off
      if (upper(points[i].b) > own + 1e-12) {
        points[i].value = own;
      } else {
        keep[i] = 0;
      }
    }
    points.clear();
    buckets.clear();
    for (std::size_t i = 0; i < all.size(); ++i)
      if (keep[i]) {
        const int id = static_cast<int>(points.size());
        points.push_back(all[i]);
        buckets[support_key(all[i].b.s)].push_back(id);
        by_belief[belief_key(all[i].b)] = id;
      }
    prune_at = std::max<std::size_t>(64, 2 * points.size());
  }

  // ---- belief expansion -------------------------------------------------

  void successors(const Sparse& b, int a, std::vector<Child>& out) {
    out.clear();
    touched.clear();
    for (std::size_t i = 0; i < b.s.size(); ++i)
      for (const auto& tr : m.transitions(b.s[i], a)) {
        if (mass[tr.next] == 0.0) touched.push_back(tr.next);
        mass[tr.next] += b.p[i] * tr.prob;
      }
    std::sort(touched.begin(), touched.end());
    std::unordered_map<std::int64_t, int> index;
    for (int sp : touched) {
      const double w = mass[sp];
      mass[sp] = 0.0;
      if (w <= 0.0) continue;
      const auto o = m.observation_probs(a, sp);
      const std::int64_t vis = m.visible(sp);
      for (std::size_t k = 0; k < o.size(); ++k) {
        if (o[k] <= 0.0) continue;
        const std::int64_t key = vis * max_k + static_cast<std::int64_t>(k);
        auto [it, fresh] = index.try_emplace(key, static_cast<int>(out.size()));
        if (fresh) out.push_back({key, 0.0, {}});
        Child& c = out[it->second];
        c.b.s.push_back(sp);
        c.b.p.push_back(w * o[k]);
        c.prob += w * o[k];
      }
    }
    for (auto& c : out)
      for (double& x : c.b.p) x /= c.prob;
  }

  double expected_reward(const Sparse& b, int a) const {
    double r = 0.0;
    for (std::size_t i = 0; i < b.s.size(); ++i) r += b.p[i] * m.reward(b.s[i], a);
    return r;
  }

  // ---- backups ----------------------------------------------------------

  struct ActionEval {
    double q_upper;
    double q_lower;
    std::vector<Child> children;
    std::vector<double> child_upper;
    std::vector<double> child_lower;
    std::vector<int> child_alpha;
  };

  void evaluate(const Sparse& b, int a, ActionEval& e, bool with_lower) {
    successors(b, a, e.children);
    const double r = expected_reward(b, a);
    const std::size_t n = e.children.size();
    e.child_upper.resize(n);
    e.child_lower.resize(n);
    e.child_alpha.resize(n);
    double qu = 0.0, ql = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      e.child_upper[i] = upper(e.children[i].b);
      qu += e.children[i].prob * e.child_upper[i];
      if (with_lower) {
        e.child_lower[i] = dot_best(e.children[i].b, &e.child_alpha[i]);
        ql += e.children[i].prob * e.child_lower[i];
      }
    }
    e.q_upper = r + gamma * qu;
    e.q_lower = r + gamma * ql;
  }

  AlphaVector build_alpha(int a, const ActionEval& e) {
    std::unordered_map<std::int64_t, int> chosen;
    for (std::size_t i = 0; i < e.children.size(); ++i) chosen[e.children[i].key] = e.child_alpha[i];
    std::vector<double> g(S, 0.0);
    for (int sp = 0; sp < S; ++sp) {
      const auto o = m.observation_probs(a, sp);
      const int vis = m.visible(sp);
      double x = 0.0;
      for (std::size_t k = 0; k < o.size(); ++k) {
        if (o[k] <= 0.0) continue;
        auto it = chosen.find(static_cast<std::int64_t>(vis) * max_k + static_cast<std::int64_t>(k));
        const int j = it != chosen.end() ? it->second : best_for_tag(vis);
        x += o[k] * alphas[j].values[sp];
      }
      g[sp] = x;
    }
    AlphaVector v{a, std::vector<double>(S)};
    for (int s = 0; s < S; ++s) {
      double x = m.reward(s, a);
      for (const auto& tr : m.transitions(s, a)) x += gamma * tr.prob * g[tr.next];
      v.values[s] = x;
    }
    return v;
  }

  std::vector<ActionEval> evals;

  // Updates both bounds at b. Returns the index of the action with the
  // highest upper Q value.
  int backup(const Sparse& b) {
    evals.resize(A);
    int best_u = 0, best_l = 0;
    for (int a = 0; a < A; ++a) {
      evaluate(b, a, evals[a], true);
      if (evals[a].q_upper > evals[best_u].q_upper) best_u = a;
      if (evals[a].q_lower > evals[best_l].q_lower) best_l = a;
    }
    const double u_now = upper(b);
    // a point that only repeats the current interpolation adds nothing
    if (evals[best_u].q_upper < u_now - 1e-12) insert_upper(b, evals[best_u].q_upper);
    if (evals[best_l].q_lower > lower(b) + 1e-12) insert_alpha(build_alpha(best_l, evals[best_l]));
    ++n_backups;
    return best_u;
  }

  // ---- trials -----------------------------------------------------------

  void trial() {
    std::vector<Sparse> path{root};
    double eps = opt.precision;
    for (int depth = 0; depth < opt.max_depth; ++depth) {
      const Sparse& b = path.back();
      const double gap = upper(b) - lower(b);
      if (gap <= eps) break;
      if (out_of_time()) break;
      ActionEval e;
      int a_star = 0;
      double best_q = kNegInf;
      for (int a = 0; a < A; ++a) {
        ActionEval tmp;
        evaluate(b, a, tmp, false);
        if (tmp.q_upper > best_q) {
          best_q = tmp.q_upper;
          a_star = a;
          e = std::move(tmp);
        }
      }
      const double next_eps = eps / gamma;
      int pick = -1;
      double score = 0.0;
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        const double excess = e.child_upper[i] - lower(e.children[i].b) - next_eps;
        const double w = e.children[i].prob * excess;
        if (w > score) {
          score = w;
          pick = static_cast<int>(i);
        }
      }
      if (pick < 0) break;
      (void)a_star;
      path.push_back(e.children[pick].b);
      eps = next_eps;
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      if (out_of_time()) break;
      backup(*it);
    }
  }

  void record() {
    trace.push_back({iterations, elapsed(), lower(root), upper(root), alphas.size() - dead, points.size()});
  }

  bool step() {
    if (done) return true;
    if (upper(root) - lower(root) <= opt.precision) {
      done = true;
      return true;
    }
    trial();
    ++iterations;
    record();
    if (opt.progress) opt.progress(trace.back());
    done = trace.back().upper - trace.back().lower <= opt.precision;
    return done;
  }

  AlphaPolicy policy() const {
    AlphaPolicy p;
    p.fingerprint = m.fingerprint();
    p.num_states = S;
    p.num_actions = A;
    p.discount = gamma;
    for (std::size_t j = 0; j < alphas.size(); ++j)
      if (alive[j]) p.vectors.push_back(alphas[j]);
    p.meta.precision = opt.precision;
    p.meta.lower = trace.back().lower;
    p.meta.upper = trace.back().upper;
    p.meta.iterations = iterations;
    p.meta.backups = n_backups;
    p.meta.wall_seconds = elapsed();
    p.meta.converged = p.meta.upper - p.meta.lower <= opt.precision;
    return p;
  }
};

Sarsop::Sarsop(const PomdpModel& model, const Belief& initial, SolveOptions options)
    : impl_(std::make_unique<Impl>(model, initial, std::move(options))) {}
Sarsop::~Sarsop() = default;

bool Sarsop::step() { return impl_->step(); }
bool Sarsop::converged() const { return impl_->done; }
double Sarsop::lower(const Belief& b) const { return impl_->lower(to_sparse(b)); }
double Sarsop::upper(const Belief& b) const { return impl_->upper(to_sparse(b)); }
double Sarsop::root_lower() const { return impl_->trace.back().lower; }
double Sarsop::root_upper() const { return impl_->trace.back().upper; }
const std::vector<TracePoint>& Sarsop::trace() const { return impl_->trace; }
std::size_t Sarsop::num_vectors() const { return impl_->alphas.size() - impl_->dead; }
std::size_t Sarsop::num_upper_points() const { return impl_->points.size(); }
long Sarsop::backups() const { return impl_->n_backups; }
double Sarsop::elapsed() const { return impl_->elapsed(); }
AlphaPolicy Sarsop::policy() const { return impl_->policy(); }

std::vector<Belief> Sarsop::sampled_beliefs() const {
  std::vector<Belief> out;
  for (const auto& q : impl_->points) out.push_back(to_dense(q.b, impl_->S));
  return out;
}

AlphaPolicy solve(const PomdpModel& model, const Belief& initial, const SolveOptions& options,
                  std::vector<TracePoint>* trace) {
  Sarsop s(model, initial, options);
  while (!s.step()) {
    if (options.max_iterations >= 0 && s.trace().back().iteration >= options.max_iterations) break;
    if (s.elapsed() >= options.timeout_seconds) break;
  }
  AlphaPolicy p = s.policy();
  if (trace) *trace = s.trace();
  if (!p.meta.converged && s.elapsed() >= options.timeout_seconds) {
    p.meta.timed_out = true;
    if (s.backups() == 0)
      throw SolverTimeout("solver timed out after " + std::to_string(s.elapsed()) + " s before any backup", p.meta);
  }
  return p;
}

namespace {

int best_vector(const AlphaPolicy& policy, const Belief& b, double* value) {
  if (policy.vectors.empty()) throw Error("policy has no alpha vectors");
  if (b.p.size() != static_cast<std::size_t>(policy.num_states))
    throw Error("belief dimension " + std::to_string(b.p.size()) + " does not match policy (" +
                std::to_string(policy.num_states) + ")");
  std::vector<int> support;
  for (std::size_t i = 0; i < b.p.size(); ++i)
    if (b.p[i] != 0.0) support.push_back(static_cast<int>(i));
  int arg = 0;
  double v = kNegInf;
  for (std::size_t j = 0; j < policy.vectors.size(); ++j) {
    double x = 0.0;
    for (int s : support) x += b.p[s] * policy.vectors[j].values[s];
    // ties go to the lowest action id
    if (x > v || (x == v && policy.vectors[j].action < policy.vectors[arg].action)) {
      v = x;
      arg = static_cast<int>(j);
    }
  }
  if (value) *value = v;
  return arg;
}

}  // namespace

int policy_action(const AlphaPolicy& policy, const Belief& belief) {
  return policy.vectors[best_vector(policy, belief, nullptr)].action;
}

double policy_value(const AlphaPolicy& policy, const Belief& belief) {
  double v = 0.0;
  best_vector(policy, belief, &v);
  return v;
}

void check_compatible(const AlphaPolicy& policy, const PomdpModel& model) {
  if (policy.fingerprint != model.fingerprint() || policy.num_states != model.num_states() ||
      policy.num_actions != model.num_actions())
    throw FingerprintMismatch("policy fingerprint " + to_hex(policy.fingerprint) + " does not match model " +
                              to_hex(model.fingerprint()));
}

std::vector<PolicyMapCell> policy_map(const AlphaPolicy& policy, const pomdp::LdsPomdp& lds, double belief_step,
                                      int volume_stride) {
  check_compatible(policy, lds.model());
  if (!(belief_step > 0.0) || volume_stride < 1) throw Error("policy map needs a positive step");
  const int nb = static_cast<int>(std::lround(1.0 / belief_step));
  if (std::abs(nb * belief_step - 1.0) > 1e-9) throw Error("belief step must divide 1");
  std::vector<PolicyMapCell> out;
  for (int v = 0; v < lds.volume_cells(); v += volume_stride)
    for (int i = 0; i <= nb; ++i) {
      const double b = std::min(1.0, i * belief_step);
      out.push_back({v, b, policy_action(policy, lds.belief_at(v, b))});
    }
  return out;
}

}  // namespace lifeplan::solver
