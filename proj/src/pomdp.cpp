#include "lifeplan/pomdp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "lifeplan/error.hpp"
#include "lifeplan/hash.hpp"

namespace lifeplan::pomdp {

namespace {
constexpr double kRowTolerance = 1e-9;
}

PomdpModel::PomdpModel(ModelTables t) : t_(std::move(t)) {
  const int S = t_.num_states, A = t_.num_actions;
  const auto SA = static_cast<std::size_t>(S) * A;
  if (S <= 0 || A <= 0) throw ValidationError("model needs at least one state and one action");
  if (!(t_.discount > 0.0 && t_.discount < 1.0)) throw ValidationError("discount must lie in (0, 1)");
  if (t_.action_names.size() != static_cast<std::size_t>(A) || t_.alphabet_sizes.size() != static_cast<std::size_t>(A))
    throw ValidationError("per-action tables have the wrong length");
  if (t_.visible.empty()) t_.visible.assign(S, 0);
  if (t_.terminal.empty()) t_.terminal.assign(S, 0);
  if (t_.visible.size() != static_cast<std::size_t>(S) || t_.terminal.size() != static_cast<std::size_t>(S))
    throw ValidationError("per-state tables have the wrong length");
  if (t_.transitions.size() != SA || t_.rewards.size() != SA ||
      t_.observations.size() != SA)
    throw ValidationError("transition, reward or observation table has the wrong size");

  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double sum = 0.0;
      for (const auto& tr : transitions(s, a)) {
        if (tr.next < 0 || tr.next >= S || !(tr.prob >= 0.0))
          throw ValidationError("bad transition from state " + std::to_string(s) + " under action " + std::to_string(a));
        sum += tr.prob;
      }
      if (std::abs(sum - 1.0) > kRowTolerance)
        throw ValidationError("transition row (" + std::to_string(s) + ", " + std::to_string(a) + ") sums to " +
                              std::to_string(sum));
      if (!std::isfinite(reward(s, a))) throw ValidationError("non-finite reward");
    }
  for (int a = 0; a < A; ++a) {
    if (t_.alphabet_sizes[a] < 1) throw ValidationError("empty observation alphabet");
    for (int s = 0; s < S; ++s) {
      const auto o = observation_probs(a, s);
      if (o.size() != static_cast<std::size_t>(t_.alphabet_sizes[a]))
        throw ValidationError("observation row has the wrong length");
      double sum = 0.0;
      for (double p : o) {
        if (!(p >= 0.0)) throw ValidationError("negative observation probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowTolerance)
        throw ValidationError("observation row (" + std::to_string(a) + ", " + std::to_string(s) + ") sums to " +
                              std::to_string(sum));
    }
  }

  Fnv1a h;
  h.i64(S);
  h.i64(A);
  h.f64(t_.discount);
  for (int a = 0; a < A; ++a) {
    h.str(t_.action_names[a]);
    h.i64(t_.alphabet_sizes[a]);
  }
  for (int s = 0; s < S; ++s) {
    h.i64(t_.visible[s]);
    h.i64(t_.terminal[s]);
  }
  for (const auto& row : t_.transitions) {
    h.u64(row.size());
    for (const auto& tr : row) {
      h.i64(tr.next);
      h.f64(tr.prob);
    }
  }
  for (const auto& row : t_.observations)
    for (double p : row) h.f64(p);
  for (double r : t_.rewards) h.f64(r);
  fingerprint_ = h.digest();
}

Belief belief_update(const PomdpModel& m, const Belief& b, int a, const Observation& o) {
  const int S = m.num_states();
  if (b.p.size() != static_cast<std::size_t>(S)) throw Error("belief has the wrong dimension");
  if (a < 0 || a >= m.num_actions()) throw Error("action out of range");
  if (o.symbol < 0 || o.symbol >= m.alphabet_size(a)) throw ImpossibleObservation("observation symbol out of range");
  Belief out;
  out.p.assign(S, 0.0);
  for (int s = 0; s < S; ++s) {
    if (b.p[s] == 0.0) continue;
    for (const auto& tr : m.transitions(s, a)) out.p[tr.next] += b.p[s] * tr.prob;
  }
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    if (out.p[s] == 0.0) continue;
    if (m.visible(s) != o.visible) {
      out.p[s] = 0.0;
      continue;
    }
    out.p[s] *= m.observation_probs(a, s)[o.symbol];
    total += out.p[s];
  }
  if (!(total > 0.0))
    throw ImpossibleObservation("observation (" + std::to_string(o.visible) + ", " + std::to_string(o.symbol) +
                                ") has zero probability after action " + m.action_name(a));
  for (double& x : out.p) x /= total;
  return out;
}

std::vector<std::pair<Observation, double>> observation_distribution(const PomdpModel& m, const Belief& b, int a) {
  std::vector<double> next(m.num_states(), 0.0);
  for (int s = 0; s < m.num_states(); ++s) {
    if (b.p[s] == 0.0) continue;
    for (const auto& tr : m.transitions(s, a)) next[tr.next] += b.p[s] * tr.prob;
  }
  std::map<Observation, double> acc;
  for (int s = 0; s < m.num_states(); ++s) {
    if (next[s] == 0.0) continue;
    const auto o = m.observation_probs(a, s);
    for (int k = 0; k < static_cast<int>(o.size()); ++k)
      if (o[k] > 0.0) acc[{m.visible(s), k}] += next[s] * o[k];
  }
  return {acc.begin(), acc.end()};
}

// ---------------------------------------------------------------------------

std::string action_label(int a) { return "a" + std::to_string(a + 1); }

std::string action_short_name(int a) {
  if (is_instrument(a)) return std::string(lds::instrument_name(a));
  switch (a) {
    case kAccumulate: return "accumulate";
    case kDeclareAbiotic: return "declare-abiotic";
    case kDeclareBiotic: return "declare-biotic";
  }
  throw Error("action out of range: " + std::to_string(a));
}

int volume_cells(const lds::MissionConfig& c) { return static_cast<int>(std::lround(c.s_v_max / c.volume_step)) + 1; }

int usage_cells(const lds::MissionConfig& c, int instrument) {
  return static_cast<int>(std::lround(c.usage.at(instrument) / c.volume_step));
}

double reward(const LdsState& s, int a, const lds::MissionConfig& c) {
  if (s.terminal) return 0.0;
  if (is_instrument(a)) {
    if (usage_cells(c, a) > s.volume) return -c.infeasible_penalty;
    return -(1.0 - c.lambda) * c.usage[a] / c.s_v_max;
  }
  switch (a) {
    case kAccumulate: return -c.accumulate_cost;
    case kDeclareAbiotic: return s.life == 0 ? 0.0 : -c.lambda;
    case kDeclareBiotic: return s.life == 1 ? 0.0 : -c.lambda;
  }
  throw Error("action out of range: " + std::to_string(a));
}

std::vector<double> accumulation_increments(const lds::MissionConfig& c) {
  const double mu = c.v_acc / c.volume_step;
  const double sd = c.sigma() / c.volume_step;
  if (!(sd > 0.0)) {
    std::vector<double> out(static_cast<std::size_t>(std::lround(mu)) + 1, 0.0);
    out.back() = 1.0;
    return out;
  }
  // Normal mass per cell [k - 1/2, k + 1/2), cut at zero and at four standard
  // deviations, then renormalized.
  boost::math::normal_distribution<double> nd(mu, sd);
  const double lo = std::max(0.0, mu - 4.0 * sd);
  const double hi = mu + 4.0 * sd;
  const int kmax = static_cast<int>(std::floor(hi + 0.5));
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
  double total = 0.0;
  for (int k = 0; k <= kmax; ++k) {
    const double a = std::max(lo, k - 0.5);
    const double b = std::min(hi, k + 0.5);
    if (b <= a) continue;
    out[k] = boost::math::cdf(nd, b) - boost::math::cdf(nd, a);
    total += out[k];
  }
  for (double& p : out) p /= total;
  return out;
}

LdsState LdsPomdp::decode(int s) const {
  if (s == terminal_state()) return {0, 0, true};
  return {s % 2, s / 2, false};
}

Belief LdsPomdp::belief_at(int volume, double p_life) const {
  Belief b;
  b.p.assign(model_.num_states(), 0.0);
  b.p[state_index(0, volume)] = 1.0 - p_life;
  b.p[state_index(1, volume)] = p_life;
  return b;
}

double LdsPomdp::biotic_probability(const Belief& b) const {
  double live = 0.0, total = 0.0;
  for (int v = 0; v < cells_; ++v) {
    live += b.p[state_index(1, v)];
    total += b.p[state_index(0, v)] + b.p[state_index(1, v)];
  }
  return total > 0.0 ? live / total : 0.0;
}

int LdsPomdp::volume_of(const Belief& b) const {
  int best = -1;
  double mass = b.p[terminal_state()];
  for (int v = 0; v < cells_; ++v) {
    const double m = b.p[state_index(0, v)] + b.p[state_index(1, v)];
    if (m > mass) {
      mass = m;
      best = v;
    }
  }
  return best;
}

int LdsPomdp::symbol_of(int instrument, std::span<const int> bins) const {
  const auto& vars = measured_[instrument];
  if (bins.size() != vars.size()) throw Error("wrong number of measurements for " + action_short_name(instrument));
  int sym = 0;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const int card = network_.variables()[vars[i]].cardinality;
    if (bins[i] < 0 || bins[i] >= card) throw Error("measurement bin out of range");
    sym = sym * card + bins[i];
  }
  return sym;
}

LdsPomdp build_model(const lds::MissionConfig& config, const lds::LdsNetwork& network) {
  const auto issues = lds::validate_config(config);
  if (!issues.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& i : issues) msg += "\n  " + i;
    throw ValidationError(msg);
  }
  LdsPomdp out;
  out.config_ = config;
  out.network_ = network.discrete;
  out.cells_ = volume_cells(config);
  const auto insts = lds::instruments(config);
  const int cells = out.cells_;
  const int S = 2 * cells + 1, A = kNumLdsActions, term = 2 * cells;

  // Observation likelihoods per instrument symbol and life value.
  std::vector<std::array<std::vector<double>, 2>> lik(lds::kNumInstruments);
  for (int i = 0; i < lds::kNumInstruments; ++i) {
    out.usage_.push_back(usage_cells(config, i));
    out.measured_.push_back(lds::measured_indices(insts[i], network.discrete));
    out.alphabets_.push_back(lds::joint_observation_alphabet(insts[i], network.discrete));
    for (int life = 0; life < 2; ++life) {
      auto& row = lik[i][life];
      for (const auto& tuple : out.alphabets_[i]) {
        std::vector<bayesnet::Evidence> ev;
        for (std::size_t k = 0; k < tuple.size(); ++k) ev.push_back({out.measured_[i][k], tuple[k]});
        row.push_back(bayesnet::evidence_likelihood(network.discrete, ev, life));
      }
      // Exact marginals sum to one up to rounding; remove the residue.
      double sum = 0.0;
      for (double p : row) sum += p;
      for (double& p : row) p /= sum;
    }
  }

  ModelTables t;
  t.num_states = S;
  t.num_actions = A;
  t.discount = config.discount;
  for (int a = 0; a < A; ++a) {
    t.action_names.push_back(action_short_name(a));
    t.alphabet_sizes.push_back(is_instrument(a) ? static_cast<int>(out.alphabets_[a].size()) : 1);
  }
  t.visible.resize(S);
  t.terminal.assign(S, 0);
  for (int v = 0; v < cells; ++v) t.visible[2 * v] = t.visible[2 * v + 1] = v;
  t.visible[term] = cells;
  t.terminal[term] = 1;

  const auto inc = accumulation_increments(config);
  const double p = config.p_biotic;
  t.transitions.resize(static_cast<std::size_t>(S) * A);
  t.rewards.resize(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s) {
    const LdsState st = out.decode(s);
    for (int a = 0; a < A; ++a) {
      auto& row = t.transitions[static_cast<std::size_t>(s) * A + a];
      t.rewards[static_cast<std::size_t>(s) * A + a] = reward(st, a, config);
      if (st.terminal) {
        row.push_back({term, 1.0});
      } else if (is_instrument(a)) {
        const int u = out.usage_[a];
        row.push_back({u <= st.volume ? out.state_index(st.life, st.volume - u) : s, 1.0});
      } else if (a == kAccumulate) {
        std::vector<double> mass(cells, 0.0);
        for (std::size_t k = 0; k < inc.size(); ++k)
          mass[std::min(cells - 1, st.volume + static_cast<int>(k))] += inc[k];
        for (int v = 0; v < cells; ++v) {
          if (mass[v] == 0.0) continue;
          if (p < 1.0) row.push_back({out.state_index(0, v), mass[v] * (1.0 - p)});
          if (p > 0.0) row.push_back({out.state_index(1, v), mass[v] * p});
        }
      } else {
        row.push_back({term, 1.0});
      }
    }
  }
  t.observations.resize(static_cast<std::size_t>(S) * A);
  for (int a = 0; a < A; ++a)
    for (int s = 0; s < S; ++s) {
      auto& row = t.observations[static_cast<std::size_t>(a) * S + s];
      if (is_instrument(a) && s != term) {
        row = lik[a][s % 2];
      } else if (is_instrument(a)) {
        row.assign(t.alphabet_sizes[a], 0.0);
        row[0] = 1.0;
      } else {
        row = {1.0};
      }
    }
  out.model_ = PomdpModel(std::move(t));
  return out;
}

std::string model_summary_json(const LdsPomdp& lds) {
  using nlohmann::json;
  const auto& m = lds.model();
  json actions = json::array();
  double rmin = 0.0, rmax = -1e300;
  for (int a = 0; a < m.num_actions(); ++a) {
    json ja{{"id", action_label(a)}, {"name", m.action_name(a)}, {"observation_symbols", m.alphabet_size(a)}};
    if (is_instrument(a)) {
      ja["usage"] = lds.config().usage[a];
      json meas = json::array();
      for (int v : lds.measured(a)) meas.push_back(lds.network().variables()[v].id);
      ja["measures"] = meas;
    }
    actions.push_back(ja);
  }
  for (int s = 0; s < m.num_states(); ++s)
    for (int a = 0; a < m.num_actions(); ++a) {
      const double r = m.reward(s, a);
      if (r == -lds.config().infeasible_penalty) continue;
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
  json doc{{"states", m.num_states()},
           {"non_terminal_states", m.num_states() - 1},
           {"volume_cells", lds.volume_cells()},
           {"actions", actions},
           {"discount", m.discount()},
           {"lambda", lds.config().lambda},
           {"reward_min", rmin},
           {"reward_max", rmax},
           {"infeasible_penalty", -lds.config().infeasible_penalty},
           {"fingerprint", to_hex(m.fingerprint())}};
  return doc.dump(2) + "\n";
}

}  // namespace lifeplan::pomdp
