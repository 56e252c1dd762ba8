#pragma once

// Tabular POMDPs with factored observations, and the life detection model
// built on top of them.
//
// An observation is a pair (visible, symbol). `visible` is a deterministic
// tag of the next state (the volume reading for the life detection model);
// `symbol` is drawn from the action's alphabet with probabilities that depend
// on the next state.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lifeplan/bayesnet.hpp"
#include "lifeplan/lds_model.hpp"

namespace lifeplan::pomdp {

struct Transition {
  int next;
  double prob;
};

/// Raw tables handed to PomdpModel. Indexing:
///   transitions[s * A + a], rewards[s * A + a], observations[a * S + s'].
struct ModelTables {
  int num_states = 0;
  int num_actions = 0;
  double discount = 0.95;
  std::vector<std::string> action_names;
  std::vector<int> alphabet_sizes;
  std::vector<int> visible;
  std::vector<char> terminal;
  std::vector<std::vector<Transition>> transitions;
  std::vector<std::vector<double>> observations;
  std::vector<double> rewards;
};

class PomdpModel {
 public:
  PomdpModel() = default;
  /// Throws ValidationError on shape errors or rows not summing to 1 (1e-9).
  explicit PomdpModel(ModelTables tables);

  int num_states() const { return t_.num_states; }
  int num_actions() const { return t_.num_actions; }
  double discount() const { return t_.discount; }
  const std::string& action_name(int a) const { return t_.action_names[a]; }
  int alphabet_size(int a) const { return t_.alphabet_sizes[a]; }
  int visible(int s) const { return t_.visible[s]; }
  bool terminal(int s) const { return t_.terminal[s] != 0; }

  std::span<const Transition> transitions(int s, int a) const {
    return t_.transitions[static_cast<std::size_t>(s) * t_.num_actions + a];
  }
  std::span<const double> observation_probs(int a, int next) const {
    return t_.observations[static_cast<std::size_t>(a) * t_.num_states + next];
  }
  double reward(int s, int a) const { return t_.rewards[static_cast<std::size_t>(s) * t_.num_actions + a]; }

  /// Hash of every table entry; identifies the model in policy files.
  std::uint64_t fingerprint() const { return fingerprint_; }
  const ModelTables& tables() const { return t_; }

 private:
  ModelTables t_;
  std::uint64_t fingerprint_ = 0;
};

struct Observation {
  int visible = 0;
  int symbol = 0;
  friend bool operator==(const Observation&, const Observation&) = default;
  friend auto operator<=>(const Observation&, const Observation&) = default;
};

/// Dense distribution over model states.
struct Belief {
  std::vector<double> p;
};

/// Bayes filter. Throws ImpossibleObservation when the observation has zero
/// probability under (belief, action).
Belief belief_update(const PomdpModel& model, const Belief& belief, int action, const Observation& obs);

/// P(o | b, a) for every observation with positive probability, sorted.
std::vector<std::pair<Observation, double>> observation_distribution(const PomdpModel& model, const Belief& belief,
                                                                     int action);

// ---------------------------------------------------------------------------
// Life detection model

inline constexpr int kNumLdsActions = 9;
inline constexpr int kAccumulate = 6;
inline constexpr int kDeclareAbiotic = 7;
inline constexpr int kDeclareBiotic = 8;

inline bool is_instrument(int a) { return a >= 0 && a < lds::kNumInstruments; }
inline bool is_declaration(int a) { return a == kDeclareAbiotic || a == kDeclareBiotic; }

/// "a1".."a9".
std::string action_label(int a);
/// Short name: instrument name, "accumulate", "declare-abiotic", "declare-biotic".
std::string action_short_name(int a);

struct LdsState {
  int life = 0;
  int volume = 0;  // grid index
  bool terminal = false;
};

int volume_cells(const lds::MissionConfig& config);
int usage_cells(const lds::MissionConfig& config, int instrument);

double reward(const LdsState& state, int action, const lds::MissionConfig& config);

/// Probability of each grid increment 0, 1, ... for one accumulation step.
std::vector<double> accumulation_increments(const lds::MissionConfig& config);

class LdsPomdp {
 public:
  const lds::MissionConfig& config() const { return config_; }
  const PomdpModel& model() const { return model_; }
  const bayesnet::DiscreteBayesNet& network() const { return network_; }

  int volume_cells() const { return cells_; }
  int full_volume() const { return cells_ - 1; }
  int state_index(int life, int volume) const { return volume * 2 + life; }
  int terminal_state() const { return 2 * cells_; }
  LdsState decode(int s) const;
  int usage_cells(int instrument) const { return usage_[instrument]; }
  bool feasible(int action, int volume) const { return !is_instrument(action) || usage_[action] <= volume; }

  /// Belief concentrated on one volume with P(life) = p_life.
  Belief belief_at(int volume, double p_life) const;
  double biotic_probability(const Belief& b) const;
  /// Volume index carrying the most mass; -1 for the terminal state.
  int volume_of(const Belief& b) const;

  const std::vector<std::vector<int>>& alphabet(int instrument) const { return alphabets_[instrument]; }
  const std::vector<int>& measured(int instrument) const { return measured_[instrument]; }
  /// Alphabet index of a tuple of bins (ordered as measured()).
  int symbol_of(int instrument, std::span<const int> bins) const;

 private:
  friend LdsPomdp build_model(const lds::MissionConfig&, const lds::LdsNetwork&);
  lds::MissionConfig config_;
  bayesnet::DiscreteBayesNet network_;
  PomdpModel model_;
  int cells_ = 0;
  std::vector<int> usage_;
  std::vector<std::vector<int>> measured_;
  std::vector<std::vector<std::vector<int>>> alphabets_;
};

/// Throws ValidationError when the config does not validate.
LdsPomdp build_model(const lds::MissionConfig& config, const lds::LdsNetwork& network);

/// Sizes, alphabets, reward ranges and fingerprint as JSON.
std::string model_summary_json(const LdsPomdp& lds);

}  // namespace lifeplan::pomdp
