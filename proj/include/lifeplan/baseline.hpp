#pragma once

// Scripted Concept of Operations baseline: fill the chamber, run the
// instruments in catalog order, declare once the belief crosses a threshold.

#include <vector>

#include "lifeplan/sim.hpp"

namespace lifeplan::baseline {

struct ConopsParams {
  double t_biotic = 0.95;
  double t_abiotic = 0.05;

  /// Throws ValidationError unless t_biotic in [0.9, 1], t_abiotic in
  /// [0, 0.1] and t_abiotic < t_biotic.
  void validate() const;
};

struct ConopsPhase {
  enum class Stage { Accumulate, Measure };
  Stage stage = Stage::Accumulate;
  int next_instrument = 0;
};

/// One decision. `belief` is P(s_L = 1), `volume` the grid index. Mutates
/// the phase bookkeeping.
int conops_step(ConopsPhase& phase, double belief, int volume, const ConopsParams& params,
                const pomdp::LdsPomdp& lds);

class ConopsStepper : public sim::Stepper {
 public:
  ConopsStepper(const pomdp::LdsPomdp& lds, ConopsParams params) : lds_(&lds), params_(params) {}
  void reset() override { phase_ = {}; }
  int act(const pomdp::Belief& belief, int volume) override {
    return conops_step(phase_, lds_->biotic_probability(belief), volume, params_, *lds_);
  }

 private:
  const pomdp::LdsPomdp* lds_;
  ConopsParams params_;
  ConopsPhase phase_;
};

sim::StepperFactory conops_factory(const pomdp::LdsPomdp& lds, const ConopsParams& params);

struct ConopsRow {
  ConopsParams params;
  sim::MetricsSummary metrics;
  bool pareto = false;
};

/// Every (t_biotic, t_abiotic) pair, t_biotic outer. Pairs share the seed,
/// so they face the same sampled missions.
std::vector<ConopsRow> threshold_sweep(const std::vector<double>& t_biotic, const std::vector<double>& t_abiotic,
                                       const sim::Environment& env, long n_rollouts, int horizon,
                                       std::uint64_t seed, int threads);

}  // namespace lifeplan::baseline
