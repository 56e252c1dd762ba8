#include "lifeplan/baseline.hpp"

#include "lifeplan/error.hpp"

namespace lifeplan::baseline {

void ConopsParams::validate() const {
  if (!(t_biotic >= 0.9 && t_biotic <= 1.0)) throw ValidationError("t_biotic must lie in [0.9, 1]");
  if (!(t_abiotic >= 0.0 && t_abiotic <= 0.1)) throw ValidationError("t_abiotic must lie in [0, 0.1]");
  if (!(t_abiotic < t_biotic)) throw ValidationError("t_abiotic must be below t_biotic");
}

int conops_step(ConopsPhase& phase, double belief, int volume, const ConopsParams& params,
                const pomdp::LdsPomdp& lds) {
  // Threshold check. Between observations the belief sits at the prior, so
  // this only fires right after a measurement.
  if (belief >= params.t_biotic) {
    phase = {};
    return pomdp::kDeclareBiotic;
  }
  if (belief <= params.t_abiotic) {
    phase = {};
    return pomdp::kDeclareAbiotic;
  }
  if (phase.stage == ConopsPhase::Stage::Accumulate) {
    if (volume < lds.full_volume()) return pomdp::kAccumulate;
    phase.stage = ConopsPhase::Stage::Measure;
    phase.next_instrument = 0;
  }
  while (phase.next_instrument < lds::kNumInstruments && !lds.feasible(phase.next_instrument, volume))
    ++phase.next_instrument;
  if (phase.next_instrument >= lds::kNumInstruments) {
    phase = {};
    return pomdp::kAccumulate;
  }
  return phase.next_instrument++;
}

sim::StepperFactory conops_factory(const pomdp::LdsPomdp& lds, const ConopsParams& params) {
  params.validate();
  return [&lds, params] { return std::make_unique<ConopsStepper>(lds, params); };
}

std::vector<ConopsRow> threshold_sweep(const std::vector<double>& t_biotic, const std::vector<double>& t_abiotic,
                                       const sim::Environment& env, long n_rollouts, int horizon,
                                       std::uint64_t seed, int threads) {
  std::vector<ConopsRow> rows;
  for (double tb : t_biotic)
    for (double ta : t_abiotic) {
      ConopsParams p{tb, ta};
      rows.push_back({p, sim::evaluate(conops_factory(env.model(), p), env, n_rollouts, horizon, seed, threads)});
    }
  std::vector<std::pair<std::optional<double>, std::optional<double>>> pts;
  for (const auto& r : rows) pts.emplace_back(r.metrics.fnr().value(), r.metrics.fpr().value());
  const auto flags = sim::pareto_flags(pts);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].pareto = flags[i];
  return rows;
}

}  // namespace lifeplan::baseline
