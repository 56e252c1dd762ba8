#pragma once

// Monte Carlo evaluation: a continuous-measurement environment, multi-sample
// rollouts, classification metrics, lambda sweeps and Pareto filtering.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lifeplan/pomdp.hpp"
#include "lifeplan/rng.hpp"
#include "lifeplan/solver.hpp"

namespace lifeplan::sim {

struct EnvState {
  int life = 0;
  int volume = 0;  // grid index; the true volume is volume * volume_step
  long step = 0;
};

struct StepOutcome {
  double reward = 0.0;
  bool feasible = true;
  /// Absent after declarations and infeasible instrument calls.
  std::optional<pomdp::Observation> observation;
  std::optional<int> declared;
  /// Native-unit values of the measured variables (instrument calls only).
  std::vector<double> measurements;
};

/// Hidden world. Rewards and grid come from the nominal model; the
/// accumulation process may be off-nominal.
class Environment {
 public:
  Environment(const pomdp::LdsPomdp& lds, const bayesnet::ContinuousNetwork& network);
  Environment(const pomdp::LdsPomdp& lds, const bayesnet::ContinuousNetwork& network, double v_acc, double sigma);

  const pomdp::LdsPomdp& model() const { return *lds_; }
  double v_acc() const { return v_acc_; }
  double sigma() const { return sigma_; }

  /// Empty chamber, s_L drawn from the prior.
  EnvState reset(Rng& rng) const;
  StepOutcome step(EnvState& state, int action, Rng& rng) const;
  /// Grid increment of one accumulation draw.
  int draw_increment(Rng& rng) const;

 private:
  const pomdp::LdsPomdp* lds_;
  const bayesnet::ContinuousNetwork* network_;
  double v_acc_;
  double sigma_;
};

/// Agent-side filter shared by every stepper. Resets to the prior after a
/// declaration, holds still on a no-op, and re-anchors at the observed volume
/// when the nominal model rules the observation out. `reanchored` is set in
/// that last case.
pomdp::Belief track_belief(const pomdp::LdsPomdp& lds, const pomdp::Belief& belief, int action,
                           const StepOutcome& outcome, bool* reanchored = nullptr);

class Stepper {
 public:
  virtual ~Stepper() = default;
  /// Called at the start of a rollout and after every declaration.
  virtual void reset() {}
  virtual int act(const pomdp::Belief& belief, int volume) = 0;
};

using StepperFactory = std::function<std::unique_ptr<Stepper>()>;

class PolicyStepper : public Stepper {
 public:
  explicit PolicyStepper(const solver::AlphaPolicy& policy) : policy_(&policy) {}
  int act(const pomdp::Belief& belief, int) override { return solver::policy_action(*policy_, belief); }

 private:
  const solver::AlphaPolicy* policy_;
};

StepperFactory policy_factory(const solver::AlphaPolicy& policy);

struct DeclarationEvent {
  long step = 0;
  int declared = 0;  // kDeclareAbiotic or kDeclareBiotic
  int true_life = 0;
  double belief = 0.0;  // P(biotic) when declaring
};

struct RolloutResult {
  std::vector<DeclarationEvent> events;
  double discounted_return = 0.0;
  std::array<long, pomdp::kNumLdsActions> action_counts{};
  long infeasible = 0;
  long reanchors = 0;
};

/// Exactly `horizon` environment steps, continuing through declarations.
RolloutResult rollout(Stepper& stepper, const Environment& env, std::uint64_t seed, int horizon);

/// Binomial proportion.
struct Rate {
  long numerator = 0;
  long denominator = 0;

  std::optional<double> value() const;
  /// sqrt(p (1 - p) / n); NaN when undefined.
  double standard_error() const;
};

struct MetricsSummary {
  long rollouts = 0;
  int horizon = 0;
  long declarations = 0;
  long biotic_events = 0;
  long abiotic_events = 0;
  long false_negatives = 0;  // a8 on a biotic sample
  long false_positives = 0;  // a9 on an abiotic sample
  long true_positives = 0;
  long true_negatives = 0;
  std::array<long, pomdp::kNumLdsActions> action_histogram{};
  long instrument_uses = 0;
  long infeasible = 0;
  long reanchors = 0;
  double mean_return = 0.0;
  double return_stderr = 0.0;

  Rate fnr() const { return {false_negatives, biotic_events}; }
  Rate fpr() const { return {false_positives, abiotic_events}; }
  Rate tpr() const { return {true_positives, biotic_events}; }
  Rate tnr() const { return {true_negatives, abiotic_events}; }
  std::optional<double> mean_instruments_per_declaration() const;
  /// (FNR + FPR) / 2, undefined if either rate is.
  std::optional<double> mean_error() const;
};

/// Folds rollout results in index order.
MetricsSummary summarize(const std::vector<RolloutResult>& results, int horizon);

/// Rollout i uses seed derive_seed(seed, i). Results do not depend on
/// `threads` (0 means hardware concurrency).
std::vector<RolloutResult> run_rollouts(const StepperFactory& factory, const Environment& env, long n_rollouts,
                                        int horizon, std::uint64_t seed, int threads);
MetricsSummary evaluate(const StepperFactory& factory, const Environment& env, long n_rollouts, int horizon,
                        std::uint64_t seed, int threads);

struct ReturnEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  long episodes = 0;
};

/// Discounted return of the greedy policy simulated inside the POMDP model
/// itself (declarations terminate), from states drawn from `initial`.
ReturnEstimate simulate_model_returns(const pomdp::PomdpModel& model, const solver::AlphaPolicy& policy,
                                      const pomdp::Belief& initial, long episodes, int max_steps,
                                      std::uint64_t seed);

/// (x, y) pairs to minimize; undefined entries are never efficient and never
/// dominate. Efficient: no other point with both coordinates <= and one <.
std::vector<bool> pareto_flags(const std::vector<std::pair<std::optional<double>, std::optional<double>>>& points);

/// lo, lo + step, ... up to hi inclusive (with 1e-9 slack).
std::vector<double> lambda_grid(double lo, double hi, double step);

struct SweepRow {
  double lambda = 0.0;
  std::string status = "ok";  // ok, timeout, failed
  std::string error;
  solver::SolverMetadata solver;
  std::string policy_path;
  std::optional<MetricsSummary> metrics;
  bool pareto = false;
};

/// Solves (or loads from cache_dir) one policy per lambda and evaluates it.
/// Per-point failures are recorded and the sweep continues.
std::vector<SweepRow> lambda_sweep(const std::vector<double>& lambdas, const lds::MissionConfig& config,
                                   const lds::LdsNetwork& network, long n_rollouts, int horizon, std::uint64_t seed,
                                   int threads, const std::string& cache_dir, std::ostream* log = nullptr);

/// Loads a cached policy for this model and precision, or solves and caches
/// it. Returns the policy and the cache path.
std::pair<solver::AlphaPolicy, std::string> cached_solve(const pomdp::LdsPomdp& lds, const std::string& cache_dir,
                                                         std::ostream* log = nullptr);

// ---------------------------------------------------------------------------
// Metrics CSV

struct MetricsRow {
  std::string policy_id;
  std::string scenario;
  std::optional<double> lambda;
  std::optional<double> t_biotic;
  std::optional<double> t_abiotic;
  double v_acc = 0.0;
  std::uint64_t seed = 0;
  std::optional<MetricsSummary> metrics;
  std::optional<bool> pareto;
  std::string status = "ok";
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

/// Per-declaration audit log.
std::string events_csv(const std::vector<RolloutResult>& results);

}  // namespace lifeplan::sim
