#pragma once

// Point-based POMDP solver in the SARSOP family: alpha-vector lower bound,
// sawtooth upper bound, heuristic trials from the initial belief guided by
// the bound gap.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lifeplan/error.hpp"
#include "lifeplan/pomdp.hpp"

namespace lifeplan::solver {

struct AlphaVector {
  int action = 0;
  std::vector<double> values;
};

struct SolverMetadata {
  double precision = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double wall_seconds = 0.0;
  long iterations = 0;
  long backups = 0;
  bool converged = false;
  bool timed_out = false;

  double gap() const { return upper - lower; }
};

struct AlphaPolicy {
  std::uint64_t fingerprint = 0;
  int num_states = 0;
  int num_actions = 0;
  double discount = 0.0;
  std::optional<double> lambda;
  SolverMetadata meta;
  std::vector<AlphaVector> vectors;
};

struct TracePoint {
  long iteration = 0;
  double elapsed = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t vectors = 0;
  std::size_t upper_points = 0;
};

struct SolveOptions {
  double precision = 1e-3;
  double timeout_seconds = 600.0;
  int max_depth = 2000;
  /// Stop after this many trials; negative means unbounded.
  long max_iterations = -1;
  /// Called after every trial.
  std::function<void(const TracePoint&)> progress;
};

/// Raised when the time budget ran out before a single backup completed.
class SolverTimeout : public Error {
 public:
  SolverTimeout(const std::string& what, SolverMetadata meta) : Error(what), meta_(meta) {}
  const SolverMetadata& metadata() const { return meta_; }

 private:
  SolverMetadata meta_;
};

/// Incremental solver state. solve() drives it to convergence; tests use it
/// directly to inspect the bounds between trials.
class Sarsop {
 public:
  Sarsop(const pomdp::PomdpModel& model, const pomdp::Belief& initial, SolveOptions options = {});
  ~Sarsop();
  Sarsop(const Sarsop&) = delete;
  Sarsop& operator=(const Sarsop&) = delete;

  /// Runs one trial and its backups. Returns true once the root gap is
  /// within precision.
  bool step();
  bool converged() const;

  double lower(const pomdp::Belief& b) const;
  double upper(const pomdp::Belief& b) const;
  double root_lower() const;
  double root_upper() const;

  const std::vector<TracePoint>& trace() const;
  /// Beliefs stored in the upper bound (every belief a trial backed up).
  std::vector<pomdp::Belief> sampled_beliefs() const;
  std::size_t num_vectors() const;
  std::size_t num_upper_points() const;
  long backups() const;
  double elapsed() const;

  AlphaPolicy policy() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Solves until the root gap is within options.precision or the time budget
/// is spent. A timed-out solve returns the partial policy with
/// meta.timed_out set; SolverTimeout is thrown only if nothing was computed.
AlphaPolicy solve(const pomdp::PomdpModel& model, const pomdp::Belief& initial, const SolveOptions& options,
                  std::vector<TracePoint>* trace = nullptr);

/// Action of the maximizing alpha vector. Throws Error on an empty policy or
/// a belief of the wrong dimension.
int policy_action(const AlphaPolicy& policy, const pomdp::Belief& belief);
double policy_value(const AlphaPolicy& policy, const pomdp::Belief& belief);

/// Throws FingerprintMismatch when the policy was computed for another model.
void check_compatible(const AlphaPolicy& policy, const pomdp::PomdpModel& model);

std::string serialize_policy(const AlphaPolicy& policy);
AlphaPolicy parse_policy(std::string_view text);
void save_policy(const AlphaPolicy& policy, const std::string& path);
AlphaPolicy load_policy(const std::string& path);

struct PolicyMapCell {
  int volume = 0;
  double belief = 0.0;
  int action = 0;
};

/// Greedy action over a (volume, P(biotic)) grid.
std::vector<PolicyMapCell> policy_map(const AlphaPolicy& policy, const pomdp::LdsPomdp& lds, double belief_step = 0.01,
                                      int volume_stride = 1);

}  // namespace lifeplan::solver
