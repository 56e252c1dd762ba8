#include "lifeplan/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <mutex>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "lifeplan/error.hpp"
#include "lifeplan/hash.hpp"

namespace lifeplan::sim {

using pomdp::Belief;

Environment::Environment(const pomdp::LdsPomdp& lds, const bayesnet::ContinuousNetwork& network)
    : Environment(lds, network, lds.config().v_acc, lds.config().sigma()) {}

Environment::Environment(const pomdp::LdsPomdp& lds, const bayesnet::ContinuousNetwork& network, double v_acc,
                         double sigma)
    : lds_(&lds), network_(&network), v_acc_(v_acc), sigma_(sigma) {
  if (!(v_acc > 0.0) || !(sigma >= 0.0)) throw ValidationError("environment needs v_acc > 0 and sigma >= 0");
  if (network.variables.size() != lds.network().size())
    throw ValidationError("continuous network does not match the model's network");
}

EnvState Environment::reset(Rng& rng) const {
  EnvState s;
  s.life = uniform01(rng) < lds_->config().p_biotic ? 1 : 0;
  return s;
}

int Environment::draw_increment(Rng& rng) const {
  const double step = lds_->config().volume_step;
  if (!(sigma_ > 0.0)) return static_cast<int>(std::lround(v_acc_ / step));
  // Normal truncated below at zero, by inverse CDF.
  boost::math::normal_distribution<double> nd(v_acc_, sigma_);
  const double c0 = boost::math::cdf(nd, 0.0);
  const double u = c0 + uniform01(rng) * (1.0 - c0);
  const double x = u <= 0.0 ? 0.0 : std::max(0.0, boost::math::quantile(nd, std::min(u, 1.0 - 1e-16)));
  return static_cast<int>(std::lround(x / step));
}

StepOutcome Environment::step(EnvState& s, int a, Rng& rng) const {
  if (a < 0 || a >= pomdp::kNumLdsActions) throw Error("action out of range: " + std::to_string(a));
  const auto& cfg = lds_->config();
  StepOutcome out;
  out.reward = pomdp::reward({s.life, s.volume, false}, a, cfg);
  ++s.step;
  if (a == pomdp::kAccumulate) {
    s.volume = std::min(lds_->full_volume(), s.volume + draw_increment(rng));
    s.life = uniform01(rng) < cfg.p_biotic ? 1 : 0;
    out.observation = pomdp::Observation{s.volume, 0};
  } else if (pomdp::is_instrument(a)) {
    if (!lds_->feasible(a, s.volume)) {
      out.feasible = false;
      return out;
    }
    s.volume -= lds_->usage_cells(a);
    const auto values = bayesnet::sample_ancestral(*network_, static_cast<double>(s.life), rng);
    std::vector<int> bins;
    for (int v : lds_->measured(a)) {
      out.measurements.push_back(values[v]);
      bins.push_back(network_->variables[v].bin_of(values[v]));
    }
    out.observation = pomdp::Observation{s.volume, lds_->symbol_of(a, bins)};
  } else {
    out.declared = a;
    s.volume = 0;
  }
  return out;
}

Belief track_belief(const pomdp::LdsPomdp& lds, const Belief& b, int a, const StepOutcome& out, bool* reanchored) {
  if (reanchored) *reanchored = false;
  if (out.declared) return lds.belief_at(0, lds.config().p_biotic);
  if (!out.feasible || !out.observation) return b;
  try {
    return pomdp::belief_update(lds.model(), b, a, *out.observation);
  } catch (const ImpossibleObservation&) {
    if (reanchored) *reanchored = true;
    const int v = std::clamp(out.observation->visible, 0, lds.full_volume());
    const double p = a == pomdp::kAccumulate ? lds.config().p_biotic : lds.biotic_probability(b);
    return lds.belief_at(v, p);
  }
}

StepperFactory policy_factory(const solver::AlphaPolicy& policy) {
  return [&policy] { return std::make_unique<PolicyStepper>(policy); };
}

RolloutResult rollout(Stepper& stepper, const Environment& env, std::uint64_t seed, int horizon) {
  if (horizon < 1) throw Error("horizon must be at least 1");
  const auto& lds = env.model();
  Rng rng(seed);
  EnvState s = env.reset(rng);
  Belief b = lds.belief_at(0, lds.config().p_biotic);
  stepper.reset();
  RolloutResult r;
  const double gamma = lds.model().discount();
  double disc = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const int a = stepper.act(b, s.volume);
    ++r.action_counts.at(a);
    const double p_bio = lds.biotic_probability(b);
    const int life = s.life;
    const StepOutcome out = env.step(s, a, rng);
    r.discounted_return += disc * out.reward;
    disc *= gamma;
    if (!out.feasible) ++r.infeasible;
    if (out.declared) {
      r.events.push_back({t, a, life, p_bio});
      stepper.reset();
    }
    bool re = false;
    b = track_belief(lds, b, a, out, &re);
    if (re) ++r.reanchors;
  }
  return r;
}

std::optional<double> Rate::value() const {
  if (denominator <= 0) return std::nullopt;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

double Rate::standard_error() const {
  const auto p = value();
  if (!p) return std::nan("");
  return std::sqrt(*p * (1.0 - *p) / static_cast<double>(denominator));
}

std::optional<double> MetricsSummary::mean_instruments_per_declaration() const {
  if (declarations <= 0) return std::nullopt;
  return static_cast<double>(instrument_uses) / static_cast<double>(declarations);
}

std::optional<double> MetricsSummary::mean_error() const {
  const auto a = fnr().value(), b = fpr().value();
  if (!a || !b) return std::nullopt;
  return 0.5 * (*a + *b);
}

MetricsSummary summarize(const std::vector<RolloutResult>& results, int horizon) {
  MetricsSummary m;
  m.rollouts = static_cast<long>(results.size());
  m.horizon = horizon;
  double sum = 0.0, sum2 = 0.0;
  for (const auto& r : results) {
    for (const auto& e : r.events) {
      ++m.declarations;
      if (e.true_life == 1) {
        ++m.biotic_events;
        if (e.declared == pomdp::kDeclareAbiotic) ++m.false_negatives;
        else ++m.true_positives;
      } else {
        ++m.abiotic_events;
        if (e.declared == pomdp::kDeclareBiotic) ++m.false_positives;
        else ++m.true_negatives;
      }
    }
    for (int a = 0; a < pomdp::kNumLdsActions; ++a) {
      m.action_histogram[a] += r.action_counts[a];
      if (pomdp::is_instrument(a)) m.instrument_uses += r.action_counts[a];
    }
    m.instrument_uses -= r.infeasible;
    m.infeasible += r.infeasible;
    m.reanchors += r.reanchors;
    sum += r.discounted_return;
    sum2 += r.discounted_return * r.discounted_return;
  }
  if (m.rollouts > 0) {
    const double n = static_cast<double>(m.rollouts);
    m.mean_return = sum / n;
    const double var = m.rollouts > 1 ? std::max(0.0, (sum2 - n * m.mean_return * m.mean_return) / (n - 1.0)) : 0.0;
    m.return_stderr = std::sqrt(var / n);
  }
  return m;
}

std::vector<RolloutResult> run_rollouts(const StepperFactory& factory, const Environment& env, long n, int horizon,
                                        std::uint64_t seed, int threads) {
  if (n < 1) throw Error("need at least one rollout");
  std::vector<RolloutResult> results(static_cast<std::size_t>(n));
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<long>(threads, n));
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      auto stepper = factory();
      for (long i = next++; i < n; i = next++)
        results[static_cast<std::size_t>(i)] = rollout(*stepper, env, derive_seed(seed, static_cast<std::uint64_t>(i)), horizon);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n;
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

MetricsSummary evaluate(const StepperFactory& factory, const Environment& env, long n, int horizon,
                        std::uint64_t seed, int threads) {
  return summarize(run_rollouts(factory, env, n, horizon, seed, threads), horizon);
}

ReturnEstimate simulate_model_returns(const pomdp::PomdpModel& model, const solver::AlphaPolicy& policy,
                                      const Belief& initial, long episodes, int max_steps, std::uint64_t seed) {
  auto draw = [](Rng& rng, auto&& weights, std::size_t n) {
    double u = uniform01(rng);
    std::size_t last = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weights(i);
      if (w <= 0.0) continue;
      last = i;
      u -= w;
      if (u < 0.0) return i;
    }
    return last;
  };
  const double gamma = model.discount();
  double sum = 0.0, sum2 = 0.0;
  for (long e = 0; e < episodes; ++e) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(e));
    int s = static_cast<int>(draw(rng, [&](std::size_t i) { return initial.p[i]; }, initial.p.size()));
    Belief b = initial;
    double g = 0.0, disc = 1.0;
    for (int t = 0; t < max_steps && !model.terminal(s); ++t) {
      const int a = solver::policy_action(policy, b);
      g += disc * model.reward(s, a);
      disc *= gamma;
      const auto trs = model.transitions(s, a);
      const int next = trs[draw(rng, [&](std::size_t i) { return trs[i].prob; }, trs.size())].next;
      const auto obs = model.observation_probs(a, next);
      const int k = static_cast<int>(draw(rng, [&](std::size_t i) { return obs[i]; }, obs.size()));
      b = pomdp::belief_update(model, b, a, {model.visible(next), k});
      s = next;
    }
    sum += g;
    sum2 += g * g;
  }
  ReturnEstimate r;
  r.episodes = episodes;
  const double n = static_cast<double>(episodes);
  r.mean = sum / n;
  const double var = episodes > 1 ? std::max(0.0, (sum2 - n * r.mean * r.mean) / (n - 1.0)) : 0.0;
  r.standard_error = std::sqrt(var / n);
  return r;
}

std::vector<bool> pareto_flags(const std::vector<std::pair<std::optional<double>, std::optional<double>>>& pts) {
  std::vector<bool> out(pts.size(), false);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].first || !pts[i].second) continue;
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (j == i || !pts[j].first || !pts[j].second) continue;
      const double xi = *pts[i].first, yi = *pts[i].second, xj = *pts[j].first, yj = *pts[j].second;
      dominated = xj <= xi && yj <= yi && (xj < xi || yj < yi);
    }
    out[i] = !dominated;
  }
  return out;
}

std::vector<double> lambda_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw ValidationError("lambda grid needs step > 0 and lo <= hi");
  std::vector<double> out;
  for (long i = 0;; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    if (x > hi + 1e-9) break;
    // Snap accumulated rounding so 0.7 + 6 * 0.05 prints as 1.
    out.push_back(std::round(std::min(x, hi) * 1e9) / 1e9);
  }
  return out;
}

namespace {

std::string fmt(double x, const char* spec = "%.6f") {
  if (std::isnan(x)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string fmt(const std::optional<double>& x, const char* spec = "%.6f") { return x ? fmt(*x, spec) : "NA"; }

std::string num_key(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::pair<solver::AlphaPolicy, std::string> cached_solve(const pomdp::LdsPomdp& lds, const std::string& cache_dir,
                                                         std::ostream* log) {
  const auto& cfg = lds.config();
  std::string path;
  if (!cache_dir.empty()) {
    Fnv1a h;
    h.u64(lds.model().fingerprint());
    h.str(num_key(cfg.solver.precision));
    h.str(num_key(cfg.solver.timeout_seconds));
    path = (std::filesystem::path(cache_dir) / ("policy-" + to_hex(h.digest()) + ".txt")).string();
    if (std::filesystem::exists(path)) {
      try {
        auto p = solver::load_policy(path);
        solver::check_compatible(p, lds.model());
        if (log) *log << "reusing cached policy " << path << "\n";
        return {std::move(p), path};
      } catch (const Error& e) {
        if (log) *log << "ignoring cache entry " << path << ": " << e.what() << "\n";
      }
    }
  }
  solver::SolveOptions opt;
  opt.precision = cfg.solver.precision;
  opt.timeout_seconds = cfg.solver.timeout_seconds;
  auto p = solver::solve(lds.model(), lds.belief_at(0, cfg.p_biotic), opt);
  p.lambda = cfg.lambda;
  if (!path.empty()) {
    std::filesystem::create_directories(cache_dir);
    solver::save_policy(p, path);
  }
  return {std::move(p), path};
}

std::vector<SweepRow> lambda_sweep(const std::vector<double>& lambdas, const lds::MissionConfig& config,
                                   const lds::LdsNetwork& network, long n_rollouts, int horizon, std::uint64_t seed,
                                   int threads, const std::string& cache_dir, std::ostream* log) {
  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    SweepRow row;
    row.lambda = lambda;
    try {
      if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda " + std::to_string(lambda) + " outside [0, 1]");
      lds::MissionConfig c = config;
      c.lambda = lambda;
      const auto model = pomdp::build_model(c, network);
      auto [policy, path] = cached_solve(model, cache_dir, log);
      row.solver = policy.meta;
      row.policy_path = path;
      if (policy.meta.timed_out) row.status = "timeout";
      const Environment env(model, network.continuous);
      row.metrics = evaluate(policy_factory(policy), env, n_rollouts, horizon, seed, threads);
      if (log) {
        *log << "lambda " << fmt(lambda, "%.4g") << ": gap " << fmt(policy.meta.gap(), "%.3g") << ", FNR "
             << fmt(row.metrics->fnr().value()) << ", FPR " << fmt(row.metrics->fpr().value()) << "\n";
      }
    } catch (const solver::SolverTimeout& e) {
      row.status = "timeout";
      row.error = e.what();
      row.solver = e.metadata();
    } catch (const Error& e) {
      row.status = "failed";
      row.error = e.what();
    }
    if (log && !row.error.empty()) *log << "lambda " << fmt(lambda, "%.4g") << ": " << row.error << "\n";
    rows.push_back(std::move(row));
  }
  std::vector<std::pair<std::optional<double>, std::optional<double>>> pts;
  for (const auto& r : rows)
    pts.push_back(r.metrics ? std::make_pair(r.metrics->fnr().value(), r.metrics->fpr().value())
                            : std::make_pair(std::optional<double>{}, std::optional<double>{}));
  const auto flags = pareto_flags(pts);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].pareto = flags[i];
  return rows;
}

std::string metrics_csv_header() {
  return "policy_id,scenario,lambda,t_biotic,t_abiotic,v_acc,seed,rollouts,horizon,fnr,fpr,tpr,tnr,"
         "fnr_stderr,fpr_stderr,declarations,biotic_events,abiotic_events,false_negatives,false_positives,"
         "mean_instruments_per_declaration,mean_return,return_stderr,pareto,status\n";
}

std::string metrics_csv_row(const MetricsRow& r) {
  std::string s = r.policy_id + "," + r.scenario + "," + fmt(r.lambda, "%.6g") + "," + fmt(r.t_biotic, "%.6g") + "," +
                  fmt(r.t_abiotic, "%.6g") + "," + fmt(r.v_acc, "%.6g") + "," + std::to_string(r.seed) + ",";
  if (r.metrics) {
    const auto& m = *r.metrics;
    s += std::to_string(m.rollouts) + "," + std::to_string(m.horizon) + "," + fmt(m.fnr().value()) + "," +
         fmt(m.fpr().value()) + "," + fmt(m.tpr().value()) + "," + fmt(m.tnr().value()) + "," +
         fmt(m.fnr().standard_error()) + "," + fmt(m.fpr().standard_error()) + "," + std::to_string(m.declarations) +
         "," + std::to_string(m.biotic_events) + "," + std::to_string(m.abiotic_events) + "," +
         std::to_string(m.false_negatives) + "," + std::to_string(m.false_positives) + "," +
         fmt(m.mean_instruments_per_declaration()) + "," + fmt(m.mean_return) + "," + fmt(m.return_stderr) + ",";
  } else {
    s += "NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,";
  }
  s += (r.pareto ? (*r.pareto ? "1" : "0") : "NA");
  s += "," + r.status + "\n";
  return s;
}

std::string events_csv(const std::vector<RolloutResult>& results) {
  std::string s = "rollout,step,declared,true_life,belief\n";
  for (std::size_t i = 0; i < results.size(); ++i)
    for (const auto& e : results[i].events)
      s += std::to_string(i) + "," + std::to_string(e.step) + "," + pomdp::action_label(e.declared) + "," +
           std::to_string(e.true_life) + "," + fmt(e.belief) + "\n";
  return s;
}

}  // namespace lifeplan::sim
