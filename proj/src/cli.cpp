#include "lifeplan/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "lifeplan/baseline.hpp"
#include "lifeplan/error.hpp"
#include "lifeplan/hash.hpp"
#include "lifeplan/lds_model.hpp"
#include "lifeplan/sim.hpp"
#include "lifeplan/solver.hpp"

namespace lifeplan::cli {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot move output into '" + path + "'");
}

struct LoadedConfig {
  lds::MissionConfig config;
  std::string hash;
};

LoadedConfig load(const std::string& path) {
  const std::string text = read_file(path);
  const auto dir = std::filesystem::path(path).parent_path();
  LoadedConfig out;
  try {
    out.config = lds::parse_config(text, dir.empty() ? "." : dir.string());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
  out.hash = to_hex(hash_bytes(text));
  const auto issues = lds::validate_config(out.config);
  if (!issues.empty()) {
    std::string msg = path + ": invalid configuration";
    for (const auto& i : issues) msg += "\n  " + i;
    throw ValidationError(msg);
  }
  return out;
}

RunManifest start_manifest(const char* command, const Common& c, const LoadedConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.argv = c.argv;
  m.config_path = c.config;
  m.config_hash = cfg.hash;
  m.seed = cfg.config.evaluation.seed;
  return m;
}

void finish_manifest(RunManifest& m, const Common& c, const std::string& primary, Clock::time_point t0,
                     std::ostream& out) {
  m.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  const std::string path = c.manifest ? *c.manifest : primary + ".manifest.json";
  write_file(path, m.to_json());
  out << "manifest: " << path << "\n";
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const solver::SolverTimeout& e) {
    err << "error: " << e.what() << "\n";
    return kSolverTimeout;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const FingerprintMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

json meta_json(const solver::SolverMetadata& m) {
  return {{"lower", m.lower},         {"upper", m.upper},         {"gap", m.gap()},
          {"precision", m.precision}, {"converged", m.converged}, {"timed_out", m.timed_out},
          {"iterations", m.iterations}, {"backups", m.backups},   {"wall_seconds", m.wall_seconds}};
}

std::string policy_id(const std::string& path) { return std::filesystem::path(path).stem().string(); }

std::string scenario_name(const lds::MissionConfig& nominal, double v_acc) {
  if (std::abs(v_acc - nominal.v_acc) < 1e-12) return "nominal";
  char buf[64];
  std::snprintf(buf, sizeof buf, "v_acc=%.6g", v_acc);
  return buf;
}

// Off-nominal environments keep the nominal model; only accumulation changes.
double env_sigma(const lds::MissionConfig& c, double v_acc) {
  lds::MissionConfig o = c;
  o.v_acc = v_acc;
  return o.sigma();
}

}  // namespace

std::string RunManifest::to_json() const {
  json doc{{"format", "lifeplan-manifest/1"},
           {"command", command},
           {"argv", argv},
           {"config_path", config_path},
           {"config_hash", config_hash},
           {"seed", seed},
           {"version", kVersion},
           {"outputs", outputs},
           {"wall_seconds", wall_seconds}};
  doc["details"] = json::parse(details);
  return doc.dump(2) + "\n";
}

std::string cache_dir() {
  if (const char* env = std::getenv("LIFEPLAN_CACHE_DIR"); env && *env) return env;
  return ".lifeplan-cache";
}

std::vector<double> parse_lambda_range(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ValidationError("--lambda: '" + spec + "' is not lo:hi:step");
    }
  }
  if (parts.size() == 1) parts = {parts[0], parts[0], 1.0};
  if (parts.size() != 3) throw ValidationError("--lambda: '" + spec + "' is not lo:hi:step");
  if (parts[0] < 0.0 || parts[1] > 1.0) throw ValidationError("--lambda: values must lie in [0, 1]");
  return sim::lambda_grid(parts[0], parts[1], parts[2]);
}

int cmd_validate(const Common& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto t0 = Clock::now();
    const auto cfg = load(c.config);
    const auto net = lds::build_default_network(cfg.config);
    const auto model = pomdp::build_model(cfg.config, net);
    out << "config ok: " << c.config << " (hash " << cfg.hash << ")\n"
        << "network: " << net.discrete.size() << " variables, root " << net.discrete.root() << "\n"
        << "model: " << model.model().num_states() << " states, " << model.model().num_actions()
        << " actions, fingerprint " << to_hex(model.model().fingerprint()) << "\n";
    if (c.manifest) {
      auto m = start_manifest("validate", c, cfg);
      m.details = json{{"fingerprint", to_hex(model.model().fingerprint())}}.dump();
      finish_manifest(m, c, *c.manifest, t0, out);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_model(const Common& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load(c.config);
    const auto net = lds::build_default_network(cfg.config);
    out << pomdp::model_summary_json(pomdp::build_model(cfg.config, net));
    return static_cast<int>(kOk);
  });
}

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto t0 = Clock::now();
    const auto cfg = load(a.common.config);
    const auto net = lds::build_default_network(cfg.config);
    const auto model = pomdp::build_model(cfg.config, net);
    auto m = start_manifest("solve", a.common, cfg);
    solver::SolveOptions opt;
    opt.precision = cfg.config.solver.precision;
    opt.timeout_seconds = cfg.config.solver.timeout_seconds;
    solver::AlphaPolicy policy;
    try {
      policy = solver::solve(model.model(), model.belief_at(0, cfg.config.p_biotic), opt);
    } catch (const solver::SolverTimeout& e) {
      m.details = json{{"solver", meta_json(e.metadata())}, {"status", "timeout"}}.dump();
      finish_manifest(m, a.common, a.output, t0, out);
      throw;
    }
    policy.lambda = cfg.config.lambda;
    solver::save_policy(policy, a.output);
    m.outputs.push_back(a.output);
    m.details = json{{"solver", meta_json(policy.meta)},
                     {"fingerprint", to_hex(policy.fingerprint)},
                     {"vectors", policy.vectors.size()},
                     {"status", policy.meta.timed_out ? "timeout" : "ok"}}
                    .dump();
    char line[256];
    std::snprintf(line, sizeof line, "lower %.6f  upper %.6f  gap %.3g  vectors %zu  %.1f s%s\n", policy.meta.lower,
                  policy.meta.upper, policy.meta.gap(), policy.vectors.size(), policy.meta.wall_seconds,
                  policy.meta.converged ? "" : "  (not converged)");
    out << line << "policy: " << a.output << "\n";
    finish_manifest(m, a.common, a.output, t0, out);
    if (policy.meta.timed_out) {
      err << "error: solver timed out before reaching the target precision; partial policy written\n";
      return static_cast<int>(kSolverTimeout);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.policy.has_value() == a.conops.has_value()) throw ValidationError("give exactly one of --policy or --conops");
    const auto t0 = Clock::now();
    const auto cfg = load(a.common.config);
    const auto& c = cfg.config;
    const auto net = lds::build_default_network(c);
    const auto model = pomdp::build_model(c, net);
    const double v_acc = a.v_acc.value_or(c.v_acc);
    const std::uint64_t seed = a.seed.value_or(c.evaluation.seed);
    const sim::Environment env(model, net.continuous, v_acc, env_sigma(c, v_acc));

    sim::MetricsRow row;
    row.scenario = scenario_name(c, v_acc);
    row.v_acc = v_acc;
    row.seed = seed;
    solver::AlphaPolicy policy;
    sim::StepperFactory factory;
    if (a.policy) {
      policy = solver::load_policy(*a.policy);
      solver::check_compatible(policy, model.model());
      row.policy_id = policy_id(*a.policy);
      row.lambda = policy.lambda;
      factory = sim::policy_factory(policy);
    } else {
      const baseline::ConopsParams p{a.conops->first, a.conops->second};
      p.validate();
      char id[64];
      std::snprintf(id, sizeof id, "conops-%.6g-%.6g", p.t_biotic, p.t_abiotic);
      row.policy_id = id;
      row.t_biotic = p.t_biotic;
      row.t_abiotic = p.t_abiotic;
      factory = baseline::conops_factory(model, p);
    }
    const auto results =
        sim::run_rollouts(factory, env, c.evaluation.rollouts, c.evaluation.horizon, seed, a.threads);
    row.metrics = sim::summarize(results, c.evaluation.horizon);
    write_file(a.output, sim::metrics_csv_header() + sim::metrics_csv_row(row));
    auto m = start_manifest("eval", a.common, cfg);
    m.seed = seed;
    m.outputs.push_back(a.output);
    if (a.events) {
      write_file(*a.events, sim::events_csv(results));
      m.outputs.push_back(*a.events);
    }
    m.details = json{{"policy_id", row.policy_id}, {"scenario", row.scenario}, {"v_acc", v_acc},
                     {"rollouts", c.evaluation.rollouts}, {"horizon", c.evaluation.horizon}}
                    .dump();
    out << sim::metrics_csv_header() << sim::metrics_csv_row(row);
    finish_manifest(m, a.common, a.output, t0, out);
    return static_cast<int>(kOk);
  });
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.lambda && a.conops_grid) throw ValidationError("give at most one of --lambda or --conops-grid");
    const auto t0 = Clock::now();
    const auto cfg = load(a.common.config);
    const auto& c = cfg.config;
    const auto net = lds::build_default_network(c);
    const double v_acc = a.v_acc.value_or(c.v_acc);
    const std::uint64_t seed = a.seed.value_or(c.evaluation.seed);
    auto m = start_manifest("sweep", a.common, cfg);
    m.seed = seed;
    std::string csv = sim::metrics_csv_header();

    if (a.conops_grid) {
      const auto model = pomdp::build_model(c, net);
      const sim::Environment env(model, net.continuous, v_acc, env_sigma(c, v_acc));
      for (double tb : c.sweep.t_biotic)
        for (double ta : c.sweep.t_abiotic) baseline::ConopsParams{tb, ta}.validate();
      const auto rows = baseline::threshold_sweep(c.sweep.t_biotic, c.sweep.t_abiotic, env, c.evaluation.rollouts,
                                                  c.evaluation.horizon, seed, a.threads);
      for (const auto& r : rows) {
        sim::MetricsRow row;
        char id[64];
        std::snprintf(id, sizeof id, "conops-%.6g-%.6g", r.params.t_biotic, r.params.t_abiotic);
        row.policy_id = id;
        row.scenario = scenario_name(c, v_acc);
        row.t_biotic = r.params.t_biotic;
        row.t_abiotic = r.params.t_abiotic;
        row.v_acc = v_acc;
        row.seed = seed;
        row.metrics = r.metrics;
        row.pareto = r.pareto;
        csv += sim::metrics_csv_row(row);
      }
      m.details = json{{"kind", "conops-grid"}, {"points", rows.size()}}.dump();
    } else {
      const auto lambdas = a.lambda ? parse_lambda_range(*a.lambda)
                                    : sim::lambda_grid(c.sweep.lambda_lo, c.sweep.lambda_hi, c.sweep.lambda_step);
      // Policies are solved for the nominal model; off-nominal sweeps only
      // change the environment.
      std::vector<sim::SweepRow> rows;
      if (std::abs(v_acc - c.v_acc) < 1e-12) {
        rows = sim::lambda_sweep(lambdas, c, net, c.evaluation.rollouts, c.evaluation.horizon, seed, a.threads,
                                 cache_dir(), &out);
      } else {
        for (double lambda : lambdas) {
          sim::SweepRow r;
          r.lambda = lambda;
          try {
            lds::MissionConfig cl = c;
            cl.lambda = lambda;
            const auto model = pomdp::build_model(cl, net);
            auto [policy, path] = sim::cached_solve(model, cache_dir(), &out);
            r.solver = policy.meta;
            r.policy_path = path;
            if (policy.meta.timed_out) r.status = "timeout";
            const sim::Environment env(model, net.continuous, v_acc, env_sigma(c, v_acc));
            r.metrics = sim::evaluate(sim::policy_factory(policy), env, c.evaluation.rollouts, c.evaluation.horizon,
                                      seed, a.threads);
          } catch (const Error& e) {
            r.status = dynamic_cast<const solver::SolverTimeout*>(&e) ? "timeout" : "failed";
            r.error = e.what();
          }
          rows.push_back(std::move(r));
        }
        std::vector<std::pair<std::optional<double>, std::optional<double>>> pts;
        for (const auto& r : rows)
          pts.emplace_back(r.metrics ? r.metrics->fnr().value() : std::nullopt,
                           r.metrics ? r.metrics->fpr().value() : std::nullopt);
        const auto flags = sim::pareto_flags(pts);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i].pareto = flags[i];
      }
      json points = json::array();
      for (const auto& r : rows) {
        sim::MetricsRow row;
        char id[64];
        std::snprintf(id, sizeof id, "sarsop-lambda-%.6g", r.lambda);
        row.policy_id = id;
        row.scenario = scenario_name(c, v_acc);
        row.lambda = r.lambda;
        row.v_acc = v_acc;
        row.seed = seed;
        row.metrics = r.metrics;
        row.pareto = r.pareto;
        row.status = r.status;
        csv += sim::metrics_csv_row(row);
        if (!r.policy_path.empty()) m.outputs.push_back(r.policy_path);
        json p{{"lambda", r.lambda}, {"status", r.status}, {"solver", meta_json(r.solver)}};
        if (!r.error.empty()) p["error"] = r.error;
        points.push_back(p);
      }
      m.details = json{{"kind", "lambda"}, {"points", points}, {"cache_dir", cache_dir()}}.dump();
    }
    write_file(a.output, csv);
    m.outputs.insert(m.outputs.begin(), a.output);
    out << csv;
    finish_manifest(m, a.common, a.output, t0, out);
    return static_cast<int>(kOk);
  });
}

int cmd_policy_map(const PolicyMapArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto t0 = Clock::now();
    const auto cfg = load(a.common.config);
    const auto net = lds::build_default_network(cfg.config);
    const auto model = pomdp::build_model(cfg.config, net);
    const auto policy = solver::load_policy(a.policy);
    if (!(a.belief_step > 0.0 && a.belief_step <= 1.0)) throw ValidationError("--belief-step must lie in (0, 1]");
    const auto cells = solver::policy_map(policy, model, a.belief_step);
    std::string csv = "belief,volume,action,action_name\n";
    const double step = cfg.config.volume_step;
    for (const auto& cell : cells) {
      char line[128];
      std::snprintf(line, sizeof line, "%.6g,%.6g,%s,%s\n", cell.belief, cell.volume * step,
                    pomdp::action_label(cell.action).c_str(), pomdp::action_short_name(cell.action).c_str());
      csv += line;
    }
    write_file(a.output, csv);
    auto m = start_manifest("policy-map", a.common, cfg);
    m.outputs.push_back(a.output);
    m.details = json{{"policy", a.policy}, {"belief_step", a.belief_step}, {"cells", cells.size()}}.dump();
    out << "wrote " << cells.size() << " cells to " << a.output << "\n";
    finish_manifest(m, a.common, a.output, t0, out);
    return static_cast<int>(kOk);
  });
}

}  // namespace lifeplan::cli
