#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lifeplan/cli.hpp"

namespace cli = lifeplan::cli;

int main(int argc, char** argv) {
  CLI::App app{"Life detection planning: solve, evaluate and compare instrument-use policies"};
  app.set_version_flag("--version", std::string(cli::kVersion));
  app.require_subcommand(1);

  cli::Common common;
  for (int i = 0; i < argc; ++i) common.argv.emplace_back(argv[i]);
  std::string manifest;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "Mission configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--manifest", manifest, "Run manifest path (default: <output>.manifest.json)");
  };

  auto* validate = app.add_subcommand("validate", "Check a configuration, its network and the model it builds");
  add_common(validate);

  auto* model = app.add_subcommand("model", "Print a JSON summary of the model");
  add_common(model);

  cli::SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve the POMDP and write a policy file");
  add_common(solve_cmd);
  solve_cmd->add_option("-o,--output", solve.output, "Policy file to write")->required();

  cli::EvalArgs eval;
  std::vector<double> conops;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy or the ConOps baseline by simulation");
  add_common(eval_cmd);
  auto* pol = eval_cmd->add_option("--policy", "Policy file")->check(CLI::ExistingFile);
  auto* con = eval_cmd->add_option("--conops", conops, "ConOps thresholds T_biotic T_abiotic")->expected(2);
  pol->excludes(con);
  auto* eval_vacc = eval_cmd->add_option("--v-acc", "Override the environment's mean accumulation");
  auto* eval_seed_opt = eval_cmd->add_option("--seed", eval_seed, "Master seed (default from config)");
  eval_cmd->add_option("--threads", eval.threads, "Worker threads (0 = all cores)");
  eval_cmd->add_option("-o,--output", eval.output, "Metrics CSV")->required();
  auto* events = eval_cmd->add_option("--events", "Per-declaration event log CSV");

  cli::SweepArgs sweep;
  std::uint64_t sweep_seed = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep lambda (SARSOP) or the ConOps threshold grid");
  add_common(sweep_cmd);
  auto* lam = sweep_cmd->add_option("--lambda", "lo:hi:step (default from config)");
  auto* grid = sweep_cmd->add_flag("--conops-grid", sweep.conops_grid, "Sweep ConOps thresholds instead");
  lam->excludes(grid);
  auto* sweep_vacc = sweep_cmd->add_option("--v-acc", "Override the environment's mean accumulation");
  auto* sweep_seed_opt = sweep_cmd->add_option("--seed", sweep_seed, "Master seed (default from config)");
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads (0 = all cores)");
  sweep_cmd->add_option("-o,--output", sweep.output, "Sweep CSV")->required();

  cli::PolicyMapArgs pmap;
  auto* pmap_cmd = app.add_subcommand("policy-map", "Export the greedy action over (belief, volume)");
  add_common(pmap_cmd);
  pmap_cmd->add_option("--policy", pmap.policy, "Policy file")->required()->check(CLI::ExistingFile);
  pmap_cmd->add_option("--belief-step", pmap.belief_step, "Belief grid spacing");
  pmap_cmd->add_option("-o,--output", pmap.output, "Policy map CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kUsage;
  }
  if (!manifest.empty()) common.manifest = manifest;

  if (validate->parsed()) return cli::cmd_validate(common, std::cout, std::cerr);
  if (model->parsed()) return cli::cmd_model(common, std::cout, std::cerr);
  if (solve_cmd->parsed()) {
    solve.common = common;
    return cli::cmd_solve(solve, std::cout, std::cerr);
  }
  if (eval_cmd->parsed()) {
    eval.common = common;
    if (*pol) eval.policy = pol->as<std::string>();
    if (!conops.empty()) eval.conops = std::make_pair(conops[0], conops[1]);
    if (*eval_vacc) eval.v_acc = eval_vacc->as<double>();
    if (*eval_seed_opt) eval.seed = eval_seed;
    if (*events) eval.events = events->as<std::string>();
    return cli::cmd_eval(eval, std::cout, std::cerr);
  }
  if (sweep_cmd->parsed()) {
    sweep.common = common;
    if (*lam) sweep.lambda = lam->as<std::string>();
    if (*sweep_vacc) sweep.v_acc = sweep_vacc->as<double>();
    if (*sweep_seed_opt) sweep.seed = sweep_seed;
    return cli::cmd_sweep(sweep, std::cout, std::cerr);
  }
  if (pmap_cmd->parsed()) {
    pmap.common = common;
    return cli::cmd_policy_map(pmap, std::cout, std::cerr);
  }
  return cli::kUsage;
}
