#include <fstream>
#include <iomanip>
#include <ostream>

#include "CLI11.hpp"
#include "sdpc/checkpoint.hpp"
#include "sdpc/cli.hpp"
#include "sdpc/envs.hpp"
#include "sdpc/error.hpp"
#include "sdpc/oracle.hpp"

namespace sdpc::cli {

std::filesystem::path run_train(const RunConfig& config, const std::filesystem::path& dir,
                                std::ostream& log) {
  config.validate();
  auto env = make_environment(config.env);
  const EnvSpec spec = env->spec();

  std::filesystem::create_directories(dir / "checkpoints");
  {
    std::ofstream cfg(dir / "config.json", std::ios::binary);
    if (!cfg) throw InputError("cannot write " + (dir / "config.json").string());
    cfg << to_json(config).dump(2) << '\n';
  }

  Rng init_rng(mix_seed(config.seed, 0x696e6974ULL));
  auto agent = make_agent(config.algorithm, spec.state_dim, spec.action_dim, config.agent, init_rng);

  auto save = [&](const std::filesystem::path& path) {
    Checkpoint c = agent->to_checkpoint();
    c.meta["env"] = config.env;
    write_checkpoint(path, c);
  };

  TrainHooks hooks;
  hooks.on_row = [&](const MetricsRow& r) {
    log << "step " << r.step << "  eval " << std::fixed << std::setprecision(1) << r.eval_mean
        << " +- " << r.eval_std << std::setprecision(4) << "  alpha " << r.alpha << "  H "
        << r.entropy << std::defaultfloat << '\n';
  };
  if (config.checkpoint_every > 0) {
    hooks.after_env_step = [&](std::size_t step) {
      if (step % config.checkpoint_every == 0) {
        save(dir / "checkpoints" / ("step-" + std::to_string(step) + ".ckpt"));
      }
    };
  }
  const auto rows = train(*agent, *env, config.train_options(), hooks);
  write_metrics(dir, rows);
  const auto final_path = dir / "checkpoints" / "final.ckpt";
  save(final_path);
  return final_path;
}

EvalResult run_eval(const std::filesystem::path& checkpoint, std::optional<std::string> env,
                    std::size_t episodes, std::uint64_t seed, std::ostream& out) {
  const Checkpoint c = read_checkpoint(checkpoint);
  auto agent = load_agent(c);
  std::string env_id;
  if (env) {
    env_id = *env;
  } else if (c.meta.contains("env") && c.meta.at("env").is_string()) {
    env_id = c.meta.at("env").get<std::string>();
  } else {
    throw UsageError("env: checkpoint does not name its environment; pass --env");
  }
  auto e = make_environment(env_id);
  const EvalResult r = evaluate(*agent, *e, episodes, seed);
  out << std::setprecision(10);
  for (std::size_t i = 0; i < r.returns.size(); ++i) {
    out << "episode " << i << " return " << r.returns[i] << '\n';
  }
  out << "mean return " << r.mean << '\n';
  return r;
}

bool run_oracle_checks(std::size_t trials, std::uint64_t seed, std::ostream& out) {
  const auto lines = sdpc::run_oracle_checks(trials, seed);
  out << std::left << std::setw(34) << "check" << std::setw(8) << "cases" << std::setw(14)
      << "worst" << std::setw(12) << "tolerance" << "result\n";
  bool ok = true;
  for (const auto& l : lines) {
    out << std::left << std::setw(34) << l.name << std::setw(8) << l.cases << std::setw(14)
        << std::setprecision(3) << std::scientific << l.worst << std::setw(12) << l.tolerance
        << std::defaultfloat << (l.pass ? "PASS" : "FAIL") << '\n';
    ok = ok && l.pass;
  }
  if (lines.empty()) out << "(no checks run)\n";
  return ok;
}

std::vector<AblationCell> ablation_cells(const RunConfig& base, const std::string& axis) {
  std::vector<AblationCell> cells;
  auto add = [&](std::string name, auto&& edit) {
    RunConfig c = base;
    edit(c);
    cells.push_back({std::move(name), std::move(c)});
  };
  auto on_off = [&](bool AgentConfig::*field) {
    add("on", [&](RunConfig& c) { c.agent.*field = true; });
    add("off", [&](RunConfig& c) { c.agent.*field = false; });
  };
  if (axis == "N") {
    for (std::size_t n : {10, 20, 50}) {
      add("N-" + std::to_string(n), [&](RunConfig& c) { c.agent.bins = n; });
    }
  } else if (axis == "target_entropy") {
    for (int h : {-2, -1, 0, 1}) {
      add("target_entropy-" + std::to_string(h),
          [&](RunConfig& c) { c.agent.target_entropy = static_cast<double>(h); });
    }
  } else if (axis == "multistep") {
    on_off(&AgentConfig::multistep);
  } else if (axis == "importance") {
    on_off(&AgentConfig::importance);
  } else if (axis == "target_alpha") {
    on_off(&AgentConfig::target_alpha);
  } else {
    throw UsageError("axis: unknown ablation axis '" + axis +
                     "' (N, target_entropy, multistep, importance, target_alpha)");
  }
  return cells;
}

void run_ablation(const RunConfig& base, const std::string& axis, const std::filesystem::path& dir,
                  std::ostream& log) {
  const auto cells = ablation_cells(base, axis);
  for (const auto& cell : cells) cell.config.validate();
  for (const auto& cell : cells) {
    log << "== " << axis << ": " << cell.name << '\n';
    run_train(cell.config, dir / cell.name, log);
  }
}

namespace {

/// Flags that mirror RunConfig; each one writes its value into `overlay`,
/// which is merged over the --config file.
void add_run_flags(CLI::App& app, nlohmann::json& overlay, std::string& config_file) {
  app.add_option("--config", config_file, "JSON run configuration; flags override it");
  auto top = [&](const char* flag, const char* key, const char* help, auto tag) {
    using T = decltype(tag);
    app.add_option_function<T>(flag, [&overlay, key](const T& v) { overlay[key] = v; }, help);
  };
  auto agent = [&](const char* flag, const char* key, const char* help, auto tag) {
    using T = decltype(tag);
    app.add_option_function<T>(flag, [&overlay, key](const T& v) { overlay["agent"][key] = v; },
                               help);
  };
  top("--algorithm", "algorithm", "sdac or sdcq", std::string{});
  top("--env", "env", "pendulum, pointmass-<M>, chain-mdp, bandit, tabular:<file>", std::string{});
  top("--seed", "seed", "run seed", std::uint64_t{});
  top("--buffer-capacity", "buffer_capacity", "replay capacity", std::size_t{});
  top("--total-steps", "total_steps", "environment steps", std::size_t{});
  top("--warmup-steps", "warmup_steps", "uniform random steps before training", std::size_t{});
  top("--eval-every", "eval_every", "steps between evaluations", std::size_t{});
  top("--eval-episodes", "eval_episodes", "greedy episodes per evaluation", std::size_t{});
  top("--checkpoint-every", "checkpoint_every", "steps between checkpoints (0: final only)",
      std::size_t{});
  top("--stop-at-return", "stop_at_return", "stop once an evaluation reaches this mean",
      double{});
  agent("--bins", "bins", "grid points per action dimension (N)", std::size_t{});
  agent("--hidden", "hidden", "hidden layer widths", std::vector<std::size_t>{});
  agent("--gamma", "gamma", "discount", double{});
  agent("--tau", "tau", "target mixing rate", double{});
  agent("--policy-lr", "policy_lr", "policy network learning rate", double{});
  agent("--critic-lr", "critic_lr", "critic learning rate", double{});
  agent("--alpha-lr", "alpha_lr", "temperature learning rate", double{});
  agent("--target-entropy", "target_entropy", "target per-dimension normalized entropy",
        double{});
  agent("--log-alpha-min", "log_alpha_min", "lower log-temperature bound", double{});
  agent("--log-alpha-max", "log_alpha_max", "upper log-temperature bound", double{});
  agent("--initial-log-alpha", "initial_log_alpha", "starting log temperature", double{});
  agent("--batch-size", "batch_size", "minibatch size", std::size_t{});
  agent("--multistep", "multistep", "multi-step TD targets (sdcq)", bool{});
  agent("--multistep-width", "multistep_width", "transitions per TD window (sdcq)",
        std::size_t{});
  agent("--importance", "importance", "importance weighting (sdcq)", bool{});
  agent("--importance-direction", "importance_direction", "inverse or standard", std::string{});
  agent("--importance-sigma", "importance_sigma", "log-importance scale", double{});
  agent("--importance-clip", "importance_clip", "z-score clip bound", double{});
  agent("--target-alpha", "target_alpha", "slow target temperature (sdcq)", bool{});
}

RunConfig resolve(const std::string& config_file, const nlohmann::json& overlay) {
  nlohmann::json j = nlohmann::json::object();
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw UsageError("config: cannot open " + config_file);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config: " + std::string(e.what()));
    }
  }
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  j.merge_patch(overlay);
  RunConfig c = run_config_from_json(j);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Soft decomposed policy-critic engine"};
  app.require_subcommand(1);

  nlohmann::json train_overlay = nlohmann::json::object();
  std::string train_config;
  std::string train_out;
  auto* train_cmd = app.add_subcommand("train", "train an agent and write a run directory");
  add_run_flags(*train_cmd, train_overlay, train_config);
  train_cmd->add_option("--out-dir", train_out, "run directory (default under $SDPC_RUN_ROOT)");

  std::string eval_ckpt;
  std::optional<std::string> eval_env;
  std::size_t eval_episodes = 5;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  eval_cmd->add_option("checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--env", eval_env, "environment id (default: the training env)");
  eval_cmd->add_option("--episodes", eval_episodes, "episodes");
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed");

  std::size_t oracle_trials = 20;
  std::uint64_t oracle_seed = 0;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "run the tabular oracle battery");
  oracle_cmd->add_option("--trials", oracle_trials, "random cases per suite");
  oracle_cmd->add_option("--seed", oracle_seed, "seed");

  nlohmann::json ablate_overlay = nlohmann::json::object();
  std::string ablate_config;
  std::string ablate_out;
  std::string axis;
  auto* ablate_cmd = app.add_subcommand("ablate", "sweep one axis, one run per cell");
  add_run_flags(*ablate_cmd, ablate_overlay, ablate_config);
  ablate_cmd->add_option("--axis", axis, "N, target_entropy, multistep, importance, target_alpha")
      ->required();
  ablate_cmd->add_option("--out-dir", ablate_out, "sweep directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) {
      const RunConfig c = resolve(train_config, train_overlay);
      const std::filesystem::path dir = train_out.empty() ? default_run_dir(c) : std::filesystem::path(train_out);
      const auto final_ckpt = run_train(c, dir, out);
      out << "run directory " << dir.string() << '\n' << "checkpoint " << final_ckpt.string() << '\n';
      return 0;
    }
    if (*eval_cmd) {
      run_eval(eval_ckpt, eval_env, eval_episodes, eval_seed, out);
      return 0;
    }
    if (*oracle_cmd) return run_oracle_checks(oracle_trials, oracle_seed, out) ? 0 : 1;
    if (*ablate_cmd) {
      const RunConfig c = resolve(ablate_config, ablate_overlay);
      ablation_cells(c, axis);
      std::filesystem::path dir = ablate_out;
      if (dir.empty()) {
        dir = default_run_dir(c);
        dir += "-ablate-" + axis;
      }
      run_ablation(c, axis, dir, out);
      out << "sweep directory " << dir.string() << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sdpc::cli
