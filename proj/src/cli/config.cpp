#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <set>

#include "sdpc/cli.hpp"
#include "sdpc/error.hpp"

namespace sdpc::cli {

void RunConfig::validate() const {
  if (env.empty()) throw UsageError("env: missing environment id");
  try {
    make_environment(env);
  } catch (const InputError& e) {
    throw UsageError(std::string("env: ") + e.what());
  } catch (const FormatError& e) {
    throw UsageError(std::string("env: ") + e.what());
  }
  try {
    agent.validate();
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  if (!(agent.policy_lr > 0.0)) throw UsageError("policy_lr: must be > 0");
  if (!(agent.critic_lr > 0.0)) throw UsageError("critic_lr: must be > 0");
  if (!(agent.alpha_lr > 0.0)) throw UsageError("alpha_lr: must be > 0");
  if (buffer_capacity == 0) throw UsageError("buffer_capacity: must be >= 1");
  if (eval_every == 0) throw UsageError("eval_every: must be >= 1");
  if (stop_at_return && !std::isfinite(*stop_at_return)) {
    throw UsageError("stop_at_return: must be finite");
  }
}

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.total_steps = total_steps;
  o.warmup_steps = warmup_steps;
  o.eval_every = eval_every;
  o.eval_episodes = eval_episodes;
  o.buffer_capacity = buffer_capacity;
  o.seed = seed;
  o.stop_at_return = stop_at_return;
  return o;
}

bool RunConfig::operator==(const RunConfig& other) const { return to_json(*this) == to_json(other); }

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = {{"algorithm", to_string(c.algorithm)},
                      {"env", c.env},
                      {"seed", c.seed},
                      {"agent", c.agent},
                      {"buffer_capacity", c.buffer_capacity},
                      {"total_steps", c.total_steps},
                      {"warmup_steps", c.warmup_steps},
                      {"eval_every", c.eval_every},
                      {"eval_episodes", c.eval_episodes},
                      {"checkpoint_every", c.checkpoint_every}};
  j["stop_at_return"] = c.stop_at_return ? nlohmann::json(*c.stop_at_return) : nlohmann::json();
  return j;
}

namespace {

const std::set<std::string> kTopKeys{"algorithm",    "env",           "seed",
                                     "agent",        "buffer_capacity", "total_steps",
                                     "warmup_steps", "eval_every",    "eval_episodes",
                                     "checkpoint_every", "stop_at_return"};

const std::set<std::string> kAgentKeys{
    "bins",          "hidden",          "gamma",          "tau",
    "policy_lr",     "critic_lr",       "alpha_lr",       "target_entropy",
    "log_alpha_min", "log_alpha_max",   "initial_log_alpha", "batch_size",
    "multistep",     "multistep_width", "importance",     "importance_direction",
    "importance_sigma", "importance_clip", "target_alpha"};

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kTopKeys.contains(key)) throw UsageError(key + ": unknown config field");
  }
  std::string field;
  try {
    RunConfig c;
    auto get = [&](const char* key, auto& dst) {
      field = key;
      if (j.contains(key)) j.at(key).get_to(dst);
    };
    field = "algorithm";
    if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    c.agent = AgentConfig::defaults(c.algorithm);
    get("env", c.env);
    get("seed", c.seed);
    get("buffer_capacity", c.buffer_capacity);
    get("total_steps", c.total_steps);
    get("warmup_steps", c.warmup_steps);
    get("eval_every", c.eval_every);
    get("eval_episodes", c.eval_episodes);
    get("checkpoint_every", c.checkpoint_every);
    field = "stop_at_return";
    if (j.contains("stop_at_return") && !j.at("stop_at_return").is_null()) {
      c.stop_at_return = j.at("stop_at_return").get<double>();
    }
    if (j.contains("agent")) {
      const auto& a = j.at("agent");
      field = "agent";
      if (!a.is_object()) throw UsageError("agent: expected a JSON object");
      for (const auto& [key, _] : a.items()) {
        if (!kAgentKeys.contains(key)) throw UsageError("agent." + key + ": unknown config field");
      }
      a.get_to(c.agent);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(field + ": " + e.what());
  }
}

std::filesystem::path run_root() {
  const char* root = std::getenv("SDPC_RUN_ROOT");
  if (root == nullptr || *root == '\0') return "runs";
  return root;
}

std::filesystem::path default_run_dir(const RunConfig& c) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  std::string env;
  for (char ch : c.env) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
    env += ok ? ch : '_';
  }
  return run_root() / (std::string(stamp) + "-" + to_string(c.algorithm) + "-" + env + "-" +
                       std::to_string(c.seed));
}

}  // namespace sdpc::cli
