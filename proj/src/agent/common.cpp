#include <chrono>
#include <cmath>
#include <numeric>

#include "sdpc/agent.hpp"
#include "sdpc/error.hpp"

namespace sdpc {

std::string to_string(Algorithm a) { return a == Algorithm::kSdac ? "sdac" : "sdcq"; }

Algorithm parse_algorithm(const std::string& s) {
  if (s == "sdac") return Algorithm::kSdac;
  if (s == "sdcq") return Algorithm::kSdcq;
  throw UsageError("algorithm must be 'sdac' or 'sdcq', got '" + s + "'");
}

std::string to_string(ImportanceDirection d) {
  return d == ImportanceDirection::kInverse ? "inverse" : "standard";
}

ImportanceDirection parse_importance_direction(const std::string& s) {
  if (s == "inverse") return ImportanceDirection::kInverse;
  if (s == "standard") return ImportanceDirection::kStandard;
  throw UsageError("importance_direction must be 'inverse' or 'standard', got '" + s + "'");
}

AgentConfig AgentConfig::defaults(Algorithm a) {
  AgentConfig c;
  c.target_entropy = a == Algorithm::kSdac ? -1.0 : 0.0;
  return c;
}

void AgentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ParameterError(field + ": " + why);
  };
  if (bins < 2) fail("bins", "must be >= 2");
  for (std::size_t h : hidden) {
    if (h == 0) fail("hidden", "layer widths must be >= 1");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma", "must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) fail("tau", "must lie in (0, 1]");
  if (!(policy_lr >= 0.0)) fail("policy_lr", "must be >= 0");
  if (!(critic_lr >= 0.0)) fail("critic_lr", "must be >= 0");
  if (!(alpha_lr >= 0.0)) fail("alpha_lr", "must be >= 0");
  if (!std::isfinite(target_entropy)) fail("target_entropy", "must be finite");
  if (!(log_alpha_min < log_alpha_max)) fail("log_alpha_min", "must be below log_alpha_max");
  if (batch_size == 0) fail("batch_size", "must be >= 1");
  if (multistep_width == 0) fail("multistep_width", "must be >= 1");
  if (!(importance_sigma > 0.0)) fail("importance_sigma", "must be > 0");
  if (!(importance_clip > 0.0)) fail("importance_clip", "must be > 0");
}

void to_json(nlohmann::json& j, const AgentConfig& c) {
  j = {{"bins", c.bins},
       {"hidden", c.hidden},
       {"gamma", c.gamma},
       {"tau", c.tau},
       {"policy_lr", c.policy_lr},
       {"critic_lr", c.critic_lr},
       {"alpha_lr", c.alpha_lr},
       {"target_entropy", c.target_entropy},
       {"log_alpha_min", c.log_alpha_min},
       {"log_alpha_max", c.log_alpha_max},
       {"initial_log_alpha", c.initial_log_alpha},
       {"batch_size", c.batch_size},
       {"multistep", c.multistep},
       {"multistep_width", c.multistep_width},
       {"importance", c.importance},
       {"importance_direction", to_string(c.importance_direction)},
       {"importance_sigma", c.importance_sigma},
       {"importance_clip", c.importance_clip},
       {"target_alpha", c.target_alpha}};
}

void from_json(const nlohmann::json& j, AgentConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("bins", c.bins);
  get("hidden", c.hidden);
  get("gamma", c.gamma);
  get("tau", c.tau);
  get("policy_lr", c.policy_lr);
  get("critic_lr", c.critic_lr);
  get("alpha_lr", c.alpha_lr);
  get("target_entropy", c.target_entropy);
  get("log_alpha_min", c.log_alpha_min);
  get("log_alpha_max", c.log_alpha_max);
  get("initial_log_alpha", c.initial_log_alpha);
  get("batch_size", c.batch_size);
  get("multistep", c.multistep);
  get("multistep_width", c.multistep_width);
  get("importance", c.importance);
  if (j.contains("importance_direction")) {
    c.importance_direction = parse_importance_direction(j.at("importance_direction").get<std::string>());
  }
  get("importance_sigma", c.importance_sigma);
  get("importance_clip", c.importance_clip);
  get("target_alpha", c.target_alpha);
}

Agent::Agent(Algorithm algorithm, std::size_t state_dim, std::size_t action_dim,
             AgentConfig config, Rng& rng)
    : algorithm_(algorithm),
      config_(std::move(config)),
      state_dim_(state_dim),
      grid_(action_dim, config_.bins) {
  config_.validate();
  std::vector<std::size_t> widths{state_dim};
  widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
  widths.push_back(action_dim * config_.bins);
  net_ = Mlp::random(widths, rng);
  net_opt_ = Adam(net_.parameter_count(), {config_.policy_lr});
  critics_ = SoftCriticPair::create(state_dim, action_dim, config_.hidden, {config_.critic_lr},
                                    config_.tau, rng);
  temperature_ = TemperatureState(config_.initial_log_alpha, config_.log_alpha_min,
                                  config_.log_alpha_max, config_.target_entropy, config_.alpha_lr);
}

Matrix Agent::forward_matrix(const Matrix& states) const { return net_.forward(states); }

PolicyMatrix Agent::policy_matrix(std::span<const double> state) const {
  if (state.size() != state_dim_) throw ShapeError("state has wrong dimension");
  Matrix s(1, state_dim_);
  std::ranges::copy(state, s.row(0).begin());
  const Matrix d = net_.forward(s);
  return {grid_.dims(), grid_.bins(), {d.data().begin(), d.data().end()},
          algorithm_ == Algorithm::kSdac ? Interpretation::kLogits : Interpretation::kDecomposedQ};
}

std::vector<DecomposedDistribution> Agent::boltzmann(const Matrix& states, double alpha) const {
  const Matrix d = net_.forward(states);
  std::vector<DecomposedDistribution> out;
  out.reserve(states.rows());
  for (std::size_t b = 0; b < states.rows(); ++b) {
    PolicyMatrix pm{grid_.dims(), grid_.bins(), {d.row(b).begin(), d.row(b).end()},
                    Interpretation::kDecomposedQ};
    if (algorithm_ == Algorithm::kSdac) {
      pm.interpretation = Interpretation::kLogits;
      out.push_back(policy_from_logits(pm));
    } else {
      out.push_back(boltzmann_policy(pm, alpha));
    }
  }
  return out;
}

SampledAction Agent::act(std::span<const double> state, bool explore, Rng& rng) const {
  if (state.size() != state_dim_) throw ShapeError("state has wrong dimension");
  Matrix s(1, state_dim_);
  std::ranges::copy(state, s.row(0).begin());
  const DecomposedDistribution dist = distributions(s).front();
  if (explore) return sample_action(dist, grid_, rng);
  // Argmax of the network output itself: identical to the argmax of the
  // softmax except where exp() rounds distinct values together.
  const PolicyMatrix pm = policy_matrix(state);
  SampledAction a;
  a.indices.resize(grid_.dims());
  for (std::size_t m = 0; m < grid_.dims(); ++m) {
    const auto row = pm.row(m);
    a.indices[m] = static_cast<std::size_t>(std::ranges::max_element(row) - row.begin());
  }
  a.action = grid_.to_action(a.indices);
  a.p_joint = std::exp(joint_log_prob(dist, a.indices));
  return a;
}

Matrix Agent::sample_actions(const std::vector<DecomposedDistribution>& dists, Rng& rng) const {
  Matrix a(dists.size(), grid_.dims());
  for (std::size_t b = 0; b < dists.size(); ++b) {
    const SampledAction s = sample_action(dists[b], grid_, rng);
    std::ranges::copy(s.action, a.row(b).begin());
  }
  return a;
}

PolicyLoss Agent::policy_loss(const Matrix& states, Rng& rng) const {
  return policy_loss(states, sample_actions(distributions(states), rng));
}

TemperatureState::Loss Agent::temperature_loss(
    const std::vector<DecomposedDistribution>& dists) const {
  std::vector<double> h;
  for (const auto& d : dists) {
    const EntropyTerms e = normalized_entropy(d);
    h.insert(h.end(), e.per_dim.begin(), e.per_dim.end());
  }
  return temperature_.loss(h);
}

double Agent::mean_entropy(const std::vector<DecomposedDistribution>& dists) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& d : dists) {
    for (double h : normalized_entropy(d).per_dim) sum += h;
    count += d.dims;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

void Agent::apply_policy_gradient(std::span<const double> grad) {
  net_opt_.step(net_.parameters(), grad);
}

Checkpoint Agent::to_checkpoint() const {
  Checkpoint c;
  c.meta = {{"algorithm", to_string(algorithm_)},
            {"state_dim", state_dim_},
            {"action_dim", grid_.dims()},
            {"bins", grid_.bins()},
            {"log_alpha", temperature_.log_alpha()},
            {"alpha_target", temperature_.alpha_target()},
            {"tau", critics_.tau},
            {"config", config_}};
  c.networks = {{"policy", net_},
                {"q1", critics_.q1},
                {"q2", critics_.q2},
                {"q1_target", critics_.target1},
                {"q2_target", critics_.target2}};
  return c;
}

std::unique_ptr<Agent> make_agent(Algorithm algorithm, std::size_t state_dim,
                                  std::size_t action_dim, const AgentConfig& config, Rng& rng) {
  if (algorithm == Algorithm::kSdac) {
    return std::make_unique<SdacAgent>(state_dim, action_dim, config, rng);
  }
  return std::make_unique<SdcqAgent>(state_dim, action_dim, config, rng);
}

std::unique_ptr<Agent> load_agent(const Checkpoint& checkpoint) {
  try {
    const auto& meta = checkpoint.meta;
    const Algorithm algorithm = parse_algorithm(meta.at("algorithm").get<std::string>());
    const AgentConfig config = meta.at("config").get<AgentConfig>();
    const auto state_dim = meta.at("state_dim").get<std::size_t>();
    const auto action_dim = meta.at("action_dim").get<std::size_t>();
    Rng rng(0);
    auto agent = make_agent(algorithm, state_dim, action_dim, config, rng);
    auto take = [&](const char* name, Mlp& dst) {
      const Mlp& src = checkpoint.network(name);
      if (src.widths() != dst.widths()) throw FormatError(std::string("network '") + name + "' has unexpected widths");
      dst = src;
    };
    take("policy", agent->net_);
    take("q1", agent->critics_.q1);
    take("q2", agent->critics_.q2);
    take("q1_target", agent->critics_.target1);
    take("q2_target", agent->critics_.target2);
    agent->critics_.tau = meta.at("tau").get<double>();
    agent->temperature_.set_log_alpha(meta.at("log_alpha").get<double>());
    agent->temperature_.set_alpha_target(meta.at("alpha_target").get<double>());
    return agent;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  } catch (const UsageError& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

EvalResult evaluate(const Agent& agent, Environment& env, std::size_t episodes,
                    std::uint64_t seed) {
  EvalResult r;
  Rng unused(0);
  for (std::size_t e = 0; e < episodes; ++e) {
    std::vector<double> s = env.reset(mix_seed(seed, e));
    double ret = 0.0;
    for (;;) {
      const SampledAction a = agent.act(s, false, unused);
      StepResult step = env.step(a.action);
      ret += step.reward;
      if (step.terminal || step.truncated) break;
      s = std::move(step.next_state);
    }
    r.returns.push_back(ret);
  }
  if (episodes > 0) {
    r.mean = std::accumulate(r.returns.begin(), r.returns.end(), 0.0) / static_cast<double>(episodes);
    double var = 0.0;
    for (double x : r.returns) var += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(var / static_cast<double>(episodes));
  }
  return r;
}

namespace {

constexpr std::uint64_t kTrainStream = 0x7472616eULL;
constexpr std::uint64_t kEvalStream = 0x6576616cULL;

}  // namespace

std::vector<MetricsRow> train(Agent& agent, Environment& env, const TrainOptions& options,
                              const TrainHooks& hooks) {
  std::vector<MetricsRow> rows;
  if (options.total_steps == 0) return rows;
  if (options.eval_every == 0) throw ParameterError("eval_every must be >= 1");
  const EnvSpec spec = env.spec();
  if (spec.state_dim != agent.state_dim() || spec.action_dim != agent.grid().dims()) {
    throw ShapeError("agent and environment disagree on state or action dimension");
  }
  auto eval_env = make_environment(env.id());

  Rng rng(mix_seed(options.seed, kTrainStream));
  ReplayBuffer buffer(options.buffer_capacity);
  const ActionGrid& grid = agent.grid();
  const double uniform_p = std::pow(static_cast<double>(grid.bins()), -static_cast<double>(grid.dims()));
  std::uniform_int_distribution<std::size_t> random_index(0, grid.bins() - 1);

  const auto start = std::chrono::steady_clock::now();
  std::uint64_t episode = 0;
  std::uint64_t episode_step = 0;
  std::vector<double> state = env.reset(mix_seed(options.seed, episode));

  double entropy_sum = 0.0, critic_sum = 0.0, policy_sum = 0.0;
  std::size_t trained = 0;
  const std::size_t min_fill = std::max(agent.config().batch_size, agent.window_width());

  for (std::size_t step = 1; step <= options.total_steps; ++step) {
    SampledAction a;
    if (step <= options.warmup_steps) {
      a.indices.resize(grid.dims());
      for (auto& i : a.indices) i = random_index(rng);
      a.action = grid.to_action(a.indices);
      a.p_joint = uniform_p;
    } else {
      a = agent.act(state, true, rng);
    }
    StepResult r = env.step(a.action);
    Transition t{state, a.action, a.indices, a.p_joint, r.reward, r.next_state,
                 r.terminal, r.truncated, episode, episode_step};
    buffer.push(std::move(t));
    ++episode_step;
    if (r.terminal || r.truncated) {
      ++episode;
      episode_step = 0;
      state = env.reset(mix_seed(options.seed, episode));
    } else {
      state = std::move(r.next_state);
    }

    if (step > options.warmup_steps && buffer.size() >= min_fill) {
      const StepStats st = agent.train_step(buffer, rng);
      entropy_sum += st.entropy;
      critic_sum += st.critic_loss;
      policy_sum += st.policy_loss;
      ++trained;
      if (hooks.on_step) hooks.on_step(step, st);
    }

    if (step % options.eval_every == 0) {
      const EvalResult ev = evaluate(agent, *eval_env, options.eval_episodes,
                                     mix_seed(options.seed, kEvalStream + step));
      MetricsRow row;
      row.step = step;
      row.eval_mean = ev.mean;
      row.eval_std = ev.std;
      row.alpha = agent.temperature().alpha();
      if (trained > 0) {
        const double n = static_cast<double>(trained);
        row.entropy = entropy_sum / n;
        row.critic_loss = critic_sum / n;
        row.policy_loss = policy_sum / n;
      }
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      entropy_sum = critic_sum = policy_sum = 0.0;
      trained = 0;
      rows.push_back(row);
      if (hooks.on_row) hooks.on_row(row);
      if (options.stop_at_return && ev.mean >= *options.stop_at_return) {
        if (hooks.after_env_step) hooks.after_env_step(step);
        break;
      }
    }
    if (hooks.after_env_step) hooks.after_env_step(step);
  }
  return rows;
}

}  // namespace sdpc
