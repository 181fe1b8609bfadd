#pragma once

// SDAC and SDCQ agents: a decomposed policy network (logits or decomposed
// Q-values), twin soft critics, and an adaptive temperature.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdpc/checkpoint.hpp"
#include "sdpc/critic.hpp"
#include "sdpc/envs.hpp"
#include "sdpc/nn.hpp"
#include "sdpc/policy.hpp"
#include "sdpc/replay.hpp"

namespace sdpc {

enum class Algorithm { kSdac, kSdcq };
enum class ImportanceDirection { kInverse, kStandard };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);
std::string to_string(ImportanceDirection d);
ImportanceDirection parse_importance_direction(const std::string& s);

struct AgentConfig {
  std::size_t bins = 20;
  std::vector<std::size_t> hidden{256, 256};
  double gamma = 0.99;
  double tau = 5e-3;
  double policy_lr = 1e-3;
  double critic_lr = 1e-3;
  double alpha_lr = 3e-4;
  double target_entropy = -1.0;
  double log_alpha_min = -10.0;
  double log_alpha_max = 2.0;
  double initial_log_alpha = 0.0;
  std::size_t batch_size = 256;
  // SDCQ only.
  bool multistep = true;
  std::size_t multistep_width = 3;
  bool importance = true;
  ImportanceDirection importance_direction = ImportanceDirection::kInverse;
  double importance_sigma = 2.0;
  double importance_clip = 1.0;
  bool target_alpha = true;

  /// Per-algorithm defaults (SDAC target entropy -1, SDCQ 0).
  static AgentConfig defaults(Algorithm a);

  /// ParameterError naming the first invalid field.
  void validate() const;
};

void to_json(nlohmann::json& j, const AgentConfig& c);
void from_json(const nlohmann::json& j, AgentConfig& c);

/// Learnable log alpha, clipped into [min, max] after every step, plus the
/// slow target alpha' used by SDCQ.
class TemperatureState {
 public:
  TemperatureState() = default;
  TemperatureState(double initial_log_alpha, double min_log, double max_log,
                   double target_entropy, double lr);

  double log_alpha() const { return log_alpha_; }
  double alpha() const;
  double alpha_target() const { return alpha_target_; }
  double target_entropy() const { return target_entropy_; }
  double min_log_alpha() const { return min_log_; }
  double max_log_alpha() const { return max_log_; }

  /// J(alpha) = alpha * mean(H_m - H_hat) over every per-dimension entropy
  /// given, and its derivative with respect to log alpha.
  struct Loss {
    double value = 0.0;
    double grad_log_alpha = 0.0;
  };
  Loss loss(std::span<const double> per_dim_entropies) const;

  /// One Adam step on log alpha, then clip.
  void step(double grad_log_alpha);

  /// alpha' <- tau * alpha + (1 - tau) * alpha'.
  void relax_target(double tau);

  void set_log_alpha(double v);
  void set_alpha_target(double v) { alpha_target_ = v; }

 private:
  double log_alpha_ = 0.0;
  double min_log_ = -10.0;
  double max_log_ = 2.0;
  double target_entropy_ = 0.0;
  double alpha_target_ = 1.0;
  Adam opt_;
};

struct StepStats {
  double critic_loss = 0.0;  // mean of the two critics
  double policy_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;  // batch mean of the per-dimension normalized entropy
};

struct PolicyLoss {
  double value = 0.0;
  std::vector<double> grad;  // aligned with the policy network parameters
  std::vector<DecomposedDistribution> dists;
};

class Agent {
 public:
  Agent(Algorithm algorithm, std::size_t state_dim, std::size_t action_dim, AgentConfig config,
        Rng& rng);
  virtual ~Agent() = default;

  Algorithm algorithm() const { return algorithm_; }
  const AgentConfig& config() const { return config_; }
  const ActionGrid& grid() const { return grid_; }
  std::size_t state_dim() const { return state_dim_; }

  Mlp& network() { return net_; }
  const Mlp& network() const { return net_; }
  SoftCriticPair& critics() { return critics_; }
  const SoftCriticPair& critics() const { return critics_; }
  TemperatureState& temperature() { return temperature_; }
  const TemperatureState& temperature() const { return temperature_; }

  /// The M x N output of the network for one state.
  PolicyMatrix policy_matrix(std::span<const double> state) const;

  /// Behavior policy at the current temperature.
  virtual std::vector<DecomposedDistribution> distributions(const Matrix& states) const = 0;

  /// Explore samples the behavior policy; otherwise per-dimension argmax.
  SampledAction act(std::span<const double> state, bool explore, Rng& rng) const;

  /// Loss and gradient of the policy network with the exclusive joint action
  /// of every state fixed (one row of grid values per state).
  virtual PolicyLoss policy_loss(const Matrix& states, const Matrix& sampled_actions) const = 0;

  /// Same, with one joint action drawn per state from the behavior policy.
  PolicyLoss policy_loss(const Matrix& states, Rng& rng) const;

  TemperatureState::Loss temperature_loss(const std::vector<DecomposedDistribution>& dists) const;

  /// Transitions per TD window.
  virtual std::size_t window_width() const { return 1; }

  virtual StepStats train_step(const ReplayBuffer& buffer, Rng& rng) = 0;

  /// Networks "policy", "q1", "q2", "q1_target", "q2_target"; meta holds
  /// the algorithm, grid, temperature, tau and config.
  Checkpoint to_checkpoint() const;

 protected:
  Matrix forward_matrix(const Matrix& states) const;
  std::vector<DecomposedDistribution> boltzmann(const Matrix& states, double alpha) const;
  void apply_policy_gradient(std::span<const double> grad);
  Matrix sample_actions(const std::vector<DecomposedDistribution>& dists, Rng& rng) const;
  static double mean_entropy(const std::vector<DecomposedDistribution>& dists);

  Algorithm algorithm_;
  AgentConfig config_;
  std::size_t state_dim_;
  ActionGrid grid_;
  Mlp net_;
  Adam net_opt_;
  SoftCriticPair critics_;
  TemperatureState temperature_;

  friend std::unique_ptr<Agent> load_agent(const Checkpoint& checkpoint);
};

class SdacAgent final : public Agent {
 public:
  SdacAgent(std::size_t state_dim, std::size_t action_dim, AgentConfig config, Rng& rng);

  std::vector<DecomposedDistribution> distributions(const Matrix& states) const override;

  /// J = (1/M) sum_{m,n} pi_mn (alpha ln pi_mn - min_j Q_j(s, swap)), batch mean.
  PolicyLoss policy_loss(const Matrix& states, const Matrix& sampled_actions) const override;
  using Agent::policy_loss;

  StepStats train_step(const ReplayBuffer& buffer, Rng& rng) override;
};

struct ImportanceConfig {
  ImportanceDirection direction = ImportanceDirection::kInverse;
  double sigma = 2.0;
  double clip = 1.0;
};

/// Per-window weight prod_k exp(sigma * clip(z_k)) over follow-up steps
/// k >= 1, where z is the minibatch z-score of log I and
/// log I = log p_old - log pi'(a | s) (negated for the standard direction).
/// A batch with std(log I) < 1e-8 gets unit weights.
std::vector<double> importance_weights(const std::vector<Window>& windows,
                                       const PolicyFn& target_policy,
                                       const ImportanceConfig& config);

class SdcqAgent final : public Agent {
 public:
  SdcqAgent(std::size_t state_dim, std::size_t action_dim, AgentConfig config, Rng& rng);

  /// Boltzmann policy of the decomposed Q-values at the current alpha.
  std::vector<DecomposedDistribution> distributions(const Matrix& states) const override;

  /// Target policy: Boltzmann at alpha' (or alpha when the target
  /// temperature is disabled).
  std::vector<DecomposedDistribution> target_distributions(const Matrix& states) const;

  /// J = (1/M) sum_{m,n} (d_mn - (q_mn - E_pi_m q_m.))^2, batch mean.
  PolicyLoss policy_loss(const Matrix& states, const Matrix& sampled_actions) const override;
  using Agent::policy_loss;

  std::size_t window_width() const override;

  StepStats train_step(const ReplayBuffer& buffer, Rng& rng) override;
};

std::unique_ptr<Agent> make_agent(Algorithm algorithm, std::size_t state_dim,
                                  std::size_t action_dim, const AgentConfig& config, Rng& rng);

/// Rebuilds an agent from to_checkpoint() output. Optimizer moments are not
/// stored, so a loaded agent restarts them from zero.
std::unique_ptr<Agent> load_agent(const Checkpoint& checkpoint);

struct TrainOptions {
  std::size_t total_steps = 0;
  std::size_t warmup_steps = 1000;
  std::size_t eval_every = 1000;
  std::size_t eval_episodes = 10;
  std::size_t buffer_capacity = 1000000;
  std::uint64_t seed = 0;
  /// Stop after the first evaluation whose mean return reaches this value.
  std::optional<double> stop_at_return;
};

struct MetricsRow {
  std::size_t step = 0;
  double eval_mean = 0.0;
  double eval_std = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;  // mean per-dimension normalized entropy since the previous row
  double critic_loss = 0.0;
  double policy_loss = 0.0;
  double wall_seconds = 0.0;
};

struct EvalResult {
  std::vector<double> returns;
  double mean = 0.0;
  double std = 0.0;
};

/// Greedy episodes on env, episode i reset with a seed derived from (seed, i).
EvalResult evaluate(const Agent& agent, Environment& env, std::size_t episodes, std::uint64_t seed);

/// Optional hooks: every emitted row, every train step's stats, and the end
/// of every environment step.
struct TrainHooks {
  std::function<void(const MetricsRow&)> on_row;
  std::function<void(std::size_t step, const StepStats&)> on_step;
  std::function<void(std::size_t step)> after_env_step;
};

/// Interact, store, and train once per environment step after warmup
/// (uniform random grid actions until then). One metrics row every
/// eval_every steps.
std::vector<MetricsRow> train(Agent& agent, Environment& env, const TrainOptions& options,
                              const TrainHooks& hooks = {});

/// Deterministic 64-bit mix used to derive per-episode seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace sdpc
