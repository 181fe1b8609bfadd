#include <algorithm>
#include <cmath>

#include "sdpc/agent.hpp"
#include "sdpc/error.hpp"

namespace sdpc {

SdcqAgent::SdcqAgent(std::size_t state_dim, std::size_t action_dim, AgentConfig config, Rng& rng)
    : Agent(Algorithm::kSdcq, state_dim, action_dim, std::move(config), rng) {}

std::vector<DecomposedDistribution> SdcqAgent::distributions(const Matrix& states) const {
  return boltzmann(states, temperature_.alpha());
}

std::vector<DecomposedDistribution> SdcqAgent::target_distributions(const Matrix& states) const {
  return boltzmann(states, config_.target_alpha ? temperature_.alpha_target() : temperature_.alpha());
}

std::size_t SdcqAgent::window_width() const {
  return config_.multistep ? config_.multistep_width : 1;
}

PolicyLoss SdcqAgent::policy_loss(const Matrix& states, const Matrix& sampled_actions) const {
  const std::size_t batch = states.rows();
  const std::size_t dims = grid_.dims();
  const std::size_t bins = grid_.bins();
  const double alpha = temperature_.alpha();

  GradTape tape;
  const Matrix d = net_.forward(states, tape);
  const Matrix q = swapped_min_q(critics_, states, sampled_actions, grid_);

  PolicyLoss out;
  out.dists.reserve(batch);
  Matrix dd(batch, dims * bins);
  const double scale = 1.0 / static_cast<double>(dims * batch);
  for (std::size_t b = 0; b < batch; ++b) {
    PolicyMatrix pm{dims, bins, {d.row(b).begin(), d.row(b).end()}, Interpretation::kDecomposedQ};
    DecomposedDistribution dist = boltzmann_policy(pm, alpha);
    for (std::size_t m = 0; m < dims; ++m) {
      double baseline = 0.0;
      for (std::size_t n = 0; n < bins; ++n) baseline += dist.prob(m, n) * q(b, m * bins + n);
      for (std::size_t n = 0; n < bins; ++n) {
        const std::size_t k = m * bins + n;
        const double e = d(b, k) - (q(b, k) - baseline);
        out.value += e * e * scale;
        dd(b, k) = 2.0 * e * scale;
      }
    }
    out.dists.push_back(std::move(dist));
  }
  out.grad = net_.backward(tape, dd);
  return out;
}

std::vector<double> importance_weights(const std::vector<Window>& windows,
                                       const PolicyFn& target_policy,
                                       const ImportanceConfig& config) {
  std::vector<double> weights(windows.size(), 1.0);
  std::vector<const Transition*> follow;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t k = 1; k < windows[i].size(); ++k) {
      follow.push_back(windows[i][k]);
      owner.push_back(i);
    }
  }
  if (follow.empty()) return weights;

  Matrix states(follow.size(), follow.front()->state.size());
  for (std::size_t j = 0; j < follow.size(); ++j) {
    std::ranges::copy(follow[j]->state, states.row(j).begin());
  }
  const auto dists = target_policy(states);
  if (dists.size() != follow.size()) throw ShapeError("policy returned the wrong batch size");

  const double sign = config.direction == ImportanceDirection::kInverse ? 1.0 : -1.0;
  std::vector<double> log_i(follow.size());
  double sum = 0.0;
  std::size_t finite = 0;
  for (std::size_t j = 0; j < follow.size(); ++j) {
    log_i[j] = sign * (std::log(follow[j]->p_old) - joint_log_prob(dists[j], follow[j]->indices));
    if (std::isfinite(log_i[j])) {
      sum += log_i[j];
      ++finite;
    } else if (std::isnan(log_i[j])) {
      throw NumericError("NaN importance ratio");
    }
  }
  // Only the finite ratios define the batch statistics; a ratio whose
  // current-policy probability underflowed sits at the clip bound.
  const double mean = finite > 0 ? sum / static_cast<double>(finite) : 0.0;
  double var = 0.0;
  for (double l : log_i) {
    if (std::isfinite(l)) var += (l - mean) * (l - mean);
  }
  const double sd = finite > 0 ? std::sqrt(var / static_cast<double>(finite)) : 0.0;
  if (sd < 1e-8 && finite == follow.size()) return weights;

  for (std::size_t j = 0; j < follow.size(); ++j) {
    double z;
    if (std::isfinite(log_i[j])) {
      z = sd < 1e-8 ? 0.0 : (log_i[j] - mean) / sd;
    } else {
      z = log_i[j] > 0 ? config.clip : -config.clip;
    }
    z = std::clamp(z, -config.clip, config.clip);
    weights[owner[j]] *= std::exp(config.sigma * z);
  }
  return weights;
}

StepStats SdcqAgent::train_step(const ReplayBuffer& buffer, Rng& rng) {
  const std::size_t batch = config_.batch_size;
  const auto windows = buffer.sample_windows(batch, window_width(), rng);

  Matrix states(batch, state_dim_);
  Matrix actions(batch, grid_.dims());
  for (std::size_t b = 0; b < batch; ++b) {
    std::ranges::copy(windows[b].front()->state, states.row(b).begin());
    std::ranges::copy(windows[b].front()->action, actions.row(b).begin());
  }

  StepStats st;
  const PolicyFn target_policy = [this](const Matrix& s) { return target_distributions(s); };
  const double target_alpha = config_.target_alpha ? temperature_.alpha_target() : temperature_.alpha();
  const auto targets = multistep_td_targets(critics_, windows, target_policy, target_alpha,
                                            config_.gamma, grid_, rng);
  std::vector<double> y(batch);
  for (std::size_t b = 0; b < batch; ++b) y[b] = targets[b].y;
  std::vector<double> w(batch, 1.0);
  if (config_.importance && window_width() > 1) {
    w = importance_weights(windows, target_policy,
                           {config_.importance_direction, config_.importance_sigma,
                            config_.importance_clip});
  }
  const CriticLosses cl = critic_update(critics_, states, actions, y, w);
  st.critic_loss = 0.5 * (cl.q1 + cl.q2);

  const PolicyLoss pl = Agent::policy_loss(states, rng);
  apply_policy_gradient(pl.grad);
  st.policy_loss = pl.value;

  const TemperatureState::Loss tl = temperature_loss(pl.dists);
  temperature_.step(tl.grad_log_alpha);
  temperature_.relax_target(config_.tau);
  soft_update(critics_);

  st.alpha = temperature_.alpha();
  st.entropy = mean_entropy(pl.dists);
  return st;
}

}  // namespace sdpc
