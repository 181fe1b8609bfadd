#include <cmath>

#include "sdpc/agent.hpp"
#include "sdpc/error.hpp"

namespace sdpc {

SdacAgent::SdacAgent(std::size_t state_dim, std::size_t action_dim, AgentConfig config, Rng& rng)
    : Agent(Algorithm::kSdac, state_dim, action_dim, std::move(config), rng) {}

std::vector<DecomposedDistribution> SdacAgent::distributions(const Matrix& states) const {
  return boltzmann(states, 1.0);
}

PolicyLoss SdacAgent::policy_loss(const Matrix& states, const Matrix& sampled_actions) const {
  const std::size_t batch = states.rows();
  const std::size_t dims = grid_.dims();
  const std::size_t bins = grid_.bins();
  const double alpha = temperature_.alpha();

  GradTape tape;
  const Matrix logits = net_.forward(states, tape);
  const Matrix q = swapped_min_q(critics_, states, sampled_actions, grid_);

  PolicyLoss out;
  out.dists.reserve(batch);
  Matrix dlogits(batch, dims * bins);
  const double scale = 1.0 / static_cast<double>(dims * batch);
  std::vector<double> g(bins);
  for (std::size_t b = 0; b < batch; ++b) {
    DecomposedDistribution dist{dims, bins, std::vector<double>(dims * bins)};
    for (std::size_t m = 0; m < dims; ++m) {
      const auto z = logits.row(b).subspan(m * bins, bins);
      std::span<double> p(dist.probs.data() + m * bins, bins);
      softmax_row(z, p);
      // Log-softmax directly, so that vanishing probabilities stay finite.
      const double mx = *std::ranges::max_element(z);
      double lse = 0.0;
      for (double v : z) lse += std::exp(v - mx);
      lse = mx + std::log(lse);
      double mean_g = 0.0;
      for (std::size_t n = 0; n < bins; ++n) {
        const double logp = z[n] - lse;
        g[n] = alpha * logp - q(b, m * bins + n);
        out.value += p[n] * g[n] * scale;
        mean_g += p[n] * g[n];
      }
      for (std::size_t n = 0; n < bins; ++n) {
        dlogits(b, m * bins + n) = scale * p[n] * (g[n] - mean_g);
      }
    }
    out.dists.push_back(std::move(dist));
  }
  out.grad = net_.backward(tape, dlogits);
  return out;
}

StepStats SdacAgent::train_step(const ReplayBuffer& buffer, Rng& rng) {
  const std::size_t batch = config_.batch_size;
  const auto sample = buffer.sample_batch(batch, rng);
  std::vector<Window> windows;
  windows.reserve(batch);
  for (const Transition* t : sample) windows.push_back({t});

  Matrix states(batch, state_dim_);
  Matrix actions(batch, grid_.dims());
  for (std::size_t b = 0; b < batch; ++b) {
    std::ranges::copy(sample[b]->state, states.row(b).begin());
    std::ranges::copy(sample[b]->action, actions.row(b).begin());
  }

  StepStats st;
  const PolicyFn policy = [this](const Matrix& s) { return distributions(s); };
  const auto targets = multistep_td_targets(critics_, windows, policy, temperature_.alpha(),
                                            config_.gamma, grid_, rng);
  std::vector<double> y(batch);
  for (std::size_t b = 0; b < batch; ++b) y[b] = targets[b].y;
  const std::vector<double> w(batch, 1.0);
  const CriticLosses cl = critic_update(critics_, states, actions, y, w);
  st.critic_loss = 0.5 * (cl.q1 + cl.q2);

  const PolicyLoss pl = Agent::policy_loss(states, rng);
  apply_policy_gradient(pl.grad);
  st.policy_loss = pl.value;

  const TemperatureState::Loss tl = temperature_loss(pl.dists);
  temperature_.step(tl.grad_log_alpha);
  soft_update(critics_);

  st.alpha = temperature_.alpha();
  st.entropy = mean_entropy(pl.dists);
  return st;
}

}  // namespace sdpc
