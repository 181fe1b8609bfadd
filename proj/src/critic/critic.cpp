#include "sdpc/critic.hpp"

#include <algorithm>
#include <cmath>

#include "sdpc/error.hpp"

namespace sdpc {

SoftCriticPair SoftCriticPair::create(std::size_t state_dim, std::size_t action_dim,
                                      const std::vector<std::size_t>& hidden, AdamConfig adam,
                                      double tau, Rng& rng) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ParameterError("tau must lie in [0, 1]");
  std::vector<std::size_t> widths{state_dim + action_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  SoftCriticPair p;
  p.q1 = Mlp::random(widths, rng);
  p.q2 = Mlp::random(widths, rng);
  p.target1 = p.q1;
  p.target2 = p.q2;
  p.opt1 = Adam(p.q1.parameter_count(), adam);
  p.opt2 = Adam(p.q2.parameter_count(), adam);
  p.tau = tau;
  return p;
}

Matrix critic_input(const Matrix& states, const Matrix& actions) {
  if (states.rows() != actions.rows()) throw ShapeError("state and action batches differ in size");
  Matrix x(states.rows(), states.cols() + actions.cols());
  for (std::size_t b = 0; b < states.rows(); ++b) {
    auto out = x.row(b);
    std::ranges::copy(states.row(b), out.begin());
    std::ranges::copy(actions.row(b), out.begin() + static_cast<std::ptrdiff_t>(states.cols()));
  }
  return x;
}

double q_value(const Mlp& critic, std::span<const double> state, std::span<const double> action) {
  Matrix s(1, state.size());
  Matrix a(1, action.size());
  std::ranges::copy(state, s.row(0).begin());
  std::ranges::copy(action, a.row(0).begin());
  return q_values(critic, s, a)[0];
}

std::vector<double> q_values(const Mlp& critic, const Matrix& states, const Matrix& actions) {
  const Matrix out = critic.forward(critic_input(states, actions));
  return {out.data().begin(), out.data().end()};
}

Matrix swapped_min_q(const SoftCriticPair& pair, const Matrix& states, const Matrix& actions,
                     const ActionGrid& grid) {
  const std::size_t batch = states.rows();
  const std::size_t dims = grid.dims();
  const std::size_t bins = grid.bins();
  if (actions.rows() != batch || actions.cols() != dims) throw ShapeError("action batch shape");
  const std::size_t sd = states.cols();
  Matrix x(batch * dims * bins, sd + dims);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t m = 0; m < dims; ++m) {
      for (std::size_t n = 0; n < bins; ++n) {
        auto row = x.row((b * dims + m) * bins + n);
        std::ranges::copy(states.row(b), row.begin());
        std::ranges::copy(actions.row(b), row.begin() + static_cast<std::ptrdiff_t>(sd));
        row[sd + m] = grid.value(n);
      }
    }
  }
  const Matrix q1 = pair.q1.forward(x);
  const Matrix q2 = pair.q2.forward(x);
  Matrix out(batch, dims * bins);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::min(q1.data()[i], q2.data()[i]);
  return out;
}

namespace {

void check_window(const Window& w) {
  if (w.empty()) throw InputError("empty TD window");
  for (std::size_t k = 1; k < w.size(); ++k) {
    const Transition& prev = *w[k - 1];
    const Transition& cur = *w[k];
    if (prev.terminal || prev.truncated || cur.episode_id != prev.episode_id ||
        cur.step_id != prev.step_id + 1) {
      throw InputError("TD window steps are not consecutive within one episode");
    }
  }
}

Matrix stack_rows(const std::vector<const std::vector<double>*>& rows, std::size_t width) {
  Matrix m(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->size() != width) throw ShapeError("state width differs within a batch");
    std::ranges::copy(*rows[i], m.row(i).begin());
  }
  return m;
}

}  // namespace

std::vector<TdTarget> multistep_td_targets(const SoftCriticPair& pair,
                                           const std::vector<Window>& windows,
                                           const PolicyFn& policy, double alpha, double gamma,
                                           const ActionGrid& grid, Rng& rng) {
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  std::vector<TdTarget> out(windows.size());
  if (windows.empty()) return out;

  // Every successor state whose entropy enters a target, in window order.
  std::vector<const std::vector<double>*> states;
  std::vector<std::size_t> first(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& w = windows[i];
    check_window(w);
    first[i] = states.size();
    for (std::size_t k = 1; k < w.size(); ++k) states.push_back(&w[k]->state);
    if (!w.back()->terminal) states.push_back(&w.back()->next_state);
  }
  const std::size_t width = windows.front().front()->state.size();

  std::vector<DecomposedDistribution> dists;
  Matrix boot_states(0, width);
  std::vector<std::size_t> boot_of(windows.size(), SIZE_MAX);
  Matrix boot_actions;
  if (!states.empty()) {
    dists = policy(stack_rows(states, width));
    if (dists.size() != states.size()) throw ShapeError("policy returned the wrong batch size");
    std::vector<const std::vector<double>*> bs;
    std::vector<std::vector<double>> acts;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (windows[i].back()->terminal) continue;
      const std::size_t j = first[i] + windows[i].size() - 1;
      boot_of[i] = bs.size();
      bs.push_back(states[j]);
      acts.push_back(sample_action(dists[j], grid, rng).action);
    }
    boot_states = stack_rows(bs, width);
    std::vector<const std::vector<double>*> ap;
    for (const auto& a : acts) ap.push_back(&a);
    boot_actions = stack_rows(ap, grid.dims());
  }
  std::vector<double> boot_q;
  if (boot_states.rows() > 0) {
    const auto t1 = q_values(pair.target1, boot_states, boot_actions);
    const auto t2 = q_values(pair.target2, boot_states, boot_actions);
    boot_q.resize(t1.size());
    for (std::size_t i = 0; i < t1.size(); ++i) boot_q[i] = std::min(t1[i], t2[i]);
  }

  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& w = windows[i];
    TdTarget& t = out[i];
    double discount = 1.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (k > 0) t.entropy_terms += discount * alpha * normalized_entropy(dists[first[i] + k - 1]).total;
      t.reward_terms += discount * w[k]->reward;
      discount *= gamma;
    }
    if (!w.back()->terminal) {
      t.entropy_terms += discount * alpha * normalized_entropy(dists[first[i] + w.size() - 1]).total;
      t.bootstrap = discount * boot_q[boot_of[i]];
    }
    t.y = t.reward_terms + t.entropy_terms + t.bootstrap;
    if (!std::isfinite(t.y)) throw NumericError("non-finite TD target");
  }
  return out;
}

TdTarget soft_td_target(const SoftCriticPair& pair, const Transition& t, const PolicyFn& policy,
                        double alpha, double gamma, const ActionGrid& grid, Rng& rng) {
  return multistep_td_targets(pair, {Window{&t}}, policy, alpha, gamma, grid, rng)[0];
}

TdTarget multistep_td_target(const SoftCriticPair& pair, const Window& window,
                             const PolicyFn& policy, double alpha, double gamma,
                             const ActionGrid& grid, Rng& rng) {
  return multistep_td_targets(pair, {window}, policy, alpha, gamma, grid, rng)[0];
}

namespace {

double regress(Mlp& net, Adam& opt, const Matrix& x, std::span<const double> y,
               std::span<const double> w, bool apply) {
  GradTape tape;
  const Matrix q = net.forward(x, tape);
  const std::size_t batch = x.rows();
  Matrix grad(batch, 1);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double e = q(b, 0) - y[b];
    loss += w[b] * e * e;
    grad(b, 0) = 2.0 * w[b] * e / static_cast<double>(batch);
  }
  loss /= static_cast<double>(batch);
  if (!std::isfinite(loss)) throw NumericError("non-finite critic loss");
  if (apply) {
    const auto g = net.backward(tape, grad);
    opt.step(net.parameters(), g);
  }
  return loss;
}

}  // namespace

CriticLosses critic_update(SoftCriticPair& pair, const Matrix& states, const Matrix& actions,
                           std::span<const double> targets, std::span<const double> weights) {
  const std::size_t batch = states.rows();
  if (batch == 0) throw ShapeError("empty critic batch");
  if (targets.size() != batch || weights.size() != batch) {
    throw ShapeError("targets and weights must match the batch size");
  }
  bool any = false;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("importance weights must be finite and >= 0");
    any = any || w > 0.0;
  }
  const Matrix x = critic_input(states, actions);
  return {regress(pair.q1, pair.opt1, x, targets, weights, any),
          regress(pair.q2, pair.opt2, x, targets, weights, any)};
}

void soft_update(SoftCriticPair& pair) {
  soft_update(pair.target1.parameters(), pair.q1.parameters(), pair.tau);
  soft_update(pair.target2.parameters(), pair.q2.parameters(), pair.tau);
}

}  // namespace sdpc
