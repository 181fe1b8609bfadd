#pragma once

// Twin soft Q-critics with slow targets, soft TD targets, and the update step.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sdpc/nn.hpp"
#include "sdpc/policy.hpp"
#include "sdpc/replay.hpp"

namespace sdpc {

struct SoftCriticPair {
  Mlp q1, q2;
  Mlp target1, target2;
  Adam opt1, opt2;
  double tau = 5e-3;

  /// Online critics random, targets exact copies. Input width state_dim + action_dim.
  static SoftCriticPair create(std::size_t state_dim, std::size_t action_dim,
                               const std::vector<std::size_t>& hidden, AdamConfig adam,
                               double tau, Rng& rng);
};

/// Rows of [state | action].
Matrix critic_input(const Matrix& states, const Matrix& actions);

double q_value(const Mlp& critic, std::span<const double> state, std::span<const double> action);
std::vector<double> q_values(const Mlp& critic, const Matrix& states, const Matrix& actions);

/// min(Q1, Q2) over every swapped action: entry (b, m*N + n) evaluates
/// state b at actions[b] with component m replaced by grid value n.
Matrix swapped_min_q(const SoftCriticPair& pair, const Matrix& states, const Matrix& actions,
                     const ActionGrid& grid);

/// Maps a batch of states (one per row) to their decomposed policies.
using PolicyFn = std::function<std::vector<DecomposedDistribution>(const Matrix&)>;

struct TdTarget {
  double y = 0.0;
  double reward_terms = 0.0;   // sum_k gamma^k r_k
  double entropy_terms = 0.0;  // discounted alpha * H at every visited successor state
  double bootstrap = 0.0;      // gamma^L min_j Q'_j(s_L, a~); zero after termination
};

/// Soft TD targets for windows of consecutive transitions (width 1 gives the
/// one-step target). Entropy is the normalized total H(s) at temperature
/// `alpha`; one action is drawn per bootstrap state. Windows whose steps are
/// not consecutive within one episode raise InputError.
std::vector<TdTarget> multistep_td_targets(const SoftCriticPair& pair,
                                           const std::vector<Window>& windows,
                                           const PolicyFn& policy, double alpha, double gamma,
                                           const ActionGrid& grid, Rng& rng);

TdTarget soft_td_target(const SoftCriticPair& pair, const Transition& t, const PolicyFn& policy,
                        double alpha, double gamma, const ActionGrid& grid, Rng& rng);

TdTarget multistep_td_target(const SoftCriticPair& pair, const Window& window,
                             const PolicyFn& policy, double alpha, double gamma,
                             const ActionGrid& grid, Rng& rng);

struct CriticLosses {
  double q1 = 0.0;
  double q2 = 0.0;
};

/// One Adam step per critic on sum_b w_b (Q(s_b, a_b) - y_b)^2 / B. Losses are
/// measured before the step. An all-zero weight vector skips the step.
CriticLosses critic_update(SoftCriticPair& pair, const Matrix& states, const Matrix& actions,
                           std::span<const double> targets, std::span<const double> weights);

void soft_update(SoftCriticPair& pair);

}  // namespace sdpc
