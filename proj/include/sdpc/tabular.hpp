#pragma once

// Finite MDP with a factored action space: M dimensions of N choices each,
// joint action a = sum_m idx_m * N^(M-1-m) (dimension 0 most significant).

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"
#include "sdpc/nn.hpp"

namespace sdpc {

struct TabularMdp {
  std::size_t num_states = 0;
  std::size_t dims = 0;
  std::size_t bins = 0;
  double gamma = 0.9;
  std::vector<double> transitions;  // [s][a][s']
  std::vector<double> rewards;      // [s][a]

  std::size_t num_actions() const;
  double p(std::size_t s, std::size_t a, std::size_t s2) const {
    return transitions[(s * num_actions() + a) * num_states + s2];
  }
  double r(std::size_t s, std::size_t a) const { return rewards[s * num_actions() + a]; }

  std::size_t joint_index(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> components(std::size_t joint) const;

  /// Table sizes, row sums within 1e-12, and N^M <= 10^4.
  void validate() const;
};

/// Dirichlet-like random transitions and standard-normal rewards.
TabularMdp random_mdp(std::size_t states, std::size_t dims, std::size_t bins, double gamma,
                      Rng& rng);

/// {"states":S,"dims":M,"actions_per_dim":N,"gamma":g,
///  "transitions":[S][N^M][S], "rewards":[S][N^M]}
TabularMdp tabular_mdp_from_json(const nlohmann::json& j);
nlohmann::json tabular_mdp_to_json(const TabularMdp& mdp);

}  // namespace sdpc
