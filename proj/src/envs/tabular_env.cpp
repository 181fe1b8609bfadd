#include <fstream>

#include "sdpc/envs.hpp"
#include "sdpc/error.hpp"

namespace sdpc {

TabularEnvironment::TabularEnvironment(TabularMdp mdp, std::size_t start_state,
                                       std::vector<std::size_t> terminal_states,
                                       std::size_t max_episode_steps, std::string id)
    : mdp_(std::move(mdp)),
      grid_(mdp_.dims, std::max<std::size_t>(mdp_.bins, 2)),
      start_(start_state),
      terminal_(mdp_.num_states, false),
      max_steps_(max_episode_steps),
      id_(std::move(id)) {
  mdp_.validate();
  if (mdp_.bins < 2) throw ParameterError("tabular environment needs N >= 2 per dimension");
  if (start_ >= mdp_.num_states) throw InputError("start state out of range");
  if (max_steps_ == 0) throw ParameterError("max_episode_steps must be >= 1");
  for (std::size_t s : terminal_states) {
    if (s >= mdp_.num_states) throw InputError("terminal state out of range");
    terminal_[s] = true;
  }
}

EnvSpec TabularEnvironment::spec() const {
  bool any_terminal = false;
  for (bool t : terminal_) any_terminal = any_terminal || t;
  return {mdp_.num_states, mdp_.dims, max_steps_, any_terminal};
}

std::vector<double> TabularEnvironment::observe() const {
  std::vector<double> s(mdp_.num_states, 0.0);
  s[state_] = 1.0;
  return s;
}

std::vector<double> TabularEnvironment::do_reset(std::uint64_t seed) {
  rng_.seed(seed);
  state_ = start_;
  return observe();
}

StepResult TabularEnvironment::do_step(std::span<const double> clipped) {
  std::vector<std::size_t> idx(mdp_.dims);
  for (std::size_t m = 0; m < mdp_.dims; ++m) idx[m] = grid_.nearest_index(clipped[m]);
  const std::size_t a = mdp_.joint_index(idx);
  const double reward = mdp_.r(state_, a);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng_);
  double cum = 0.0;
  std::size_t next = mdp_.num_states - 1;
  for (std::size_t s2 = 0; s2 < mdp_.num_states; ++s2) {
    cum += mdp_.p(state_, a, s2);
    if (u < cum) {
      next = s2;
      break;
    }
  }
  state_ = next;
  return {observe(), reward, static_cast<bool>(terminal_[state_]), false};
}

std::unique_ptr<TabularEnvironment> make_chain_mdp() {
  // Five states in a line; reward 1 per step spent in the rightmost state.
  // Moving right needs both dimensions at their top index, moving left needs
  // both at their bottom index; anything else mostly stays put.
  constexpr std::size_t kStates = 5;
  TabularMdp mdp{kStates, 2, 3, 0.9, {}, {}};
  const std::size_t na = mdp.num_actions();
  mdp.transitions.assign(kStates * na * kStates, 0.0);
  mdp.rewards.assign(kStates * na, 0.0);
  for (std::size_t s = 0; s < kStates; ++s) {
    for (std::size_t a = 0; a < na; ++a) {
      const auto idx = mdp.components(a);
      const std::size_t right = std::min(s + 1, kStates - 1);
      const std::size_t left = s == 0 ? 0 : s - 1;
      auto at = [&](std::size_t s2) -> double& {
        return mdp.transitions[(s * na + a) * kStates + s2];
      };
      if (idx[0] == 2 && idx[1] == 2) {
        at(right) += 0.9;
        at(s) += 0.1;
      } else if (idx[0] == 0 && idx[1] == 0) {
        at(left) += 0.9;
        at(s) += 0.1;
      } else if (idx[0] == 2 || idx[1] == 2) {
        at(right) += 0.2;
        at(s) += 0.8;
      } else {
        at(s) += 1.0;
      }
      mdp.rewards[s * na + a] = (s == kStates - 1 ? 1.0 : 0.0) - 0.01 * static_cast<double>(
                                                                   idx[0] + idx[1]);
    }
  }
  return std::make_unique<TabularEnvironment>(std::move(mdp), 0, std::vector<std::size_t>{}, 50,
                                              "chain-mdp");
}

std::unique_ptr<TabularEnvironment> load_tabular_environment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open tabular MDP file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("tabular MDP file is not JSON: ") + e.what());
  }
  const nlohmann::json& mdp_json = j.contains("mdp") ? j.at("mdp") : j;
  TabularMdp mdp = tabular_mdp_from_json(mdp_json);
  const auto start = j.value("start_state", std::size_t{0});
  const auto terminals = j.value("terminal_states", std::vector<std::size_t>{});
  const auto max_steps = j.value("max_episode_steps", std::size_t{100});
  return std::make_unique<TabularEnvironment>(std::move(mdp), start, terminals, max_steps,
                                              "tabular:" + path.string());
}

}  // namespace sdpc
