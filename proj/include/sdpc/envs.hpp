#pragma once

// Built-in environments with actions in [-1, 1]^M.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdpc/policy.hpp"
#include "sdpc/tabular.hpp"

namespace sdpc {

struct EnvSpec {
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::size_t max_episode_steps = 1;
  bool has_termination = false;
};

struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  bool terminal = false;   // true end of the episode, no bootstrapping
  bool truncated = false;  // time limit reached
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual EnvSpec spec() const = 0;
  virtual std::string id() const = 0;

  /// Deterministic in `seed`; zeroes the episode step counter.
  std::vector<double> reset(std::uint64_t seed);

  /// Clips the action into [-1, 1]^M. NaN components raise InputError;
  /// stepping a finished episode raises StateError.
  StepResult step(std::span<const double> action);

  std::size_t episode_step() const { return steps_; }

 protected:
  virtual std::vector<double> do_reset(std::uint64_t seed) = 0;
  virtual StepResult do_step(std::span<const double> clipped) = 0;

 private:
  std::size_t steps_ = 0;
  bool done_ = true;
};

/// Torque-limited swing-up. State (cos th, sin th, th_dot), torque 2u.
class Pendulum final : public Environment {
 public:
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kDt = 0.05;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr std::size_t kEpisodeSteps = 200;

  EnvSpec spec() const override { return {3, 1, kEpisodeSteps, false}; }
  std::string id() const override { return "pendulum"; }

  /// Place the pendulum directly (theta = 0 is upright). Starts a new episode.
  std::vector<double> set_state(double theta, double theta_dot);
  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }

 protected:
  std::vector<double> do_reset(std::uint64_t seed) override;
  StepResult do_step(std::span<const double> clipped) override;

 private:
  std::vector<double> observe() const;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

/// M-dimensional damped double integrator: x += v dt; v += a dt - 0.1 v.
class PointMass final : public Environment {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kDamping = 0.1;
  static constexpr std::size_t kEpisodeSteps = 150;

  explicit PointMass(std::size_t dims);

  EnvSpec spec() const override { return {2 * dims_, dims_, kEpisodeSteps, false}; }
  std::string id() const override { return "pointmass-" + std::to_string(dims_); }

  std::vector<double> set_state(std::span<const double> position, std::span<const double> velocity);

 protected:
  std::vector<double> do_reset(std::uint64_t seed) override;
  StepResult do_step(std::span<const double> clipped) override;

 private:
  std::vector<double> observe() const;
  std::size_t dims_;
  std::vector<double> x_;
  std::vector<double> v_;
};

/// Finite MDP driven by continuous actions: each component maps to its
/// nearest index on an N-point grid. Observation is the one-hot state.
class TabularEnvironment final : public Environment {
 public:
  TabularEnvironment(TabularMdp mdp, std::size_t start_state,
                     std::vector<std::size_t> terminal_states, std::size_t max_episode_steps,
                     std::string id = "tabular");

  EnvSpec spec() const override;
  std::string id() const override { return id_; }
  const TabularMdp& mdp() const { return mdp_; }
  std::size_t state_index() const { return state_; }

 protected:
  std::vector<double> do_reset(std::uint64_t seed) override;
  StepResult do_step(std::span<const double> clipped) override;

 private:
  std::vector<double> observe() const;
  TabularMdp mdp_;
  ActionGrid grid_;
  std::size_t start_;
  std::vector<bool> terminal_;
  std::size_t max_steps_;
  std::string id_;
  std::size_t state_ = 0;
  Rng rng_;
};

/// The fixed five-state chain used by the oracle suites (M = 2, N = 3).
std::unique_ptr<TabularEnvironment> make_chain_mdp();

/// {"mdp": <tabular MDP JSON>, "start_state": s0, "terminal_states": [...],
///  "max_episode_steps": T}; the MDP fields may also sit at top level.
std::unique_ptr<TabularEnvironment> load_tabular_environment(const std::filesystem::path& path);

/// Single-state continuous bandit with two reward bumps (arms at -0.5 and
/// +0.5); every episode is one terminal step.
class TwoArmedBandit final : public Environment {
 public:
  EnvSpec spec() const override { return {1, 1, 1, true}; }
  std::string id() const override { return "bandit"; }
  static double reward(double a);

 protected:
  std::vector<double> do_reset(std::uint64_t seed) override;
  StepResult do_step(std::span<const double> clipped) override;
};

/// "pendulum", "pointmass-<M>", "chain-mdp", "bandit", or "tabular:<file.json>".
/// Unknown ids raise InputError.
std::unique_ptr<Environment> make_environment(std::string_view id);

}  // namespace sdpc
