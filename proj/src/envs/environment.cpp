#include <algorithm>
#include <charconv>
#include <cmath>

#include "sdpc/envs.hpp"
#include "sdpc/error.hpp"

namespace sdpc {

std::vector<double> Environment::reset(std::uint64_t seed) {
  steps_ = 0;
  done_ = false;
  return do_reset(seed);
}

StepResult Environment::step(std::span<const double> action) {
  const EnvSpec s = spec();
  if (action.size() != s.action_dim) throw ShapeError("action has wrong dimension");
  if (done_) throw StateError("episode finished; call reset()");
  std::vector<double> clipped(action.begin(), action.end());
  for (double& a : clipped) {
    if (std::isnan(a)) throw InputError("NaN action component");
    a = std::clamp(a, -1.0, 1.0);
  }
  StepResult r = do_step(clipped);
  ++steps_;
  if (!r.terminal && steps_ >= s.max_episode_steps) r.truncated = true;
  if (r.terminal || r.truncated) done_ = true;
  return r;
}

std::unique_ptr<Environment> make_environment(std::string_view id) {
  if (id == "pendulum") return std::make_unique<Pendulum>();
  if (id == "chain-mdp") return make_chain_mdp();
  if (id == "bandit") return std::make_unique<TwoArmedBandit>();
  if (id.starts_with("pointmass-")) {
    const std::string_view digits = id.substr(10);
    std::size_t dims = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dims);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && dims >= 1) {
      return std::make_unique<PointMass>(dims);
    }
  }
  if (id.starts_with("tabular:")) return load_tabular_environment(std::string(id.substr(8)));
  throw InputError("unknown environment id '" + std::string(id) + "'");
}

}  // namespace sdpc
