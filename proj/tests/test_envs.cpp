#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "sdpc/envs.hpp"
#include "sdpc/error.hpp"

using namespace sdpc;

TEST(Pendulum, ResetIsDeterministic) {
  Pendulum a, b;
  EXPECT_EQ(a.reset(0), b.reset(0));
  EXPECT_NE(a.reset(0), a.reset(1));
  EXPECT_EQ(a.episode_step(), 0u);
}

TEST(Pendulum, UprightIsFixedPoint) {
  Pendulum p;
  p.set_state(0.0, 0.0);
  const StepResult r = p.step(std::vector<double>{0.0});
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_EQ(p.theta(), 0.0);
  EXPECT_EQ(p.theta_dot(), 0.0);
  EXPECT_EQ(r.next_state, (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(Pendulum, HangingStepBySymmetry) {
  Pendulum p;
  p.set_state(std::numbers::pi, 0.0);
  const StepResult r = p.step(std::vector<double>{0.0});
  // sin(pi) is not exactly zero in floating point; the pull is ~1e-15.
  EXPECT_NEAR(p.theta_dot(), 0.0, 1e-14);
  EXPECT_NEAR(r.reward, -std::numbers::pi * std::numbers::pi, 1e-12);
}

TEST(Pendulum, DynamicsByHand) {
  Pendulum p;
  p.set_state(0.3, -0.5);
  const StepResult r = p.step(std::vector<double>{0.4});
  const double torque = 0.8;
  const double thdot = -0.5 + (15.0 * std::sin(0.3) + 3.0 * torque) * 0.05;
  EXPECT_NEAR(p.theta_dot(), thdot, 1e-15);
  EXPECT_NEAR(p.theta(), 0.3 + thdot * 0.05, 1e-15);
  EXPECT_NEAR(r.reward, -(0.09 + 0.1 * 0.25 + 0.001 * torque * torque), 1e-15);
}

TEST(Pendulum, RewardBoundsAndTruncation) {
  Pendulum p;
  p.reset(3);
  Rng rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double lo = -(std::numbers::pi * std::numbers::pi + 0.1 * 64 + 0.001 * 4);
  std::size_t steps = 0;
  for (;;) {
    const StepResult r = p.step(std::vector<double>{u(rng)});
    ++steps;
    EXPECT_LE(r.reward, 0.0);
    EXPECT_GE(r.reward, lo);
    EXPECT_FALSE(r.terminal);
    if (r.truncated) break;
  }
  EXPECT_EQ(steps, 200u);
  EXPECT_THROW(p.step(std::vector<double>{0.0}), StateError);
}

TEST(Pendulum, ClipsActions) {
  Pendulum a, b;
  a.set_state(1.0, 0.0);
  b.set_state(1.0, 0.0);
  EXPECT_EQ(a.step(std::vector<double>{5.0}).next_state, b.step(std::vector<double>{1.0}).next_state);
}

TEST(Environment, NanActionAndWrongSize) {
  Pendulum p;
  p.reset(0);
  EXPECT_THROW(p.step(std::vector<double>{NAN}), InputError);
  EXPECT_THROW(p.step(std::vector<double>{0.0, 0.0}), ShapeError);
}

TEST(Environment, TrajectoriesReproducible) {
  auto run = [] {
    auto env = make_environment("pointmass-3");
    std::vector<double> trace = env->reset(5);
    for (int k = 0; k < 30; ++k) {
      const double a = std::sin(k * 0.7);
      const auto r = env->step(std::vector<double>{a, -a, 0.5 * a});
      trace.insert(trace.end(), r.next_state.begin(), r.next_state.end());
      trace.push_back(r.reward);
    }
    return trace;
  };
  EXPECT_EQ(run(), run());
}

TEST(PointMass, StateDimension) {
  PointMass p(3);
  EXPECT_EQ(p.reset(0).size(), 6u);
  EXPECT_EQ(p.spec().action_dim, 3u);
  EXPECT_EQ(p.spec().max_episode_steps, 150u);
}

TEST(PointMass, IntegratorStep) {
  PointMass p(2);
  const std::vector<double> x{0.5, -0.2}, v{0.3, 0.0};
  p.set_state(x, v);
  const StepResult r = p.step(std::vector<double>{0.0, 0.0});
  // Position advances by v dt; with zero action only the damping acts on v.
  EXPECT_DOUBLE_EQ(r.next_state[0], 0.5 + 0.3 * 0.1);
  EXPECT_DOUBLE_EQ(r.next_state[1], -0.2);
  EXPECT_DOUBLE_EQ(r.next_state[2], 0.3 * 0.9);
  EXPECT_DOUBLE_EQ(r.next_state[3], 0.0);
  EXPECT_DOUBLE_EQ(r.reward, -(0.25 + 0.04));
}

TEST(PointMass, ActionAccelerates) {
  PointMass p(1);
  p.set_state(std::vector<double>{0.0}, std::vector<double>{0.0});
  const StepResult r = p.step(std::vector<double>{1.0});
  EXPECT_DOUBLE_EQ(r.next_state[0], 0.0);
  EXPECT_DOUBLE_EQ(r.next_state[1], 0.1);
  EXPECT_DOUBLE_EQ(r.reward, -0.01);
}

TEST(ChainMdp, FixedStartAndValidTable) {
  auto env = make_chain_mdp();
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const auto s = env->reset(seed);
    EXPECT_EQ(env->state_index(), 0u);
    EXPECT_EQ(s[0], 1.0);
  }
  EXPECT_NO_THROW(env->mdp().validate());
  EXPECT_EQ(env->mdp().dims, 2u);
  EXPECT_LE(env->mdp().num_states, 6u);
}

TEST(ChainMdp, NearestIndexDrivesTransitions) {
  auto env = make_chain_mdp();
  env->reset(0);
  // Both components at +1 (index 2): moves right with probability 0.9.
  int moved = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    env->reset(seed);
    env->step(std::vector<double>{0.9, 0.7});
    moved += env->state_index() == 1 ? 1 : 0;
  }
  EXPECT_GT(moved, 160);
  EXPECT_LT(moved, 199);
}

TEST(TabularEnvironment, LoadsJson) {
  const auto path = std::filesystem::temp_directory_path() / "sdpc_test_mdp.json";
  {
    std::ofstream out(path);
    out << R"({"mdp": {"states": 2, "dims": 1, "actions_per_dim": 2, "gamma": 0.5,
              "transitions": [[[0, 1], [1, 0]], [[0, 1], [0, 1]]],
              "rewards": [[0, 1], [2, 3]]},
              "start_state": 0, "terminal_states": [1], "max_episode_steps": 7})";
  }
  auto env = make_environment("tabular:" + path.string());
  EXPECT_EQ(env->spec().max_episode_steps, 7u);
  EXPECT_TRUE(env->spec().has_termination);
  env->reset(0);
  auto r = env->step(std::vector<double>{1.0});  // index 1: stay, reward 1
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_FALSE(r.terminal);
  r = env->step(std::vector<double>{-1.0});  // index 0: to state 1, terminal
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_TRUE(r.terminal);
  std::filesystem::remove(path);
}

TEST(TabularEnvironment, BadFiles) {
  EXPECT_THROW(make_environment("tabular:/nonexistent.json"), InputError);
  EXPECT_THROW(make_environment("nope"), InputError);
  EXPECT_THROW(make_environment("pointmass-0"), InputError);
  EXPECT_THROW(make_environment("pointmass-x"), InputError);
}

TEST(Bandit, OneStepTerminal) {
  TwoArmedBandit b;
  b.reset(0);
  const auto r = b.step(std::vector<double>{0.5});
  EXPECT_TRUE(r.terminal);
  EXPECT_NEAR(r.reward, TwoArmedBandit::reward(0.5), 0.0);
  EXPECT_GT(TwoArmedBandit::reward(0.5), TwoArmedBandit::reward(-0.5));
  EXPECT_GT(TwoArmedBandit::reward(-0.5), TwoArmedBandit::reward(0.0));
}
