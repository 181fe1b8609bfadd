#include <gtest/gtest.h>

#include <cmath>

#include "sdpc/agent.hpp"
#include "sdpc/error.hpp"
#include "test_util.hpp"

using namespace sdpc;
using sdpc::testing::away_from_kinks;
using sdpc::testing::max_relative_fd_error;
using sdpc::testing::random_batch;

namespace {

AgentConfig small_config() {
  AgentConfig c = AgentConfig::defaults(Algorithm::kSdcq);
  c.bins = 5;
  c.hidden = {8, 8};
  c.batch_size = 16;
  return c;
}

void zero(Mlp& net) {
  for (double& v : net.parameters()) v = 0.0;
}

void constant(Mlp& net, double c) {
  zero(net);
  net.bias(net.num_layers() - 1)[0] = c;
}

ReplayBuffer collect(const Agent& agent, Environment& env, std::size_t steps, Rng& rng) {
  ReplayBuffer buffer(10000);
  std::vector<double> s = env.reset(0);
  std::uint64_t ep = 0, k = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const SampledAction a = agent.act(s, true, rng);
    StepResult r = env.step(a.action);
    buffer.push({s, a.action, a.indices, a.p_joint, r.reward, r.next_state, r.terminal,
                 r.truncated, ep, k++});
    if (r.terminal || r.truncated) {
      s = env.reset(++ep);
      k = 0;
    } else {
      s = r.next_state;
    }
  }
  return buffer;
}

Transition step_of(std::vector<double> s, std::vector<std::size_t> idx, double p_old,
                   std::uint64_t k) {
  Transition t;
  t.state = std::move(s);
  t.indices = std::move(idx);
  t.action.assign(t.indices.size(), 0.0);
  t.next_state = t.state;
  t.p_old = p_old;
  t.step_id = k;
  return t;
}

}  // namespace

TEST(SdcqPolicy, ZeroNetworkIsUniform) {
  Rng rng(0);
  SdcqAgent agent(3, 2, small_config(), rng);
  zero(agent.network());
  const auto d = agent.distributions(random_batch(3, 3, rng));
  for (const auto& dist : d)
    for (double p : dist.probs) EXPECT_NEAR(p, 0.2, 1e-15);
  EXPECT_NEAR(agent.act(std::vector<double>{0.0, 0.0, 0.0}, true, rng).p_joint, 0.04, 1e-15);
}

TEST(SdcqPolicy, LowTemperatureConcentratesOnArgmax) {
  Rng rng(1);
  AgentConfig c = small_config();
  c.initial_log_alpha = -10.0;
  SdcqAgent agent(2, 1, c, rng);
  Mlp& net = agent.network();
  zero(net);
  auto out = net.bias(net.num_layers() - 1);
  out[0] = 0.0; out[1] = 0.1; out[2] = 0.3; out[3] = 0.2; out[4] = -0.5;
  const auto d = agent.distributions(Matrix(1, 2))[0];
  EXPECT_EQ(d.prob(0, 2), 1.0);
  EXPECT_EQ(d.prob(0, 3), 0.0);
  EXPECT_EQ(greedy_indices(d)[0], 2u);
}

TEST(SdcqPolicy, ShiftInvariant) {
  Rng rng(2);
  SdcqAgent agent(2, 2, small_config(), rng);
  const Matrix s = random_batch(1, 2, rng);
  const auto before = agent.distributions(s)[0];
  Mlp& net = agent.network();
  auto out = net.bias(net.num_layers() - 1);
  for (std::size_t n = 0; n < 5; ++n) out[n] += 0.75;
  for (std::size_t n = 5; n < 10; ++n) out[n] -= 1.5;
  const auto after = agent.distributions(s)[0];
  for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(after.probs[k], before.probs[k], 1e-12);
}

TEST(SdcqPolicy, BoltzmannOfDecomposedQ) {
  Rng rng(3);
  AgentConfig c = small_config();
  c.initial_log_alpha = std::log(0.3);
  SdcqAgent agent(3, 2, c, rng);
  const Matrix s = random_batch(1, 3, rng);
  const PolicyMatrix pm = agent.policy_matrix(s.row(0));
  EXPECT_EQ(pm.interpretation, Interpretation::kDecomposedQ);
  const auto d = agent.distributions(s)[0];
  for (std::size_t m = 0; m < 2; ++m) {
    double z = 0.0;
    for (double v : pm.row(m)) z += std::exp(v / 0.3);
    for (std::size_t n = 0; n < 5; ++n)
      EXPECT_NEAR(d.prob(m, n), std::exp(pm.row(m)[n] / 0.3) / z, 1e-12);
  }
}

TEST(SdcqPolicyLoss, ConstantCriticGivesZeroTargets) {
  Rng rng(4);
  SdcqAgent agent(2, 2, small_config(), rng);
  constant(agent.critics().q1, -2.0);
  constant(agent.critics().q2, 5.0);
  const Matrix s = random_batch(6, 2, rng);
  const PolicyLoss l = agent.policy_loss(s, rng);
  // With zero targets the loss is the mean square of the network output.
  const Matrix d = agent.network().forward(s);
  double expect = 0.0;
  for (double v : d.data()) expect += v * v;
  expect /= 2.0 * 6.0;
  EXPECT_NEAR(l.value, expect, 1e-12 * std::max(1.0, expect));
}

TEST(SdcqPolicyLoss, MatchesFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    SdcqAgent agent(3, 2, small_config(), rng);
    Matrix s;
    do {
      for (std::size_t l = 0; l < agent.network().num_layers(); ++l)
        for (double& b : agent.network().bias(l)) b = std::normal_distribution<double>(0, 0.3)(rng);
      s = random_batch(4, 3, rng);
    } while (!away_from_kinks(agent.network(), s, 1e-3));
    Matrix a(4, 2);
    std::uniform_int_distribution<std::size_t> pick(0, 4);
    for (double& v : a.data()) v = agent.grid().value(pick(rng));
    // Targets (including the policy-weighted baseline) are constants of the step.
    const PolicyLoss l = agent.policy_loss(s, a);
    const Matrix q = swapped_min_q(agent.critics(), s, a, agent.grid());
    const auto dists = l.dists;
    auto frozen = [&] {
      const Matrix d = agent.network().forward(s);
      double v = 0.0;
      for (std::size_t b = 0; b < 4; ++b)
        for (std::size_t m = 0; m < 2; ++m) {
          double base = 0.0;
          for (std::size_t n = 0; n < 5; ++n) base += dists[b].prob(m, n) * q(b, m * 5 + n);
          for (std::size_t n = 0; n < 5; ++n) {
            const double e = d(b, m * 5 + n) - (q(b, m * 5 + n) - base);
            v += e * e;
          }
        }
      return v / 8.0;
    };
    EXPECT_NEAR(frozen(), l.value, 1e-12);
    EXPECT_LE(max_relative_fd_error(agent.network().parameters(), l.grad, frozen), 1e-4);
  }
}

TEST(SdcqImportance, OnPolicyWindowsGetUnitWeights) {
  const DecomposedDistribution dist{1, 2, {0.25, 0.75}};
  const PolicyFn pi = [&](const Matrix& s) {
    return std::vector<DecomposedDistribution>(s.rows(), dist);
  };
  std::vector<Transition> store;
  store.reserve(12);
  for (std::uint64_t k = 0; k < 12; ++k) {
    const std::size_t i = k % 2;
    store.push_back(step_of({0.0}, {i}, dist.prob(0, i), k));
  }
  std::vector<Window> windows;
  for (std::size_t i = 0; i + 3 <= store.size(); i += 3)
    windows.push_back({&store[i], &store[i + 1], &store[i + 2]});
  for (auto dir : {ImportanceDirection::kInverse, ImportanceDirection::kStandard}) {
    for (double w : importance_weights(windows, pi, {dir, 2.0, 1.0})) EXPECT_EQ(w, 1.0);
  }
}

TEST(SdcqImportance, WeightsBoundedAndDirected) {
  Rng rng(6);
  const DecomposedDistribution dist{1, 4, {0.1, 0.2, 0.3, 0.4}};
  const PolicyFn pi = [&](const Matrix& s) {
    return std::vector<DecomposedDistribution>(s.rows(), dist);
  };
  std::vector<Transition> store;
  store.reserve(200);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  std::uniform_real_distribution<double> p(0.01, 1.0);
  for (std::uint64_t k = 0; k < 200; ++k) store.push_back(step_of({0.0}, {pick(rng)}, p(rng), k));
  std::vector<Window> pairs;
  for (std::size_t i = 0; i + 2 <= store.size(); i += 2) pairs.push_back({&store[i], &store[i + 1]});
  const auto wp = importance_weights(pairs, pi, {ImportanceDirection::kInverse, 2.0, 1.0});
  const auto ws = importance_weights(pairs, pi, {ImportanceDirection::kStandard, 2.0, 1.0});
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_GE(wp[i], std::exp(-2.0) * (1 - 1e-15));
    EXPECT_LE(wp[i], std::exp(2.0) * (1 + 1e-15));
    // One follow-up step: the two directions mirror each other.
    EXPECT_NEAR(std::log(wp[i]), -std::log(ws[i]), 1e-12);
    const double log_i = std::log(pairs[i][1]->p_old) - std::log(dist.prob(0, pairs[i][1]->indices[0]));
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const double lj = std::log(pairs[j][1]->p_old) - std::log(dist.prob(0, pairs[j][1]->indices[0]));
      if (log_i > lj) EXPECT_GE(wp[i], wp[j]);
    }
  }
  // Three-step windows multiply two clipped factors.
  std::vector<Window> triples;
  for (std::size_t i = 0; i + 3 <= store.size(); i += 3)
    triples.push_back({&store[i], &store[i + 1], &store[i + 2]});
  for (double w : importance_weights(triples, pi, {ImportanceDirection::kInverse, 2.0, 1.0})) {
    EXPECT_GE(w, std::exp(-4.0) * (1 - 1e-15));
    EXPECT_LE(w, std::exp(4.0) * (1 + 1e-15));
  }
}

TEST(SdcqImportance, ConstantRatiosAndSingleSteps) {
  const DecomposedDistribution dist{1, 2, {0.5, 0.5}};
  const PolicyFn pi = [&](const Matrix& s) {
    return std::vector<DecomposedDistribution>(s.rows(), dist);
  };
  std::vector<Transition> store;
  for (std::uint64_t k = 0; k < 6; ++k) store.push_back(step_of({0.0}, {k % 2}, 0.2, k));
  std::vector<Window> w{{&store[0], &store[1], &store[2]}, {&store[3], &store[4], &store[5]}};
  for (double x : importance_weights(w, pi, {})) EXPECT_EQ(x, 1.0);
  std::vector<Window> single{{&store[0]}, {&store[3]}};
  for (double x : importance_weights(single, pi, {})) EXPECT_EQ(x, 1.0);
}

TEST(SdcqImportance, ZeroTargetProbabilitySitsAtClip) {
  const DecomposedDistribution dist{1, 2, {1.0, 0.0}};
  const PolicyFn pi = [&](const Matrix& s) {
    return std::vector<DecomposedDistribution>(s.rows(), dist);
  };
  std::vector<Transition> store;
  store.push_back(step_of({0.0}, {0}, 0.5, 0));
  store.push_back(step_of({0.0}, {1}, 0.5, 1));
  store.push_back(step_of({0.0}, {0}, 0.5, 2));
  store.push_back(step_of({0.0}, {0}, 0.5, 3));
  std::vector<Window> w{{&store[0], &store[1]}, {&store[2], &store[3]}};
  const auto x = importance_weights(w, pi, {ImportanceDirection::kInverse, 2.0, 1.0});
  EXPECT_NEAR(x[0], std::exp(2.0), 1e-12);
  EXPECT_TRUE(std::isfinite(x[1]));
}

TEST(SdcqTrainStep, ZeroLearningRatesOnlyRelaxTargetAlpha) {
  Rng rng(7);
  AgentConfig c = small_config();
  c.policy_lr = c.critic_lr = c.alpha_lr = 0.0;
  c.tau = 0.5;
  PointMass env(2);
  SdcqAgent agent(4, 2, c, rng);
  agent.temperature().set_alpha_target(2.0);
  ReplayBuffer buffer = collect(agent, env, 200, rng);
  const Mlp policy = agent.network();
  const SoftCriticPair critics = agent.critics();
  agent.train_step(buffer, rng);
  EXPECT_EQ(agent.network(), policy);
  EXPECT_EQ(agent.critics().q1, critics.q1);
  EXPECT_EQ(agent.critics().target2, critics.target2);
  EXPECT_EQ(agent.temperature().log_alpha(), 0.0);
  EXPECT_NEAR(agent.temperature().alpha_target(), 1.5, 1e-15);
}

TEST(SdcqTrainStep, WindowWidth) {
  Rng rng(8);
  AgentConfig c = small_config();
  EXPECT_EQ(SdcqAgent(2, 1, c, rng).window_width(), 3u);
  c.multistep = false;
  EXPECT_EQ(SdcqAgent(2, 1, c, rng).window_width(), 1u);
}

TEST(SdcqTrainStep, BehaviorProbabilitiesAreRecorded) {
  Rng rng(9);
  PointMass env(2);
  SdcqAgent agent(4, 2, small_config(), rng);
  ReplayBuffer buffer = collect(agent, env, 50, rng);
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const Transition& t = buffer.at(i);
    Matrix s(1, 4);
    std::ranges::copy(t.state, s.row(0).begin());
    EXPECT_NEAR(std::log(t.p_old), joint_log_prob(agent.distributions(s)[0], t.indices), 1e-12);
  }
}

TEST(SdcqTrainStep, ImprovesCriticFit) {
  Rng rng(10);
  PointMass env(1);
  AgentConfig c = small_config();
  c.batch_size = 32;
  SdcqAgent agent(2, 1, c, rng);
  ReplayBuffer buffer = collect(agent, env, 600, rng);
  double first = 0.0, last = 0.0;
  for (int k = 0; k < 300; ++k) {
    const StepStats st = agent.train_step(buffer, rng);
    ASSERT_TRUE(std::isfinite(st.critic_loss));
    if (k < 20) first += st.critic_loss;
    if (k >= 280) last += st.critic_loss;
  }
  EXPECT_LT(last, first);
}

TEST(SdcqCheckpoint, RoundTripKeepsTargetTemperature) {
  Rng rng(11);
  SdcqAgent agent(3, 2, small_config(), rng);
  agent.temperature().set_log_alpha(0.25);
  agent.temperature().set_alpha_target(0.8125);
  const auto loaded = load_agent(decode_checkpoint(encode_checkpoint(agent.to_checkpoint())));
  EXPECT_EQ(loaded->algorithm(), Algorithm::kSdcq);
  EXPECT_EQ(loaded->temperature().alpha_target(), 0.8125);
  EXPECT_EQ(loaded->temperature().log_alpha(), 0.25);
  EXPECT_EQ(loaded->config().multistep_width, 3u);
  const Matrix s = random_batch(2, 3, rng);
  EXPECT_EQ(loaded->distributions(s)[0].probs, agent.distributions(s)[0].probs);
}
