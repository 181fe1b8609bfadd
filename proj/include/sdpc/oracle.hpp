#pragma once

// Exact soft policy evaluation on tabular MDPs with factored actions, and
// numerical checks of the identities that tie decomposed per-dimension
// policies to the joint soft Q-function.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdpc/policy.hpp"
#include "sdpc/tabular.hpp"

namespace sdpc {

/// One M x N decomposed distribution per state.
using TabularPolicy = std::vector<DecomposedDistribution>;

TabularPolicy uniform_policy(const TabularMdp& mdp);
TabularPolicy random_policy(const TabularMdp& mdp, Rng& rng);

/// Sum of per-dimension raw entropies at state s.
double joint_raw_entropy(const DecomposedDistribution& dist);

/// pi(a | s) of joint action a under the product policy.
double joint_prob(const TabularMdp& mdp, const DecomposedDistribution& dist, std::size_t joint);

struct FixedPointOptions {
  double tolerance = 1e-12;  // sup-norm change between sweeps
  std::size_t max_sweeps = 1000000;
};

/// Q(s,a) = r(s,a) + gamma sum_s' p(s'|s,a) [E_pi Q(s',.) + alpha H(s')],
/// H the raw joint entropy. Table [S x N^M]. gamma >= 1 raises ParameterError.
std::vector<double> joint_soft_q(const TabularMdp& mdp, const TabularPolicy& pi, double alpha,
                                 const FixedPointOptions& options = {});

/// Soft Q of dimension m's MDP with the other dimensions' policies folded
/// into its transitions and rewards (reward gains alpha times their
/// entropy; bootstrap adds alpha H_m). Table [S x N].
std::vector<double> decomposed_soft_q(const TabularMdp& mdp, std::size_t m,
                                      const TabularPolicy& pi, double alpha,
                                      const FixedPointOptions& options = {});

/// Soft state value V(s) = E_pi Q(s,.) + alpha H(s) from a joint Q table.
std::vector<double> soft_state_values(const TabularMdp& mdp, const TabularPolicy& pi,
                                      std::span<const double> q, double alpha);

struct BridgeResult {
  /// max |E_pi_m Q_d(s,.) - E_pi Q(s,.) - alpha sum_{i != m} H_i(s)| over s, m
  double strict_residual = 0.0;
  /// max |E_pi_m Q_d(s,.) - E_pi Q(s,.)|; exact only when alpha = 0
  double approx_residual = 0.0;
};

BridgeResult check_bridge(const TabularMdp& mdp, const TabularPolicy& pi, double alpha);

/// Gradients with respect to the logits z of one row, where p = softmax(z):
/// the KL divergence KL(p || softmax(q / alpha)) through the softmax Jacobian,
/// and the fused loss sum_n p_n (alpha ln p_n - q_n).
std::vector<double> kl_gradient(std::span<const double> logits, std::span<const double> q,
                                double alpha);
std::vector<double> fused_policy_gradient(std::span<const double> logits,
                                          std::span<const double> q, double alpha);

/// max_k |kl_gradient - fused_policy_gradient / alpha|.
double check_kl_equivalence(std::span<const double> logits, std::span<const double> q,
                            double alpha);

/// KL(p || q) between two rows, 0 ln 0 = 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

struct VarianceRatio {
  double scale = 0.0;
  double kl = 0.0;
  double variance_term = 0.0;  // Var_{softmax(q/alpha)}(scale x) / (2 alpha^2)
  double ratio = 0.0;          // kl / variance_term; 1 for exempt entries
  bool exempt = false;         // x constant: both sides vanish
};

/// KL(softmax((q + s x)/alpha) || softmax(q/alpha)) against its second-order
/// term, for each scale s.
std::vector<VarianceRatio> check_variance_limit(std::span<const double> q,
                                                std::span<const double> x, double alpha,
                                                std::span<const double> scales);

struct OracleCheckLine {
  std::string name;
  std::size_t cases = 0;
  double worst = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

/// The full battery: bridge identity (alpha = 0 and corrected alpha > 0) on
/// random 4-state MDPs with M = 2, N = 3, gamma = 0.9; KL/policy-gradient
/// equivalence; second-order KL limit. `trials` scales every suite; zero
/// runs nothing and passes.
std::vector<OracleCheckLine> run_oracle_checks(std::size_t trials, std::uint64_t seed);

}  // namespace sdpc
