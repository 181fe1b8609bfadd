#include <algorithm>
#include <cmath>

#include "sdpc/error.hpp"
#include "sdpc/oracle.hpp"

namespace sdpc {

BridgeResult check_bridge(const TabularMdp& mdp, const TabularPolicy& pi, double alpha) {
  const std::vector<double> q = joint_soft_q(mdp, pi, alpha);
  const std::size_t na = mdp.num_actions();
  BridgeResult out;
  for (std::size_t m = 0; m < mdp.dims; ++m) {
    const std::vector<double> qd = decomposed_soft_q(mdp, m, pi, alpha);
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
      double lhs = 0.0;
      for (std::size_t n = 0; n < mdp.bins; ++n) lhs += pi[s].prob(m, n) * qd[s * mdp.bins + n];
      double rhs = 0.0;
      for (std::size_t a = 0; a < na; ++a) rhs += joint_prob(mdp, pi[s], a) * q[s * na + a];
      const double exclusive = joint_raw_entropy(pi[s]) - raw_entropy(pi[s].row(m));
      out.strict_residual = std::max(out.strict_residual, std::abs(lhs - rhs - alpha * exclusive));
      out.approx_residual = std::max(out.approx_residual, std::abs(lhs - rhs));
    }
  }
  return out;
}

std::vector<double> kl_gradient(std::span<const double> logits, std::span<const double> q,
                                double alpha) {
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (logits.size() != q.size()) throw ShapeError("logits and q rows differ in length");
  const std::size_t n = logits.size();
  std::vector<double> p(n), t(n), scaled(n);
  softmax_row(logits, p);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = q[i] / alpha;
  softmax_row(scaled, t);
  // dKL/dp_i = ln p_i + 1 - ln t_i, then through dp_i/dz_k = p_i (delta_ik - p_k).
  std::vector<double> dp(n);
  for (std::size_t i = 0; i < n; ++i) dp[i] = std::log(p[i]) + 1.0 - std::log(t[i]);
  std::vector<double> g(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double jac = p[i] * ((i == k ? 1.0 : 0.0) - p[k]);
      g[k] += jac * dp[i];
    }
  }
  return g;
}

std::vector<double> fused_policy_gradient(std::span<const double> logits,
                                          std::span<const double> q, double alpha) {
  if (logits.size() != q.size()) throw ShapeError("logits and q rows differ in length");
  const std::size_t n = logits.size();
  std::vector<double> p(n);
  softmax_row(logits, p);
  const double mx = *std::ranges::max_element(logits);
  double lse = 0.0;
  for (double z : logits) lse += std::exp(z - mx);
  lse = mx + std::log(lse);
  std::vector<double> g(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = alpha * (logits[i] - lse) - q[i];
    mean += p[i] * g[i];
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = p[i] * (g[i] - mean);
  return out;
}

double check_kl_equivalence(std::span<const double> logits, std::span<const double> q,
                            double alpha) {
  const auto a = kl_gradient(logits, q, alpha);
  const auto b = fused_policy_gradient(logits, q, alpha);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i] / alpha));
  return worst;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("KL rows differ in length");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

std::vector<VarianceRatio> check_variance_limit(std::span<const double> q,
                                                std::span<const double> x, double alpha,
                                                std::span<const double> scales) {
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (q.size() != x.size()) throw ShapeError("q and direction rows differ in length");
  const std::size_t n = q.size();
  const bool constant = std::ranges::all_of(x, [&](double v) { return v == x[0]; });

  std::vector<double> base(n), scaled(n), pert(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = q[i] / alpha;
  softmax_row(scaled, base);

  std::vector<VarianceRatio> out;
  for (double s : scales) {
    VarianceRatio r;
    r.scale = s;
    r.exempt = constant;
    if (constant) {
      // Softmax is shift invariant: KL and variance are both exactly zero.
      r.ratio = 1.0;
      out.push_back(r);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) scaled[i] = (q[i] + s * x[i]) / alpha;
    softmax_row(scaled, pert);
    r.kl = kl_divergence(pert, base);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += base[i] * s * x[i];
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += base[i] * (s * x[i] - mean) * (s * x[i] - mean);
    r.variance_term = var / (2.0 * alpha * alpha);
    r.ratio = r.kl / r.variance_term;
    out.push_back(r);
  }
  return out;
}

namespace {

std::vector<double> normal_row(std::size_t n, double sd, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

void record(OracleCheckLine& line, double value) {
  ++line.cases;
  line.worst = std::max(line.worst, value);
  line.pass = line.pass && value <= line.tolerance;
}

}  // namespace

std::vector<OracleCheckLine> run_oracle_checks(std::size_t trials, std::uint64_t seed) {
  std::vector<OracleCheckLine> lines{
      {"bridge alpha=0 (uncorrected)", 0, 0.0, 1e-9, true},
      {"bridge alpha=0.1 (corrected)", 0, 0.0, 1e-9, true},
      {"bridge alpha=1 (corrected)", 0, 0.0, 1e-9, true},
      {"kl gradient equivalence", 0, 0.0, 1e-10, true},
      {"kl second-order limit |ratio-1|", 0, 0.0, 0.02, true},
  };
  if (trials == 0) return {};
  Rng rng(seed);

  for (std::size_t t = 0; t < trials; ++t) {
    const TabularMdp mdp = random_mdp(4, 2, 3, 0.9, rng);
    const TabularPolicy pi = random_policy(mdp, rng);
    record(lines[0], check_bridge(mdp, pi, 0.0).approx_residual);
    record(lines[1], check_bridge(mdp, pi, 0.1).strict_residual);
    record(lines[2], check_bridge(mdp, pi, 1.0).strict_residual);
  }

  std::uniform_int_distribution<std::size_t> width(2, 20);
  const double alphas[] = {0.1, 1.0, 10.0};
  for (std::size_t t = 0; t < 5 * trials; ++t) {
    const std::size_t n = width(rng);
    const auto logits = normal_row(n, 1.0, rng);
    const auto q = normal_row(n, 1.0, rng);
    for (double a : alphas) record(lines[3], check_kl_equivalence(logits, q, a));
  }

  const double scales[] = {1e-3};
  for (std::size_t t = 0; t < 5 * trials; ++t) {
    const std::size_t n = width(rng);
    const auto q = normal_row(n, 1.0, rng);
    auto x = normal_row(n, 1.0, rng);
    double mean = 0.0;
    for (double v : x) mean += v / static_cast<double>(n);
    for (double& v : x) v -= mean;
    for (double a : {1.0, 2.0}) {
      const auto r = check_variance_limit(q, x, a, scales).front();
      if (!r.exempt) record(lines[4], std::abs(r.ratio - 1.0));
    }
  }
  return lines;
}

}  // namespace sdpc
