#include <algorithm>
#include <cmath>

#include "sdpc/error.hpp"
#include "sdpc/oracle.hpp"

namespace sdpc {
namespace {

void check_policy(const TabularMdp& mdp, const TabularPolicy& pi) {
  if (pi.size() != mdp.num_states) throw ShapeError("policy needs one distribution per state");
  for (const auto& d : pi) {
    if (d.dims != mdp.dims || d.bins != mdp.bins) throw ShapeError("policy shape differs from MDP");
  }
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterError("soft evaluation needs gamma in [0, 1)");
}

}  // namespace

TabularPolicy uniform_policy(const TabularMdp& mdp) {
  const double u = 1.0 / static_cast<double>(mdp.bins);
  return TabularPolicy(mdp.num_states, DecomposedDistribution{mdp.dims, mdp.bins,
                                                               std::vector<double>(mdp.dims * mdp.bins, u)});
}

TabularPolicy random_policy(const TabularMdp& mdp, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  TabularPolicy pi;
  for (std::size_t s = 0; s < mdp.num_states; ++s) {
    PolicyMatrix d{mdp.dims, mdp.bins, std::vector<double>(mdp.dims * mdp.bins),
                   Interpretation::kLogits};
    for (double& v : d.values) v = normal(rng);
    pi.push_back(policy_from_logits(d));
  }
  return pi;
}

double joint_raw_entropy(const DecomposedDistribution& dist) {
  double h = 0.0;
  for (std::size_t m = 0; m < dist.dims; ++m) h += raw_entropy(dist.row(m));
  return h;
}

double joint_prob(const TabularMdp& mdp, const DecomposedDistribution& dist, std::size_t joint) {
  const auto idx = mdp.components(joint);
  double p = 1.0;
  for (std::size_t m = 0; m < mdp.dims; ++m) p *= dist.prob(m, idx[m]);
  return p;
}

std::vector<double> soft_state_values(const TabularMdp& mdp, const TabularPolicy& pi,
                                      std::span<const double> q, double alpha) {
  const std::size_t na = mdp.num_actions();
  std::vector<double> v(mdp.num_states);
  for (std::size_t s = 0; s < mdp.num_states; ++s) {
    double e = 0.0;
    for (std::size_t a = 0; a < na; ++a) e += joint_prob(mdp, pi[s], a) * q[s * na + a];
    v[s] = e + alpha * joint_raw_entropy(pi[s]);
  }
  return v;
}

std::vector<double> joint_soft_q(const TabularMdp& mdp, const TabularPolicy& pi, double alpha,
                                 const FixedPointOptions& options) {
  mdp.validate();
  check_gamma(mdp.gamma);
  check_policy(mdp, pi);
  const std::size_t na = mdp.num_actions();
  const std::size_t ns = mdp.num_states;

  std::vector<double> probs(ns * na);
  std::vector<double> entropy(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t a = 0; a < na; ++a) probs[s * na + a] = joint_prob(mdp, pi[s], a);
    entropy[s] = joint_raw_entropy(pi[s]);
  }

  std::vector<double> q(ns * na, 0.0);
  std::vector<double> v(ns);
  for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
    for (std::size_t s = 0; s < ns; ++s) {
      double e = 0.0;
      for (std::size_t a = 0; a < na; ++a) e += probs[s * na + a] * q[s * na + a];
      v[s] = e + alpha * entropy[s];
    }
    double change = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) {
        double next = 0.0;
        for (std::size_t s2 = 0; s2 < ns; ++s2) next += mdp.p(s, a, s2) * v[s2];
        const double updated = mdp.r(s, a) + mdp.gamma * next;
        change = std::max(change, std::abs(updated - q[s * na + a]));
        q[s * na + a] = updated;
      }
    }
    if (change < options.tolerance) return q;
  }
  throw NumericError("soft Q evaluation did not converge");
}

std::vector<double> decomposed_soft_q(const TabularMdp& mdp, std::size_t m,
                                      const TabularPolicy& pi, double alpha,
                                      const FixedPointOptions& options) {
  mdp.validate();
  check_gamma(mdp.gamma);
  check_policy(mdp, pi);
  if (m >= mdp.dims) throw InputError("dimension index out of range");
  const std::size_t na = mdp.num_actions();
  const std::size_t ns = mdp.num_states;
  const std::size_t nb = mdp.bins;

  // Fold the exclusive policy into p_m and r_m.
  std::vector<double> pm(ns * nb * ns, 0.0);
  std::vector<double> rm(ns * nb, 0.0);
  std::vector<double> own_entropy(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    const double exclusive_entropy = joint_raw_entropy(pi[s]) - raw_entropy(pi[s].row(m));
    own_entropy[s] = raw_entropy(pi[s].row(m));
    for (std::size_t a = 0; a < na; ++a) {
      const auto idx = mdp.components(a);
      double w = 1.0;
      for (std::size_t i = 0; i < mdp.dims; ++i) {
        if (i != m) w *= pi[s].prob(i, idx[i]);
      }
      const std::size_t n = idx[m];
      rm[s * nb + n] += w * mdp.r(s, a);
      for (std::size_t s2 = 0; s2 < ns; ++s2) pm[(s * nb + n) * ns + s2] += w * mdp.p(s, a, s2);
    }
    for (std::size_t n = 0; n < nb; ++n) rm[s * nb + n] += alpha * exclusive_entropy;
  }

  std::vector<double> q(ns * nb, 0.0);
  std::vector<double> v(ns);
  for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
    for (std::size_t s = 0; s < ns; ++s) {
      double e = 0.0;
      for (std::size_t n = 0; n < nb; ++n) e += pi[s].prob(m, n) * q[s * nb + n];
      v[s] = e + alpha * own_entropy[s];
    }
    double change = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t n = 0; n < nb; ++n) {
        double next = 0.0;
        for (std::size_t s2 = 0; s2 < ns; ++s2) next += pm[(s * nb + n) * ns + s2] * v[s2];
        const double updated = rm[s * nb + n] + mdp.gamma * next;
        change = std::max(change, std::abs(updated - q[s * nb + n]));
        q[s * nb + n] = updated;
      }
    }
    if (change < options.tolerance) return q;
  }
  throw NumericError("decomposed soft Q evaluation did not converge");
}

}  // namespace sdpc
