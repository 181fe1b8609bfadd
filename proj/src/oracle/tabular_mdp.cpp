#include <cmath>
#include <string>

#include "sdpc/error.hpp"
#include "sdpc/tabular.hpp"

namespace sdpc {

std::size_t TabularMdp::num_actions() const {
  std::size_t a = 1;
  for (std::size_t m = 0; m < dims; ++m) a *= bins;
  return a;
}

std::size_t TabularMdp::joint_index(std::span<const std::size_t> indices) const {
  if (indices.size() != dims) throw ShapeError("joint_index: wrong number of components");
  std::size_t a = 0;
  for (std::size_t m = 0; m < dims; ++m) {
    if (indices[m] >= bins) throw InputError("joint_index: component out of range");
    a = a * bins + indices[m];
  }
  return a;
}

std::vector<std::size_t> TabularMdp::components(std::size_t joint) const {
  std::vector<std::size_t> idx(dims);
  for (std::size_t m = dims; m-- > 0;) {
    idx[m] = joint % bins;
    joint /= bins;
  }
  return idx;
}

void TabularMdp::validate() const {
  if (num_states == 0 || dims == 0 || bins == 0) throw ParameterError("empty tabular MDP");
  double joint = 1.0;
  for (std::size_t m = 0; m < dims; ++m) joint *= static_cast<double>(bins);
  if (joint > 1e4) throw ParameterError("tabular MDP joint action count exceeds 10^4");
  const std::size_t na = num_actions();
  if (transitions.size() != num_states * na * num_states) {
    throw ShapeError("transition table has wrong size");
  }
  if (rewards.size() != num_states * na) throw ShapeError("reward table has wrong size");
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < na; ++a) {
      double sum = 0.0;
      for (std::size_t s2 = 0; s2 < num_states; ++s2) {
        const double v = p(s, a, s2);
        if (!(v >= 0.0)) throw InputError("negative or NaN transition probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        throw InputError("transition row (" + std::to_string(s) + "," + std::to_string(a) +
                         ") does not sum to 1");
      }
      if (!std::isfinite(r(s, a))) throw InputError("non-finite reward");
    }
  }
}

TabularMdp random_mdp(std::size_t states, std::size_t dims, std::size_t bins, double gamma,
                      Rng& rng) {
  TabularMdp mdp{states, dims, bins, gamma, {}, {}};
  const std::size_t na = mdp.num_actions();
  std::exponential_distribution<double> expo(1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  mdp.transitions.resize(states * na * states);
  mdp.rewards.resize(states * na);
  for (std::size_t sa = 0; sa < states * na; ++sa) {
    double sum = 0.0;
    for (std::size_t s2 = 0; s2 < states; ++s2) {
      const double w = expo(rng);
      mdp.transitions[sa * states + s2] = w;
      sum += w;
    }
    for (std::size_t s2 = 0; s2 < states; ++s2) mdp.transitions[sa * states + s2] /= sum;
    mdp.rewards[sa] = normal(rng);
  }
  return mdp;
}

TabularMdp tabular_mdp_from_json(const nlohmann::json& j) {
  TabularMdp mdp;
  try {
    mdp.num_states = j.at("states").get<std::size_t>();
    mdp.dims = j.at("dims").get<std::size_t>();
    mdp.bins = j.at("actions_per_dim").get<std::size_t>();
    mdp.gamma = j.value("gamma", 0.9);
    const std::size_t na = mdp.num_actions();
    const auto& tr = j.at("transitions");
    const auto& rw = j.at("rewards");
    if (tr.size() != mdp.num_states || rw.size() != mdp.num_states) {
      throw ShapeError("tabular MDP tables must have one entry per state");
    }
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
      if (tr[s].size() != na || rw[s].size() != na) {
        throw ShapeError("tabular MDP tables must have N^M joint actions per state");
      }
      for (std::size_t a = 0; a < na; ++a) {
        const auto row = tr[s][a].get<std::vector<double>>();
        if (row.size() != mdp.num_states) throw ShapeError("transition row has wrong length");
        mdp.transitions.insert(mdp.transitions.end(), row.begin(), row.end());
        mdp.rewards.push_back(rw[s][a].get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("tabular MDP JSON: ") + e.what());
  }
  mdp.validate();
  return mdp;
}

nlohmann::json tabular_mdp_to_json(const TabularMdp& mdp) {
  nlohmann::json j;
  j["states"] = mdp.num_states;
  j["dims"] = mdp.dims;
  j["actions_per_dim"] = mdp.bins;
  j["gamma"] = mdp.gamma;
  const std::size_t na = mdp.num_actions();
  j["transitions"] = nlohmann::json::array();
  j["rewards"] = nlohmann::json::array();
  for (std::size_t s = 0; s < mdp.num_states; ++s) {
    nlohmann::json trs = nlohmann::json::array();
    nlohmann::json rws = nlohmann::json::array();
    for (std::size_t a = 0; a < na; ++a) {
      std::vector<double> row(mdp.num_states);
      for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) row[s2] = mdp.p(s, a, s2);
      trs.push_back(row);
      rws.push_back(mdp.r(s, a));
    }
    j["transitions"].push_back(trs);
    j["rewards"].push_back(rws);
  }
  return j;
}

}  // namespace sdpc
