#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "be/errors.hpp"
#include "be/mdp.hpp"
#include "be/policy.hpp"
#include "be/rng.hpp"

namespace be {

// Per-state behavioral cloning: action-frequency MLE with a uniform fallback
// on unseen states, optionally mixed with uniform action noise.
class BcPolicy {
 public:
  BcPolicy(std::map<int, std::vector<std::uint64_t>> counts,
           std::size_t n_actions, double noise = 0.0)
      : counts_(std::move(counts)), n_actions_(n_actions), noise_(noise) {
    if (n_actions_ == 0) throw DomainError("BcPolicy: n_actions must be positive");
    if (!(noise_ >= 0.0 && noise_ <= 1.0))
      throw DomainError("BcPolicy: noise must lie in [0, 1]");
  }

  std::size_t n_actions() const { return n_actions_; }
  double noise() const { return noise_; }
  const std::map<int, std::vector<std::uint64_t>>& counts() const {
    return counts_;
  }

  std::vector<double> row(int state) const {
    const double u = 1.0 / static_cast<double>(n_actions_);
    auto it = counts_.find(state);
    if (it == counts_.end()) return std::vector<double>(n_actions_, u);
    std::vector<double> probs = normalize_counts(it->second, 0.0);
    if (noise_ > 0.0)
      for (double& p : probs) p = (1.0 - noise_) * p + noise_ * u;
    return probs;
  }

  int sample(int state, Rng& rng) const {
    return static_cast<int>(rng.sample_discrete(row(state)));
  }

  void save(std::ostream& out) const {
    char buf[64];
    out << "bc-policy v1\n";
    out << "n_actions " << n_actions_ << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", noise_);
    out << "noise " << buf << "\n";
    out << "rows " << counts_.size() << "\n";
    for (const auto& [state, row] : counts_) {
      out << state;
      for (std::uint64_t c : row) out << " " << c;
      out << "\n";
    }
    out << "end\n";
  }

  static BcPolicy load(std::istream& in) {
    auto expect = [&in](const char* tag) {
      std::string word;
      in >> word;
      if (word != tag)
        throw DomainError(std::string("bc load: expected '") + tag + "', got '" +
                          word + "'");
    };
    expect("bc-policy");
    expect("v1");
    expect("n_actions");
    std::size_t n_actions;
    in >> n_actions;
    expect("noise");
    double noise;
    in >> noise;
    expect("rows");
    std::size_t n_rows;
    in >> n_rows;
    std::map<int, std::vector<std::uint64_t>> counts;
    for (std::size_t i = 0; i < n_rows; ++i) {
      int state;
      in >> state;
      std::vector<std::uint64_t> row(n_actions);
      for (std::uint64_t& c : row) in >> c;
      counts[state] = std::move(row);
    }
    expect("end");
    if (!in) throw DomainError("bc load: truncated or malformed input");
    return BcPolicy(std::move(counts), n_actions, noise);
  }

 private:
  std::map<int, std::vector<std::uint64_t>> counts_;
  std::size_t n_actions_;
  double noise_;
};

inline BcPolicy train_bc(const DemoDataset& dataset, std::size_t n_actions = 0) {
  if (dataset.trajectories.empty()) throw DomainError("train_bc: empty dataset");
  std::map<int, std::vector<std::uint64_t>> counts;
  for (const auto& traj : dataset.trajectories)
    for (int a : traj.actions)
      n_actions = std::max(n_actions, static_cast<std::size_t>(a) + 1);
  for (const auto& traj : dataset.trajectories) {
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      auto& row = counts[traj.states[k]];
      if (row.empty()) row.assign(n_actions, 0);
      ++row[static_cast<std::size_t>(traj.actions[k])];
    }
  }
  return BcPolicy(std::move(counts), n_actions);
}

inline BcPolicy make_bc_noise(const BcPolicy& bc, double noise) {
  return BcPolicy(bc.counts(), bc.n_actions(), noise);
}

// One-step greedy count bonus: pick the action whose successor has the
// largest c / sqrt(1 + N(s')), ties broken uniformly by the caller's RNG.
// The bonus weight never changes the argmax; it is kept for interface
// symmetry with configurable-bonus agents.
inline int count_bonus_action(const TabularMdp& mdp, std::size_t state,
                              std::span<const std::uint64_t> visit_counts,
                              double c, Rng& rng) {
  if (!mdp.deterministic())
    throw DomainError("count_bonus_action: MDP must be deterministic");
  if (!(c > 0.0)) throw DomainError("count_bonus_action: c must be positive");
  if (visit_counts.size() != mdp.n_states())
    throw DomainError("count_bonus_action: counts length != n_states");
  double best = -1.0;
  std::vector<std::size_t> ties;
  for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
    const std::size_t next = mdp.successor(state, a);
    const double bonus =
        c / std::sqrt(1.0 + static_cast<double>(visit_counts[next]));
    if (bonus > best + 1e-15) {
      best = bonus;
      ties.clear();
      ties.push_back(a);
    } else if (bonus >= best - 1e-15) {
      ties.push_back(a);
    }
  }
  return static_cast<int>(
      ties[rng.uniform_int(static_cast<std::uint32_t>(ties.size()))]);
}

// History-conditioned cloning: the conditional-policy trainer restricted to
// a single coverage bucket, so keys reduce to (state, summary). Sharing the
// trainer keeps the counts identical to a one-bucket conditional table by
// construction.
class BcHistoryPolicy {
 public:
  BcHistoryPolicy(ConditionalPolicy inner) : inner_(std::move(inner)) {}

  const ConditionalPolicy& inner() const { return inner_; }
  HistoryMode history_mode() const { return inner_.history_mode(); }

  std::vector<double> action_distribution(int state,
                                          const HistorySummary& summary) const {
    return inner_.action_distribution(state, summary, 0);
  }

  int sample(int state, const HistorySummary& summary, Rng& rng) const {
    return static_cast<int>(rng.sample_discrete(action_distribution(state, summary)));
  }

  void save(std::ostream& out) const {
    out << "bc-history v1\n";
    inner_.save(out);
  }

  static BcHistoryPolicy load(std::istream& in) {
    std::string a, b;
    in >> a >> b;
    if (a != "bc-history" || b != "v1")
      throw DomainError("bc-history load: bad header");
    return BcHistoryPolicy(ConditionalPolicy::load(in));
  }

 private:
  ConditionalPolicy inner_;
};

inline BcHistoryPolicy train_bc_history(const DemoDataset& dataset,
                                        const FeatureMap& map, double lambda,
                                        std::size_t samples_per_pair,
                                        TrainConfig config) {
  config.max_buckets = 1;
  return BcHistoryPolicy(
      train_be(dataset, map, lambda, samples_per_pair, config));
}

}  // namespace be
