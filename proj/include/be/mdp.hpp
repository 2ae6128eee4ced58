#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "be/errors.hpp"
#include "be/rng.hpp"

namespace be {

// Reward-free tabular MDP: states 0..n_states-1, actions 0..n_actions-1,
// row-stochastic transition table, initial distribution, fixed episode
// length. Terminal states are absorbing self-loops after entry; the flag
// marks which states count as endpoints for metrics.
class TabularMdp {
 public:
  TabularMdp(std::size_t n_states, std::size_t n_actions,
             std::vector<std::vector<std::vector<double>>> transitions,
             std::vector<double> initial_dist, std::size_t horizon,
             std::vector<bool> terminal_flags)
      : n_states_(n_states),
        n_actions_(n_actions),
        transitions_(std::move(transitions)),
        initial_dist_(std::move(initial_dist)),
        horizon_(horizon),
        terminal_flags_(std::move(terminal_flags)) {
    if (n_states_ == 0 || n_actions_ == 0)
      throw DomainError("TabularMdp: state and action counts must be positive");
    if (horizon_ == 0) throw DomainError("TabularMdp: horizon must be positive");
    if (transitions_.size() != n_states_ || initial_dist_.size() != n_states_ ||
        terminal_flags_.size() != n_states_)
      throw DomainError("TabularMdp: table sizes inconsistent with n_states");
    check_distribution(initial_dist_, "initial_dist");
    deterministic_ = true;
    successor_.assign(n_states_ * n_actions_, 0);
    for (std::size_t s = 0; s < n_states_; ++s) {
      if (transitions_[s].size() != n_actions_)
        throw DomainError("TabularMdp: action row count mismatch");
      for (std::size_t a = 0; a < n_actions_; ++a) {
        const auto& row = transitions_[s][a];
        if (row.size() != n_states_)
          throw DomainError("TabularMdp: transition row length mismatch");
        check_distribution(row, "transition row");
        std::size_t point_mass = n_states_;
        for (std::size_t t = 0; t < n_states_; ++t) {
          if (row[t] > 1.0 - 1e-12) point_mass = t;
        }
        if (point_mass == n_states_) deterministic_ = false;
        successor_[s * n_actions_ + a] = point_mass;
      }
    }
  }

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t horizon() const { return horizon_; }
  bool deterministic() const { return deterministic_; }
  bool terminal(std::size_t s) const { return terminal_flags_[s]; }
  const std::vector<bool>& terminal_flags() const { return terminal_flags_; }
  const std::vector<double>& initial_dist() const { return initial_dist_; }

  std::span<const double> transition_row(std::size_t s, std::size_t a) const {
    return transitions_[s][a];
  }

  // Unique successor; only meaningful when deterministic() holds.
  std::size_t successor(std::size_t s, std::size_t a) const {
    if (!deterministic_)
      throw ContractError("successor: MDP is not deterministic");
    return successor_[s * n_actions_ + a];
  }

  // Stable 64-bit FNV-1a hash over the full tuple, used to tie datasets to
  // the MDP that generated them.
  std::string fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix_u64 = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
      }
    };
    auto mix_d = [&](double v) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(v));
      std::memcpy(&bits, &v, sizeof(bits));
      mix_u64(bits);
    };
    mix_u64(n_states_);
    mix_u64(n_actions_);
    mix_u64(horizon_);
    for (bool f : terminal_flags_) mix_u64(f ? 1 : 0);
    for (double p : initial_dist_) mix_d(p);
    for (const auto& per_action : transitions_)
      for (const auto& row : per_action)
        for (double p : row) mix_d(p);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
  }

 private:
  static void check_distribution(const std::vector<double>& p,
                                 const char* what) {
    double sum = 0.0;
    for (double x : p) {
      if (!(x >= 0.0))
        throw DomainError(std::string("TabularMdp: negative probability in ") + what);
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw DomainError(std::string("TabularMdp: ") + what + " does not sum to 1");
  }

  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<std::vector<std::vector<double>>> transitions_;
  std::vector<double> initial_dist_;
  std::size_t horizon_;
  std::vector<bool> terminal_flags_;
  bool deterministic_;
  std::vector<std::size_t> successor_;
};

// Fixed-length trajectory: states and actions both length horizon+1 (an
// action is recorded at the final state too).
struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
  std::optional<int> task_label;
};

// Tabular stochastic policy, one distribution row per state.
class BehaviorPolicy {
 public:
  explicit BehaviorPolicy(std::vector<std::vector<double>> table)
      : table_(std::move(table)) {
    for (const auto& row : table_) {
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw DomainError("BehaviorPolicy: negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw DomainError("BehaviorPolicy: row does not sum to 1");
    }
  }

  std::size_t n_states() const { return table_.size(); }
  std::span<const double> row(std::size_t s) const { return table_[s]; }
  bool supports(std::size_t s, std::size_t a) const { return table_[s][a] > 0.0; }

  std::vector<bool> support_mask(std::size_t s) const {
    std::vector<bool> mask(table_[s].size());
    for (std::size_t a = 0; a < mask.size(); ++a) mask[a] = table_[s][a] > 0.0;
    return mask;
  }

 private:
  std::vector<std::vector<double>> table_;
};

struct DemoDataset {
  std::vector<Trajectory> trajectories;
  std::string mdp_fingerprint;
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
};

// View of the current episode's prefix handed to action samplers, so
// policies that condition on within-episode context can do so without the
// rollout loop knowing about them.
struct RolloutContext {
  std::span<const int> episode_states;
  std::span<const int> episode_actions;
};

using ActionSampler = std::function<int(int state, int step, const RolloutContext&)>;

inline Trajectory rollout(const TabularMdp& mdp, const ActionSampler& policy,
                          Rng& rng) {
  Trajectory traj;
  const std::size_t k_max = mdp.horizon();
  traj.states.reserve(k_max + 1);
  traj.actions.reserve(k_max + 1);
  traj.states.push_back(
      static_cast<int>(rng.sample_discrete(mdp.initial_dist())));
  for (std::size_t k = 0; k <= k_max; ++k) {
    const int s = traj.states.back();
    const RolloutContext ctx{traj.states, traj.actions};
    const int a = policy(s, static_cast<int>(k), ctx);
    if (a < 0 || static_cast<std::size_t>(a) >= mdp.n_actions())
      throw ContractError("rollout: policy returned invalid action-id");
    traj.actions.push_back(a);
    if (k < k_max) {
      const auto row = mdp.transition_row(static_cast<std::size_t>(s),
                                          static_cast<std::size_t>(a));
      traj.states.push_back(static_cast<int>(rng.sample_discrete(row)));
    }
  }
  return traj;
}

inline ActionSampler sampler_from(const BehaviorPolicy& beta, Rng& rng) {
  return [&beta, &rng](int state, int, const RolloutContext&) {
    return static_cast<int>(
        rng.sample_discrete(beta.row(static_cast<std::size_t>(state))));
  };
}

// T independent rollouts of the behavior policy on child streams split from
// the given generator. Records the generator's seed and the MDP fingerprint.
inline DemoDataset generate_dataset(const TabularMdp& mdp,
                                    const BehaviorPolicy& beta,
                                    std::size_t n_traj, Rng& rng) {
  if (n_traj == 0) throw DomainError("generate_dataset: n_traj must be >= 1");
  DemoDataset data;
  data.mdp_fingerprint = mdp.fingerprint();
  data.seed = rng.seed();
  data.horizon = mdp.horizon();
  data.trajectories.reserve(n_traj);
  for (std::size_t t = 0; t < n_traj; ++t) {
    Rng child = rng.split(t);
    data.trajectories.push_back(rollout(mdp, sampler_from(beta, child), child));
  }
  return data;
}

// Length and, on deterministic MDPs, transition-consistency checks. Every
// violation is reported with its step index; an empty result means ok.
inline std::vector<std::string> validate_trajectory(const TabularMdp& mdp,
                                                    const Trajectory& traj) {
  std::vector<std::string> violations;
  const std::size_t want = mdp.horizon() + 1;
  if (traj.states.size() != want)
    violations.push_back("length: expected " + std::to_string(want) +
                         " states, got " + std::to_string(traj.states.size()));
  if (traj.actions.size() != want)
    violations.push_back("length: expected " + std::to_string(want) +
                         " actions, got " + std::to_string(traj.actions.size()));
  const std::size_t n = std::min(traj.states.size(), traj.actions.size());
  for (std::size_t k = 0; k < n; ++k) {
    const int s = traj.states[k];
    const int a = traj.actions[k];
    if (s < 0 || static_cast<std::size_t>(s) >= mdp.n_states()) {
      violations.push_back("step " + std::to_string(k) + ": state out of range");
      continue;
    }
    if (a < 0 || static_cast<std::size_t>(a) >= mdp.n_actions()) {
      violations.push_back("step " + std::to_string(k) + ": action out of range");
      continue;
    }
    if (mdp.deterministic() && k + 1 < traj.states.size()) {
      const std::size_t succ = mdp.successor(static_cast<std::size_t>(s),
                                             static_cast<std::size_t>(a));
      if (traj.states[k + 1] != static_cast<int>(succ))
        violations.push_back("step " + std::to_string(k) +
                             ": successor mismatch, expected " +
                             std::to_string(succ) + ", got " +
                             std::to_string(traj.states[k + 1]));
    }
  }
  return violations;
}

}  // namespace be
