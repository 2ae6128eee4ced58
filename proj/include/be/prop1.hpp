#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "be/envs.hpp"
#include "be/errors.hpp"
#include "be/mdp.hpp"
#include "be/oracle.hpp"
#include "be/rng.hpp"

namespace be {

// Exact terminal-state visitation probabilities under the behavior policy:
// sum of path products over every supported action sequence of horizon
// length. Enumeration only; requires a deterministic MDP.
inline std::map<int, double> compute_terminal_visitation(
    const TabularMdp& mdp, const BehaviorPolicy& beta,
    std::size_t budget = kOracleBudget) {
  if (!mdp.deterministic())
    throw DomainError("compute_terminal_visitation: MDP must be deterministic");
  std::map<int, double> w;
  std::size_t leaves = 0;
  auto dfs = [&](auto&& self, std::size_t state, std::size_t steps_left,
                 double probability) -> void {
    if (steps_left == 0) {
      if (++leaves > budget)
        throw ResourceError("compute_terminal_visitation: enumeration budget exceeded");
      w[static_cast<int>(state)] += probability;
      return;
    }
    const auto row = beta.row(state);
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (row[a] <= 0.0) continue;
      self(self, mdp.successor(state, a), steps_left - 1, probability * row[a]);
    }
  };
  const auto& p0 = mdp.initial_dist();
  for (std::size_t s = 0; s < p0.size(); ++s)
    if (p0[s] > 0.0) dfs(dfs, s, mdp.horizon(), p0[s]);
  return w;
}

// A tree instance packaged with everything the verification needs. The
// threshold epsilon is recorded below the minimum terminal visitation
// weight, the regime in which the optimal-coverage claim applies.
struct Prop1Instance {
  const TabularMdp& mdp;
  const BehaviorPolicy& beta;
  const FeatureMap& map;
  std::size_t n_beta;
  std::uint64_t instance_seed;
  double lambda;
  double epsilon;
  std::map<int, double> terminal_visitation;
  double min_w;
};

inline Prop1Instance make_prop1_instance(const RandomTerminalTree& tree,
                                         double lambda = 0.01,
                                         double epsilon_fraction = 0.5) {
  if (!(epsilon_fraction > 0.0 && epsilon_fraction < 1.0))
    throw DomainError("make_prop1_instance: epsilon_fraction must lie in (0, 1)");
  std::map<int, double> w = compute_terminal_visitation(tree.mdp, tree.beta);
  double min_w = 1.0;
  for (const auto& [state, prob] : w) min_w = std::min(min_w, prob);
  return Prop1Instance{tree.mdp,           tree.beta,
                       tree.map,           tree.n_beta,
                       tree.seed,          lambda,
                       epsilon_fraction * min_w, std::move(w),
                       min_w};
}

struct Prop1EpisodeLog {
  int terminal_state = 0;
  int direction = 0;
  bool new_direction = false;
};

struct Prop1TrialLog {
  std::uint64_t trial_id = 0;
  std::vector<Prop1EpisodeLog> episodes;
  bool success = false;
};

struct Prop1Report {
  std::uint64_t instance_seed = 0;
  std::size_t n_beta = 0;
  std::size_t n_trials = 0;
  std::size_t successes = 0;
  std::size_t support_violations = 0;
  std::vector<Prop1TrialLog> trials;

  double success_rate() const {
    return n_trials == 0
               ? 0.0
               : static_cast<double>(successes) / static_cast<double>(n_trials);
  }
};

// Runs n_beta episodes per trial, sampling every action from the exact
// max-coverage conditional given the history of completed episodes. A trial
// succeeds when each episode ends on a terminal direction not seen before,
// so all n_beta directions are covered in exactly n_beta episodes.
inline Prop1Report verify_prop1(const Prop1Instance& instance, const Rng& rng,
                                std::size_t n_trials) {
  Prop1Report report;
  report.instance_seed = instance.instance_seed;
  report.n_beta = instance.n_beta;
  report.n_trials = n_trials;
  const std::size_t horizon = instance.mdp.horizon();
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    Rng trial_rng = rng.split(trial);
    Prop1TrialLog log;
    log.trial_id = trial;
    std::vector<bool> visited(instance.n_beta, false);
    std::vector<int> history;
    bool all_new = true;
    for (std::size_t episode = 0; episode < instance.n_beta; ++episode) {
      std::vector<int> states;
      states.push_back(static_cast<int>(
          trial_rng.sample_discrete(instance.mdp.initial_dist())));
      for (std::size_t k = 0; k <= horizon; ++k) {
        const std::size_t s = static_cast<std::size_t>(states.back());
        const std::vector<double> dist = oracle_conditional(
            instance.mdp, instance.beta, s, history, instance.map,
            instance.lambda, horizon - k);
        const std::size_t a = trial_rng.sample_discrete(dist);
        if (!instance.beta.supports(s, a)) ++report.support_violations;
        if (k < horizon)
          states.push_back(static_cast<int>(instance.mdp.successor(s, a)));
      }
      const int terminal = states.back();
      const std::size_t dir =
          instance.map.direction(static_cast<std::size_t>(terminal));
      Prop1EpisodeLog ep;
      ep.terminal_state = terminal;
      ep.direction = static_cast<int>(dir);
      ep.new_direction = dir < visited.size() && !visited[dir];
      if (!ep.new_direction) all_new = false;
      if (dir < visited.size()) visited[dir] = true;
      log.episodes.push_back(ep);
      history.insert(history.end(), states.begin(), states.end());
    }
    bool all_visited = true;
    for (bool v : visited) all_visited = all_visited && v;
    log.success = all_new && all_visited;
    if (log.success) ++report.successes;
    report.trials.push_back(std::move(log));
  }
  return report;
}

// Episodes required to see every terminal direction under plain behavior
// rollouts, per trial, capped at max_episodes (censored trials report the
// cap).
inline std::vector<int> bc_cover_time(const Prop1Instance& instance,
                                      const Rng& rng, std::size_t n_trials,
                                      std::size_t max_episodes = 100000) {
  std::vector<int> times;
  times.reserve(n_trials);
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    Rng trial_rng = rng.split(trial);
    std::vector<bool> visited(instance.n_beta, false);
    std::size_t n_visited = 0;
    std::size_t episode = 0;
    while (n_visited < instance.n_beta && episode < max_episodes) {
      ++episode;
      Trajectory traj =
          rollout(instance.mdp, sampler_from(instance.beta, trial_rng), trial_rng);
      const std::size_t dir =
          instance.map.direction(static_cast<std::size_t>(traj.states.back()));
      if (dir < visited.size() && !visited[dir]) {
        visited[dir] = true;
        ++n_visited;
      }
    }
    times.push_back(static_cast<int>(episode));
  }
  return times;
}

inline nlohmann::ordered_json prop1_report_json(const Prop1Report& report) {
  nlohmann::ordered_json j;
  j["instance_seed"] = report.instance_seed;
  j["n_beta"] = report.n_beta;
  j["n_trials"] = report.n_trials;
  j["successes"] = report.successes;
  j["success_rate"] = report.success_rate();
  j["support_violations"] = report.support_violations;
  nlohmann::ordered_json trials = nlohmann::ordered_json::array();
  for (const auto& trial : report.trials) {
    nlohmann::ordered_json t;
    t["trial_id"] = trial.trial_id;
    t["success"] = trial.success;
    nlohmann::ordered_json eps = nlohmann::ordered_json::array();
    for (const auto& ep : trial.episodes) {
      nlohmann::ordered_json e;
      e["terminal_state"] = ep.terminal_state;
      e["direction"] = ep.direction;
      e["new_direction"] = ep.new_direction;
      eps.push_back(e);
    }
    t["episodes"] = eps;
    trials.push_back(t);
  }
  j["trials"] = trials;
  return j;
}

}  // namespace be
