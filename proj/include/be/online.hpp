#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "be/baselines.hpp"
#include "be/coverage.hpp"
#include "be/errors.hpp"
#include "be/features.hpp"
#include "be/history.hpp"
#include "be/mdp.hpp"
#include "be/metrics.hpp"
#include "be/policy.hpp"
#include "be/rng.hpp"
#include "be/stats.hpp"

namespace be {

// What the policy sees of the cross-episode history at deployment:
// the real thing, only its first state, or nothing (plain fallback rows).
enum class DeployHistoryMode { online, first_state, none };

inline const char* to_string(DeployHistoryMode m) {
  switch (m) {
    case DeployHistoryMode::online: return "online";
    case DeployHistoryMode::first_state: return "first_state";
    case DeployHistoryMode::none: return "none";
  }
  return "?";
}

inline DeployHistoryMode deploy_history_mode_from_string(const std::string& s) {
  if (s == "online") return DeployHistoryMode::online;
  if (s == "first_state") return DeployHistoryMode::first_state;
  if (s == "none") return DeployHistoryMode::none;
  throw ConfigError("unknown deploy history mode: " + s);
}

// An online agent is three hooks: an episode-start refresh fed the history
// snapshot and the episode's exploratoriness setting, an action choice, and
// an optional observation of each state entered (for count-based agents).
struct OnlineAgent {
  std::function<void(std::span<const int> history, std::size_t episode,
                     const ExpSetting& exp, Rng& rng)>
      begin_episode;
  std::function<int(int state, std::size_t k, Rng& rng)> act;
  std::function<void(int state)> observe;  // may be empty
};

struct OnlineParams {
  std::size_t n_episodes = 1;
  std::vector<ExpSetting> exp_schedule;    // empty = constant max-bucket
  const BehaviorPolicy* beta = nullptr;    // support-violation instrumentation
  const BehaviorSubspace* subspace = nullptr;  // null = identity (full space)
  const std::vector<int>* regions = nullptr;   // null = one region per state
  double lambda = 0.01;
};

// Sequential deployment with cross-episode history. The agent's summary
// refresh sees the history of completed episodes only (the current episode
// is not in its own context, matching how training histories are drawn).
// Coverage columns are maintained incrementally; the subspace column
// accumulates projected features so the restricted trace stays O(r^2) per
// step. Every completed episode is validated against the MDP.
inline MetricsLog run_online(const TabularMdp& mdp, const FeatureMap& map,
                             OnlineAgent& agent, const OnlineParams& params,
                             Rng& rng) {
  if (params.n_episodes == 0)
    throw DomainError("run_online: n_episodes must be >= 1");
  if (!params.exp_schedule.empty() &&
      params.exp_schedule.size() < params.n_episodes)
    throw DomainError("run_online: exp schedule shorter than n_episodes");

  MetricsLog log;
  CoverageAccumulator acc(map.dim(), params.lambda);
  std::unique_ptr<CoverageAccumulator> acc_beta;
  if (params.subspace != nullptr)
    acc_beta = std::make_unique<CoverageAccumulator>(params.subspace->rank(),
                                                     params.lambda);

  std::vector<int> history;
  std::set<int> goals;
  std::set<int> regions_seen;
  std::size_t step = 0;

  auto visit = [&](int state) {
    const std::size_t s = static_cast<std::size_t>(state);
    const std::vector<double> phi = map.evaluate(s);
    acc.add_state(phi);
    if (acc_beta) {
      const Mat& u = params.subspace->basis;
      std::vector<double> projected(u.cols(), 0.0);
      for (std::size_t c = 0; c < u.cols(); ++c)
        for (std::size_t r = 0; r < u.rows(); ++r)
          projected[c] += u(r, c) * phi[r];
      acc_beta->add_state(projected);
    }
    if (mdp.terminal(s)) goals.insert(state);
    regions_seen.insert(params.regions ? (*params.regions)[s] : state);
    if (agent.observe) agent.observe(state);
  };

  for (std::size_t episode = 0; episode < params.n_episodes; ++episode) {
    const ExpSetting exp = params.exp_schedule.empty()
                               ? ExpSetting::max()
                               : params.exp_schedule[episode];
    if (agent.begin_episode) agent.begin_episode(history, episode, exp, rng);

    Trajectory traj;
    traj.states.push_back(
        static_cast<int>(rng.sample_discrete(mdp.initial_dist())));
    for (std::size_t k = 0; k <= mdp.horizon(); ++k) {
      const int s = traj.states.back();
      visit(s);
      const int a = agent.act(s, k, rng);
      if (a < 0 || static_cast<std::size_t>(a) >= mdp.n_actions())
        throw ContractError("run_online: agent returned invalid action-id");
      if (params.beta != nullptr &&
          !params.beta->supports(static_cast<std::size_t>(s),
                                 static_cast<std::size_t>(a)))
        ++log.support_violations;
      traj.actions.push_back(a);

      StepRecord rec;
      rec.step = step++;
      rec.episode = episode;
      rec.state = s;
      rec.action = a;
      rec.coverage = acc.coverage();
      rec.coverage_beta = acc_beta ? acc_beta->coverage() : rec.coverage;
      rec.goals_reached = goals.size();
      rec.regions_reached = regions_seen.size();
      log.records.push_back(rec);

      if (k < mdp.horizon())
        traj.states.push_back(static_cast<int>(mdp.successor(
            static_cast<std::size_t>(s), static_cast<std::size_t>(a))));
    }
    const std::vector<std::string> violations = validate_trajectory(mdp, traj);
    if (!violations.empty())
      throw ContractError("run_online: episode failed validation: " +
                          violations.front());
    history.insert(history.end(), traj.states.begin(), traj.states.end());
  }
  return log;
}

// ---------------------------------------------------------------------------
// Agent adapters.
// ---------------------------------------------------------------------------

// Conditional-policy agent. The deploy mode transforms the history snapshot
// before summarization; "none" bypasses the table and samples the fallback
// head, which is exactly the cloning rows.
inline OnlineAgent make_be_agent(const ConditionalPolicy& policy,
                                 const FeatureMap& map,
                                 DeployHistoryMode deploy_mode, int task = -1) {
  struct State {
    HistorySummary summary;
    std::size_t bucket = 0;
  };
  auto state = std::make_shared<State>();
  OnlineAgent agent;
  agent.begin_episode = [&policy, &map, deploy_mode, state](
                            std::span<const int> history, std::size_t,
                            const ExpSetting& exp, Rng& rng) {
    if (deploy_mode == DeployHistoryMode::none) return;
    std::span<const int> input = history;
    if (deploy_mode == DeployHistoryMode::first_state && history.size() > 1)
      input = history.first(1);
    state->summary = summarize_history(policy.history_mode(), input,
                                       policy.summary_params(&map), rng);
    state->bucket = policy.resolve_bucket(exp);
  };
  agent.act = [&policy, deploy_mode, state, task](int s, std::size_t, Rng& rng) {
    if (deploy_mode == DeployHistoryMode::none)
      return static_cast<int>(rng.sample_discrete(policy.bc_row(s, task)));
    return policy.sample(s, state->summary, state->bucket, rng, task);
  };
  return agent;
}

inline OnlineAgent make_bc_agent(const BcPolicy& policy) {
  OnlineAgent agent;
  agent.act = [&policy](int s, std::size_t, Rng& rng) {
    return policy.sample(s, rng);
  };
  return agent;
}

inline OnlineAgent make_random_agent(std::size_t n_actions) {
  OnlineAgent agent;
  agent.act = [n_actions](int, std::size_t, Rng& rng) {
    return static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(n_actions)));
  };
  return agent;
}

inline OnlineAgent make_count_bonus_agent(const TabularMdp& mdp, double c) {
  auto counts = std::make_shared<std::vector<std::uint64_t>>(mdp.n_states(), 0);
  OnlineAgent agent;
  agent.act = [&mdp, c, counts](int s, std::size_t, Rng& rng) {
    return count_bonus_action(mdp, static_cast<std::size_t>(s), *counts, c, rng);
  };
  agent.observe = [counts](int s) { ++(*counts)[static_cast<std::size_t>(s)]; };
  return agent;
}

inline OnlineAgent make_bc_history_agent(const BcHistoryPolicy& policy,
                                         const FeatureMap& map) {
  auto summary = std::make_shared<HistorySummary>();
  OnlineAgent agent;
  agent.begin_episode = [&policy, &map, summary](std::span<const int> history,
                                                 std::size_t,
                                                 const ExpSetting&, Rng& rng) {
    *summary = summarize_history(policy.history_mode(), history,
                                 policy.inner().summary_params(&map), rng);
  };
  agent.act = [&policy, summary](int s, std::size_t, Rng& rng) {
    return policy.sample(s, *summary, rng);
  };
  return agent;
}

// ---------------------------------------------------------------------------
// Sweep drivers.
// ---------------------------------------------------------------------------

struct CalibrationPoint {
  std::size_t bucket = 0;
  double mean_regions = 0.0;
  double stderr_regions = 0.0;
  std::vector<double> per_seed_regions;
};

struct CalibrationCurve {
  std::vector<CalibrationPoint> points;
  std::size_t support_violations = 0;
};

// Mean final regions-reached per exploratoriness bucket, over seeds. Each
// (bucket, seed) cell is an independent deployment on its own child stream.
inline CalibrationCurve calibration_sweep(
    const ConditionalPolicy& policy, const TabularMdp& mdp,
    const FeatureMap& map, const std::vector<std::size_t>& buckets,
    std::size_t n_episodes, std::size_t n_seeds, const OnlineParams& base,
    const Rng& rng) {
  if (buckets.size() < 3)
    throw DomainError("calibration_sweep: need at least 3 exp values");
  CalibrationCurve curve;
  // Seeds are matched across buckets (seed i reuses one stream at every
  // bucket) so the sweep compares settings under shared randomness.
  for (std::size_t bi = 0; bi < buckets.size(); ++bi) {
    CalibrationPoint point;
    point.bucket = buckets[bi];
    for (std::size_t seed = 0; seed < n_seeds; ++seed) {
      Rng run_rng = rng.split(seed);
      OnlineAgent agent = make_be_agent(policy, map, DeployHistoryMode::online);
      OnlineParams params = base;
      params.n_episodes = n_episodes;
      params.exp_schedule.assign(n_episodes, ExpSetting::bucket(buckets[bi]));
      MetricsLog log = run_online(mdp, map, agent, params, run_rng);
      point.per_seed_regions.push_back(static_cast<double>(log.final_regions()));
      curve.support_violations += log.support_violations;
    }
    point.mean_regions = mean(point.per_seed_regions);
    point.stderr_regions = point.per_seed_regions.size() >= 2
                               ? standard_error(point.per_seed_regions)
                               : 0.0;
    curve.points.push_back(std::move(point));
  }
  return curve;
}

struct AblationResult {
  // Mode name -> final regions per seed, in deploy-mode declaration order.
  std::vector<std::pair<std::string, std::vector<double>>> regions_per_mode;
  std::size_t support_violations = 0;
};

// Same trained policy deployed under each history mode with matched seeds
// and budgets.
inline AblationResult ablation_history(const ConditionalPolicy& policy,
                                       const TabularMdp& mdp,
                                       const FeatureMap& map,
                                       const std::vector<DeployHistoryMode>& modes,
                                       std::size_t n_episodes,
                                       std::size_t n_seeds,
                                       const OnlineParams& base,
                                       const Rng& rng) {
  AblationResult result;
  // Matched seeds across modes, as in calibration_sweep.
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    std::vector<double> regions;
    for (std::size_t seed = 0; seed < n_seeds; ++seed) {
      Rng run_rng = rng.split(seed);
      OnlineAgent agent = make_be_agent(policy, map, modes[mi]);
      OnlineParams params = base;
      params.n_episodes = n_episodes;
      params.exp_schedule.clear();  // constant max-bucket
      MetricsLog log = run_online(mdp, map, agent, params, run_rng);
      regions.push_back(static_cast<double>(log.final_regions()));
      result.support_violations += log.support_violations;
    }
    result.regions_per_mode.emplace_back(to_string(modes[mi]),
                                         std::move(regions));
  }
  return result;
}

}  // namespace be
