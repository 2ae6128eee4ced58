#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "be/baselines.hpp"
#include "be/envs.hpp"
#include "be/errors.hpp"
#include "be/metrics.hpp"
#include "be/online.hpp"
#include "be/policy.hpp"
#include "be/rng.hpp"

using be::DeployHistoryMode;
using be::ExpSetting;
using be::MetricsLog;
using be::OnlineAgent;
using be::OnlineParams;

namespace {

std::string csv_of(const MetricsLog& log) {
  std::ostringstream out;
  be::write_metrics_csv(out, log);
  return out.str();
}

}  // namespace

TEST_CASE("online runs record one row per step") {
  be::TwoGoalTree env = be::build_two_goal_tree(0.3, 3);
  be::FeatureMap map = be::two_goal_feature_map(env);
  be::Rng data_rng(61, 0);
  be::DemoDataset data = be::generate_dataset(env.mdp, env.beta, 200, data_rng);
  be::BcPolicy bc = be::train_bc(data);
  OnlineAgent agent = be::make_bc_agent(bc);
  OnlineParams params;
  params.n_episodes = 5;
  params.beta = &env.beta;
  be::Rng run_rng(62, 0);
  MetricsLog log = be::run_online(env.mdp, map, agent, params, run_rng);

  REQUIRE(log.records.size() == 5 * (env.mdp.horizon() + 1));
  REQUIRE(log.support_violations == 0u);
  double prev_cov = 0.0;
  std::size_t prev_goals = 0;
  std::size_t prev_regions = 0;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const be::StepRecord& rec = log.records[i];
    REQUIRE(rec.step == i);
    REQUIRE(rec.coverage >= prev_cov);
    REQUIRE(rec.goals_reached >= prev_goals);
    REQUIRE(rec.regions_reached >= prev_regions);
    prev_cov = rec.coverage;
    prev_goals = rec.goals_reached;
    prev_regions = rec.regions_reached;
  }
  REQUIRE(log.final_goals() >= 1u);
  REQUIRE(log.final_regions() <= env.mdp.n_states());
  REQUIRE(log.final_coverage() == log.records.back().coverage);
}

TEST_CASE("online runs are seed-deterministic") {
  be::TwoGoalTree env = be::build_two_goal_tree(0.3, 3);
  be::FeatureMap map = be::two_goal_feature_map(env);
  be::Rng data_rng(63, 0);
  be::DemoDataset data = be::generate_dataset(env.mdp, env.beta, 100, data_rng);
  be::BcPolicy bc = be::train_bc(data);
  OnlineParams params;
  params.n_episodes = 4;

  OnlineAgent agent_a = be::make_bc_agent(bc);
  be::Rng rng_a(64, 0);
  MetricsLog log_a = be::run_online(env.mdp, map, agent_a, params, rng_a);
  OnlineAgent agent_b = be::make_bc_agent(bc);
  be::Rng rng_b(64, 0);
  MetricsLog log_b = be::run_online(env.mdp, map, agent_b, params, rng_b);
  REQUIRE(csv_of(log_a) == csv_of(log_b));

  OnlineAgent agent_c = be::make_bc_agent(bc);
  be::Rng rng_c(65, 0);
  MetricsLog log_c = be::run_online(env.mdp, map, agent_c, params, rng_c);
  REQUIRE(csv_of(log_a) != csv_of(log_c));
}

TEST_CASE("online runs validate parameters") {
  be::TwoGoalTree env = be::build_two_goal_tree(0.3, 2);
  be::FeatureMap map = be::two_goal_feature_map(env);
  OnlineAgent agent = be::make_random_agent(2);
  be::Rng rng(66, 0);
  OnlineParams bad;
  bad.n_episodes = 0;
  REQUIRE_THROWS_AS(be::run_online(env.mdp, map, agent, bad, rng),
                    be::DomainError);
  OnlineParams short_schedule;
  short_schedule.n_episodes = 3;
  short_schedule.exp_schedule = {ExpSetting::max()};
  REQUIRE_THROWS_AS(be::run_online(env.mdp, map, agent, short_schedule, rng),
                    be::DomainError);
}

TEST_CASE("misbehaving agents are caught") {
  be::TwoGoalTree env = be::build_two_goal_tree(0.3, 2);
  be::FeatureMap map = be::two_goal_feature_map(env);
  OnlineAgent agent;
  agent.act = [](int, std::size_t, be::Rng&) { return 9; };
  OnlineParams params;
  be::Rng rng(67, 0);
  REQUIRE_THROWS_AS(be::run_online(env.mdp, map, agent, params, rng),
                    be::ContractError);
}

TEST_CASE("trained deployment covers both goals within three episodes") {
  be::TwoGoalTree env = be::build_two_goal_tree(0.1, 3);
  be::FeatureMap map = be::two_goal_feature_map(env);
  be::Rng data_rng(68, 0);
  be::DemoDataset data = be::generate_dataset(env.mdp, env.beta, 2000, data_rng);
  be::TrainConfig config;
  config.beta = &env.beta;
  config.seed = 21;
  be::ConditionalPolicy policy = be::train_be(data, map, 0.01, 4, config);

  be::Rng trial_rng(69, 0);
  int good = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    OnlineAgent agent = be::make_be_agent(policy, map, DeployHistoryMode::online);
    OnlineParams params;
    params.n_episodes = 3;
    params.beta = &env.beta;
    be::Rng run_rng = trial_rng.split(static_cast<std::uint64_t>(trial));
    MetricsLog log = be::run_online(env.mdp, map, agent, params, run_rng);
    REQUIRE(log.support_violations == 0u);
    if (log.final_goals() == 2u) ++good;
  }
  REQUIRE(good >= 90);
}

TEST_CASE("history-free deployment equals the cloning baseline") {
  be::TwoGoalTree env = be::build_two_goal_tree(0.2, 3);
  be::FeatureMap map = be::two_goal_feature_map(env);
  be::Rng data_rng(70, 0);
  be::DemoDataset data = be::generate_dataset(env.mdp, env.beta, 500, data_rng);
  be::TrainConfig config;
  config.beta = &env.beta;
  config.seed = 23;
  be::ConditionalPolicy policy = be::train_be(data, map, 0.01, 4, config);
  be::BcPolicy bc = be::train_bc(data);

  OnlineParams params;
  params.n_episodes = 6;
  OnlineAgent none_agent = be::make_be_agent(policy, map, DeployHistoryMode::none);
  be::Rng rng_a(71, 0);
  MetricsLog log_none = be::run_online(env.mdp, map, none_agent, params, rng_a);
  OnlineAgent bc_agent = be::make_bc_agent(bc);
  be::Rng rng_b(71, 0);
  MetricsLog log_bc = be::run_online(env.mdp, map, bc_agent, params, rng_b);
  REQUIRE(csv_of(log_none) == csv_of(log_bc));
}

TEST_CASE("count bonus exploration sweeps an open room") {
  const std::string text =
      "S..\n"
      "...\n"
      "..G\n";
  be::GridMaze maze = be::build_grid_maze_from_text(text, {}, 0.1, 30);
  OnlineAgent agent = be::make_count_bonus_agent(maze.mdp, 1.0);
  OnlineParams params;
  params.n_episodes = 2;
  params.regions = &maze.regions;
  be::Rng rng(72, 0);
  MetricsLog log = be::run_online(maze.mdp, maze.map, agent, params, rng);
  // 9 free cells; the greedy novelty rule touches most of them quickly.
  REQUIRE(log.final_regions() >= 7u);
}

TEST_CASE("calibration sweeps share seeds across buckets") {
  be::TwoGoalTree env = be::build_two_goal_tree(0.1, 2);
  be::FeatureMap map = be::two_goal_feature_map(env);
  be::Rng data_rng(73, 0);
  be::DemoDataset data = be::generate_dataset(env.mdp, env.beta, 600, data_rng);
  be::TrainConfig config;
  config.beta = &env.beta;
  config.seed = 29;
  be::ConditionalPolicy policy = be::train_be(data, map, 0.01, 4, config);

  OnlineParams base;
  base.beta = &env.beta;
  be::Rng rng(74, 0);
  be::CalibrationCurve curve = be::calibration_sweep(
      policy, env.mdp, map, {0, 1, policy.bucketizer().max_bucket()}, 4, 6,
      base, rng);
  REQUIRE(curve.points.size() == 3u);
  for (const auto& point : curve.points) {
    REQUIRE(point.per_seed_regions.size() == 6u);
    REQUIRE(point.mean_regions >= 1.0);
  }
  REQUIRE(curve.support_violations == 0u);
  REQUIRE_THROWS_AS(
      be::calibration_sweep(policy, env.mdp, map, {0, 1}, 4, 6, base, rng),
      be::DomainError);

  // Same generator, same call: identical curve.
  be::CalibrationCurve again = be::calibration_sweep(
      policy, env.mdp, map, {0, 1, policy.bucketizer().max_bucket()}, 4, 6,
      base, rng);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(again.points[i].per_seed_regions == curve.points[i].per_seed_regions);
  }
}

TEST_CASE("history ablation deploys each mode with matched seeds") {
  be::TwoGoalTree env = be::build_two_goal_tree(0.1, 2);
  be::FeatureMap map = be::two_goal_feature_map(env);
  be::Rng data_rng(75, 0);
  be::DemoDataset data = be::generate_dataset(env.mdp, env.beta, 600, data_rng);
  be::TrainConfig config;
  config.beta = &env.beta;
  config.seed = 31;
  be::ConditionalPolicy policy = be::train_be(data, map, 0.01, 4, config);

  OnlineParams base;
  base.beta = &env.beta;
  be::Rng rng(76, 0);
  be::AblationResult result = be::ablation_history(
      policy, env.mdp, map,
      {DeployHistoryMode::online, DeployHistoryMode::first_state,
       DeployHistoryMode::none},
      4, 5, base, rng);
  REQUIRE(result.regions_per_mode.size() == 3u);
  REQUIRE(result.regions_per_mode[0].first == "online");
  REQUIRE(result.regions_per_mode[1].first == "first_state");
  REQUIRE(result.regions_per_mode[2].first == "none");
  for (const auto& [mode, regions] : result.regions_per_mode) {
    REQUIRE(regions.size() == 5u);
  }
}

TEST_CASE("metrics csv has the pinned schema") {
  MetricsLog log;
  log.method = "demo";
  be::StepRecord rec;
  rec.step = 0;
  rec.episode = 0;
  rec.state = 3;
  rec.action = 1;
  rec.coverage = 0.012345678901234567;
  rec.coverage_beta = 0.5;
  rec.goals_reached = 1;
  rec.regions_reached = 2;
  log.records.push_back(rec);
  std::string csv = csv_of(log);
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  REQUIRE(header ==
          "step,episode,state,action,coverage,coverage_beta,goals_reached,regions_reached");
  REQUIRE(row == "0,0,3,1,0.0123456789012,0.5,1,2");
  REQUIRE(csv_of(log) == csv);
}

TEST_CASE("subspace coverage column tracks the projected accumulator") {
  be::RandomTerminalTree env = be::build_random_terminal_tree(2, 2, 2, 21);
  be::Rng data_rng(77, 0);
  be::DemoDataset data = be::generate_dataset(env.mdp, env.beta, 300, data_rng);
  be::Mat gram = be::behavior_mean_gram(data, env.map);
  be::BehaviorSubspace sub = be::subspace_from_mean_gram(
      gram, be::relative_subspace_epsilon(gram));

  OnlineAgent agent = be::make_random_agent(env.mdp.n_actions());
  OnlineParams params;
  params.n_episodes = 3;
  params.subspace = &sub;
  be::Rng rng(78, 0);
  MetricsLog log = be::run_online(env.mdp, env.map, agent, params, rng);
  for (const auto& rec : log.records) {
    REQUIRE(std::isfinite(rec.coverage_beta));
    REQUIRE(rec.coverage_beta >= 0.0);
  }
  // Without a subspace the column duplicates full coverage.
  OnlineAgent agent2 = be::make_random_agent(env.mdp.n_actions());
  OnlineParams plain;
  plain.n_episodes = 3;
  be::Rng rng2(78, 0);
  MetricsLog log2 = be::run_online(env.mdp, env.map, agent2, plain, rng2);
  for (const auto& rec : log2.records) {
    REQUIRE(rec.coverage_beta == rec.coverage);
  }
}

TEST_CASE("random walk covers a small open room") {
  const std::string text =
      "S..\n"
      "...\n"
      "..G\n";
  be::GridMaze maze = be::build_grid_maze_from_text(text, {}, 0.1, 30);
  OnlineAgent agent = be::make_random_agent(maze.mdp.n_actions());
  OnlineParams params;
  params.n_episodes = 50;
  params.regions = &maze.regions;
  be::Rng rng(79, 0);
  MetricsLog log = be::run_online(maze.mdp, maze.map, agent, params, rng);
  REQUIRE(log.final_regions() == 9u);
}

TEST_CASE("single-bucket policy yields a flat calibration curve") {
  be::TwoGoalTree env = be::build_two_goal_tree(0.1, 2);
  be::FeatureMap map = be::two_goal_feature_map(env);
  be::Rng data_rng(80, 0);
  be::DemoDataset data = be::generate_dataset(env.mdp, env.beta, 400, data_rng);
  be::TrainConfig config;
  config.beta = &env.beta;
  config.seed = 29;
  config.max_buckets = 1;
  be::ConditionalPolicy policy = be::train_be(data, map, 0.01, 4, config);
  REQUIRE(policy.bucketizer().max_bucket() == 0u);

  OnlineParams base;
  base.beta = &env.beta;
  be::Rng rng(81, 0);
  // All swept indices clamp to the lone bucket, so the matched seeds give
  // byte-identical runs per point.
  be::CalibrationCurve curve =
      be::calibration_sweep(policy, env.mdp, map, {0, 1, 2}, 3, 5, base, rng);
  REQUIRE(curve.points.size() == 3u);
  for (std::size_t i = 1; i < curve.points.size(); ++i)
    REQUIRE(curve.points[i].per_seed_regions ==
            curve.points[0].per_seed_regions);
}

TEST_CASE("bottom bucket stays within one stderr of plain cloning") {
  be::TwoGoalTree env = be::build_two_goal_tree(0.1, 2);
  be::FeatureMap map = be::two_goal_feature_map(env);
  be::Rng data_rng(82, 0);
  be::DemoDataset data = be::generate_dataset(env.mdp, env.beta, 600, data_rng);
  be::TrainConfig config;
  config.beta = &env.beta;
  config.seed = 29;
  be::ConditionalPolicy policy = be::train_be(data, map, 0.01, 4, config);
  be::BcPolicy bc = be::train_bc(data);

  const std::size_t n_seeds = 12;
  OnlineParams base;
  base.beta = &env.beta;
  be::Rng master(83, 0);
  be::CalibrationCurve curve = be::calibration_sweep(
      policy, env.mdp, map, {0, 1, policy.bucketizer().max_bucket()}, 3,
      n_seeds, base, master);

  std::vector<double> bc_regions;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    OnlineAgent agent = be::make_bc_agent(bc);
    OnlineParams params = base;
    params.n_episodes = 3;
    be::Rng run_rng = master.split(s);
    MetricsLog log = be::run_online(env.mdp, map, agent, params, run_rng);
    bc_regions.push_back(static_cast<double>(log.final_regions()));
  }
  double bc_mean = 0.0;
  for (double r : bc_regions) bc_mean += r;
  bc_mean /= static_cast<double>(bc_regions.size());
  double var = 0.0;
  for (double r : bc_regions) var += (r - bc_mean) * (r - bc_mean);
  const double bc_stderr =
      std::sqrt(var / static_cast<double>(bc_regions.size() - 1)) /
      std::sqrt(static_cast<double>(bc_regions.size()));
  REQUIRE(curve.points.front().mean_regions <= bc_mean + bc_stderr + 1e-12);
}
