#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "be/envs.hpp"
#include "be/errors.hpp"
#include "be/prop1.hpp"
#include "be/rng.hpp"

namespace {

// Two-goal instances share the verification machinery via a hand-built
// instance record over the tree's direction map.
struct TwoGoalFixture {
  be::TwoGoalTree env;
  be::FeatureMap map;
  std::map<int, double> visitation;

  explicit TwoGoalFixture(double p, std::size_t depth)
      : env(be::build_two_goal_tree(p, depth)),
        map(be::two_goal_feature_map(env)),
        visitation(be::compute_terminal_visitation(env.mdp, env.beta)) {}

  be::Prop1Instance instance(std::uint64_t seed) const {
    double min_w = 1.0;
    for (const auto& [s, w] : visitation) min_w = std::min(min_w, w);
    return be::Prop1Instance{env.mdp, env.beta, map,  2,    seed,
                             0.01,    0.5 * min_w, visitation, min_w};
  }
};

}  // namespace

TEST_CASE("terminal visitation probabilities on the two-goal tree") {
  TwoGoalFixture fix(0.1, 3);
  REQUIRE(fix.visitation.size() == 2u);
  REQUIRE(fix.visitation.at(static_cast<int>(fix.env.goal1)) ==
          Catch::Approx(0.9).margin(1e-12));
  REQUIRE(fix.visitation.at(static_cast<int>(fix.env.goal2)) ==
          Catch::Approx(0.1).margin(1e-12));
}

TEST_CASE("terminal visitation matches the tree's leaf probabilities") {
  be::RandomTerminalTree env = be::build_random_terminal_tree(3, 3, 2, 42);
  std::map<int, double> w = be::compute_terminal_visitation(env.mdp, env.beta);
  double total = 0.0;
  for (std::size_t i = 0; i < env.leaves.size(); ++i) {
    REQUIRE(w.at(static_cast<int>(env.leaves[i])) ==
            Catch::Approx(env.leaf_probability[i]).margin(1e-12));
    total += w.at(static_cast<int>(env.leaves[i]));
  }
  REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("instance records the visitation floor") {
  be::RandomTerminalTree env = be::build_random_terminal_tree(2, 2, 2, 7);
  be::Prop1Instance inst = be::make_prop1_instance(env);
  REQUIRE(inst.n_beta == 2u);
  REQUIRE(inst.min_w == Catch::Approx(env.min_leaf_probability).margin(1e-12));
  REQUIRE(inst.epsilon == Catch::Approx(0.5 * inst.min_w).margin(1e-12));
  REQUIRE_THROWS_AS(be::make_prop1_instance(env, 0.01, 1.5), be::DomainError);
}

TEST_CASE("the oracle covers both two-goal terminals in exactly two episodes") {
  TwoGoalFixture fix(0.1, 3);
  be::Prop1Instance inst = fix.instance(123);
  be::Rng rng(123, 0);
  be::Prop1Report report = be::verify_prop1(inst, rng, 200);
  REQUIRE(report.n_trials == 200u);
  REQUIRE(report.successes == 200u);
  REQUIRE(report.support_violations == 0u);
  REQUIRE(report.success_rate() == 1.0);
  for (const auto& trial : report.trials) {
    REQUIRE(trial.episodes.size() == 2u);
    REQUIRE(trial.episodes[0].new_direction);
    REQUIRE(trial.episodes[1].new_direction);
    REQUIRE(trial.episodes[0].direction != trial.episodes[1].direction);
  }
}

TEST_CASE("oracle deployment covers random trees in n_beta episodes") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    for (std::size_t n_beta : {2u, 3u}) {
      be::RandomTerminalTree env =
          be::build_random_terminal_tree(n_beta, 3, 2, seed);
      be::Prop1Instance inst = be::make_prop1_instance(env);
      be::Rng rng(seed, 9);
      be::Prop1Report report = be::verify_prop1(inst, rng, 20);
      REQUIRE(report.successes == report.n_trials);
      REQUIRE(report.support_violations == 0u);
    }
  }
}

TEST_CASE("single-direction trees succeed trivially") {
  be::RandomTerminalTree env = be::build_random_terminal_tree(1, 2, 2, 3);
  be::Prop1Instance inst = be::make_prop1_instance(env);
  be::Rng rng(4, 0);
  be::Prop1Report report = be::verify_prop1(inst, rng, 10);
  REQUIRE(report.successes == 10u);
}

TEST_CASE("behavior sampling needs the coupon-collector episode count") {
  TwoGoalFixture fix(0.5, 3);
  be::Prop1Instance inst = fix.instance(55);
  be::Rng rng(55, 1);
  std::vector<int> times = be::bc_cover_time(inst, rng, 4000);
  double mean = std::accumulate(times.begin(), times.end(), 0.0) / times.size();
  // Two equal coupons: E = 1 + 1/0.5 = 3.
  REQUIRE(std::abs(mean - 3.0) < 0.1);
  for (int t : times) REQUIRE(t >= 2);
}

TEST_CASE("skewed goals stretch the behavior cover time") {
  TwoGoalFixture fix(0.1, 3);
  be::Prop1Instance inst = fix.instance(56);
  be::Rng rng(56, 1);
  std::vector<int> times = be::bc_cover_time(inst, rng, 4000);
  double mean = std::accumulate(times.begin(), times.end(), 0.0) / times.size();
  // 1 + (1-p)/p * (1/(1-p)) ... closed form: E = 1/p + 1/(1-p) - 1 = 10.111...
  REQUIRE(std::abs(mean - 10.111111111111111) < 0.4);
}

TEST_CASE("report serializes its fields") {
  TwoGoalFixture fix(0.1, 2);
  be::Prop1Instance inst = fix.instance(77);
  be::Rng rng(77, 0);
  be::Prop1Report report = be::verify_prop1(inst, rng, 5);
  auto j = be::prop1_report_json(report);
  REQUIRE(j["n_trials"] == 5);
  REQUIRE(j["successes"] == 5);
  REQUIRE(j["support_violations"] == 0);
  REQUIRE(j["trials"].size() == 5u);
  REQUIRE(j["trials"][0]["episodes"].size() == 2u);
}
