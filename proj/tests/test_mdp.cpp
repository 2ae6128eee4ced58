#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "be/dataset_io.hpp"
#include "be/errors.hpp"
#include "be/mdp.hpp"
#include "be/rng.hpp"

using be::BehaviorPolicy;
using be::DemoDataset;
using be::TabularMdp;
using be::Trajectory;

namespace {

std::vector<double> point_mass(std::size_t n, std::size_t t) {
  std::vector<double> row(n, 0.0);
  row[t] = 1.0;
  return row;
}

// Three-state chain 0 -> 1 -> 2 with absorbing end; action 1 stays put.
TabularMdp make_chain() {
  std::vector<std::vector<std::vector<double>>> trans(3);
  trans[0] = {point_mass(3, 1), point_mass(3, 0)};
  trans[1] = {point_mass(3, 2), point_mass(3, 1)};
  trans[2] = {point_mass(3, 2), point_mass(3, 2)};
  return TabularMdp(3, 2, std::move(trans), point_mass(3, 0), 2,
                    {false, false, true});
}

TabularMdp make_noisy() {
  std::vector<std::vector<std::vector<double>>> trans(2);
  trans[0] = {{0.5, 0.5}, point_mass(2, 1)};
  trans[1] = {point_mass(2, 1), point_mass(2, 1)};
  return TabularMdp(2, 2, std::move(trans), point_mass(2, 0), 3,
                    {false, false});
}

}  // namespace

TEST_CASE("deterministic mdp exposes successors") {
  TabularMdp mdp = make_chain();
  REQUIRE(mdp.deterministic());
  REQUIRE(mdp.successor(0, 0) == 1u);
  REQUIRE(mdp.successor(0, 1) == 0u);
  REQUIRE(mdp.successor(1, 0) == 2u);
  REQUIRE(mdp.terminal(2));
  REQUIRE_FALSE(mdp.terminal(0));
}

TEST_CASE("stochastic mdp refuses successor queries") {
  TabularMdp mdp = make_noisy();
  REQUIRE_FALSE(mdp.deterministic());
  REQUIRE_THROWS_AS(mdp.successor(0, 0), be::ContractError);
}

TEST_CASE("mdp construction validates its tables") {
  // Transition row not summing to one.
  std::vector<std::vector<std::vector<double>>> bad(1);
  bad[0] = {{0.5}};
  REQUIRE_THROWS_AS(
      TabularMdp(1, 1, bad, {1.0}, 1, {false}), be::DomainError);
  // Negative initial probability.
  std::vector<std::vector<std::vector<double>>> ok(1);
  ok[0] = {{1.0}};
  REQUIRE_THROWS_AS(
      TabularMdp(1, 1, ok, {-1.0}, 1, {false}), be::DomainError);
  // Size mismatch.
  REQUIRE_THROWS_AS(
      TabularMdp(2, 1, ok, {1.0, 0.0}, 1, {false, false}), be::DomainError);
}

TEST_CASE("fingerprint is stable and input-sensitive") {
  TabularMdp a = make_chain();
  TabularMdp b = make_chain();
  REQUIRE(a.fingerprint() == b.fingerprint());
  REQUIRE(a.fingerprint().size() == 16u);
  TabularMdp c = make_noisy();
  REQUIRE(a.fingerprint() != c.fingerprint());
}

TEST_CASE("rollout walks the chain and records equal-length lists") {
  TabularMdp mdp = make_chain();
  be::Rng rng(1, 1);
  auto always_forward = [](int, int, const be::RolloutContext&) { return 0; };
  Trajectory traj = be::rollout(mdp, always_forward, rng);
  REQUIRE(traj.states == std::vector<int>{0, 1, 2});
  REQUIRE(traj.actions.size() == 3u);
  REQUIRE(be::validate_trajectory(mdp, traj).empty());
}

TEST_CASE("rollout hands samplers the episode prefix") {
  TabularMdp mdp = make_chain();
  be::Rng rng(1, 2);
  std::vector<std::size_t> seen_lengths;
  auto probe = [&](int, int step, const be::RolloutContext& ctx) {
    REQUIRE(ctx.episode_states.size() == static_cast<std::size_t>(step) + 1);
    REQUIRE(ctx.episode_actions.size() == static_cast<std::size_t>(step));
    seen_lengths.push_back(ctx.episode_states.size());
    return 0;
  };
  be::rollout(mdp, probe, rng);
  REQUIRE(seen_lengths == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("rollout rejects invalid actions") {
  TabularMdp mdp = make_chain();
  be::Rng rng(1, 3);
  auto bad = [](int, int, const be::RolloutContext&) { return 7; };
  REQUIRE_THROWS_AS(be::rollout(mdp, bad, rng), be::ContractError);
}

TEST_CASE("behavior policy validates rows and reports support") {
  REQUIRE_THROWS_AS(BehaviorPolicy({{0.6, 0.6}}), be::DomainError);
  BehaviorPolicy beta({{0.25, 0.75}, {1.0, 0.0}});
  REQUIRE(beta.supports(0, 0));
  REQUIRE(beta.supports(0, 1));
  REQUIRE_FALSE(beta.supports(1, 1));
  REQUIRE(beta.support_mask(1) == std::vector<bool>{true, false});
}

TEST_CASE("behavior rollouts follow the policy's probabilities") {
  TabularMdp mdp = make_chain();
  BehaviorPolicy beta({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}});
  be::Rng rng(2024, 5);
  auto sampler = be::sampler_from(beta, rng);
  int forward = 0;
  const int n = 100000;
  be::RolloutContext empty_ctx{{}, {}};
  for (int i = 0; i < n; ++i) {
    if (sampler(0, 0, empty_ctx) == 0) ++forward;
  }
  REQUIRE(std::abs(forward / static_cast<double>(n) - 0.3) < 0.006);
}

TEST_CASE("dataset generation is reproducible by seed") {
  TabularMdp mdp = make_chain();
  BehaviorPolicy beta({{0.5, 0.5}, {0.5, 0.5}, {1.0, 0.0}});
  be::Rng rng_a(42, 0);
  be::Rng rng_b(42, 0);
  DemoDataset a = be::generate_dataset(mdp, beta, 50, rng_a);
  DemoDataset b = be::generate_dataset(mdp, beta, 50, rng_b);
  REQUIRE(a.trajectories.size() == 50u);
  REQUIRE(a.mdp_fingerprint == mdp.fingerprint());
  REQUIRE(a.horizon == 2u);
  REQUIRE(be::dataset_to_string(a) == be::dataset_to_string(b));
  be::Rng rng_c(43, 0);
  DemoDataset c = be::generate_dataset(mdp, beta, 50, rng_c);
  REQUIRE(be::dataset_to_string(a) != be::dataset_to_string(c));
}

TEST_CASE("every generated trajectory validates") {
  TabularMdp mdp = make_noisy();
  BehaviorPolicy beta({{0.5, 0.5}, {0.5, 0.5}});
  be::Rng rng(7, 7);
  DemoDataset data = be::generate_dataset(mdp, beta, 100, rng);
  for (const auto& traj : data.trajectories) {
    REQUIRE(be::validate_trajectory(mdp, traj).empty());
  }
}

TEST_CASE("trajectory validation pinpoints violations") {
  TabularMdp mdp = make_chain();
  Trajectory traj;
  traj.states = {0, 1, 2};
  traj.actions = {0, 0, 0};
  REQUIRE(be::validate_trajectory(mdp, traj).empty());

  Trajectory wrong_len = traj;
  wrong_len.states.pop_back();
  auto v1 = be::validate_trajectory(mdp, wrong_len);
  REQUIRE_FALSE(v1.empty());
  REQUIRE(v1[0].find("length") != std::string::npos);

  Trajectory teleport = traj;
  teleport.states = {0, 2, 2};  // 0 -(a0)-> 2 is not the chain successor
  auto v2 = be::validate_trajectory(mdp, teleport);
  REQUIRE_FALSE(v2.empty());
  REQUIRE(v2[0].find("step 0") != std::string::npos);

  Trajectory oob = traj;
  oob.actions[1] = 9;
  REQUIRE_FALSE(be::validate_trajectory(mdp, oob).empty());
}

TEST_CASE("dataset serialization round-trips byte for byte") {
  TabularMdp mdp = make_chain();
  BehaviorPolicy beta({{0.5, 0.5}, {0.5, 0.5}, {1.0, 0.0}});
  be::Rng rng(11, 0);
  DemoDataset data = be::generate_dataset(mdp, beta, 20, rng);
  data.trajectories[3].task_label = 1;  // exercise the optional field

  std::string first = be::dataset_to_string(data);
  std::istringstream in(first);
  DemoDataset back = be::read_dataset(in);
  REQUIRE(be::dataset_to_string(back) == first);
  REQUIRE(back.mdp_fingerprint == data.mdp_fingerprint);
  REQUIRE(back.seed == data.seed);
  REQUIRE(back.horizon == data.horizon);
  REQUIRE(back.trajectories.size() == data.trajectories.size());
  REQUIRE(back.trajectories[3].task_label == 1);
  REQUIRE_FALSE(back.trajectories[0].task_label.has_value());
  REQUIRE(back.trajectories[5].states == data.trajectories[5].states);
}

TEST_CASE("dataset reader reports malformed lines") {
  std::istringstream empty("");
  REQUIRE_THROWS_AS(be::read_dataset(empty), be::DomainError);
  std::istringstream junk("{\"mdp_fingerprint\":\"x\",\"seed\":1,\"horizon\":2}\nnot json\n");
  try {
    be::read_dataset(junk);
    FAIL("expected DomainError");
  } catch (const be::DomainError& e) {
    REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("dataset file io matches in-memory serialization") {
  TabularMdp mdp = make_chain();
  BehaviorPolicy beta({{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}});
  be::Rng rng(3, 0);
  DemoDataset data = be::generate_dataset(mdp, beta, 5, rng);
  const std::string path = "test_dataset_roundtrip.jsonl";
  be::write_dataset_file(path, data);
  DemoDataset back = be::read_dataset_file(path);
  REQUIRE(be::dataset_to_string(back) == be::dataset_to_string(data));
  std::remove(path.c_str());
}
