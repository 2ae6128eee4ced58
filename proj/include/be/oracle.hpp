#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "be/coverage.hpp"
#include "be/errors.hpp"
#include "be/features.hpp"
#include "be/mdp.hpp"

namespace be {

inline constexpr std::size_t kOracleBudget = 1000000;
inline constexpr double kOracleTieTolerance = 1e-12;

namespace detail {

struct OracleLeaf {
  int first_action;
  double probability;
  double cov;
};

// Depth-first enumeration over behavior-supported action sequences with an
// incrementally maintained one-hot coverage value. Coverage is added on
// descent and removed on backtrack; the drift this leaves in the running sum
// is orders of magnitude below the tie tolerance. The budget caps the number
// of enumerated suffixes, so total work is O(budget * depth) even when the
// full tree would be exponential.
inline void oracle_dfs_one_hot(const TabularMdp& mdp, const BehaviorPolicy& beta,
                               const FeatureMap& map, std::size_t state,
                               std::size_t steps_left, int first_action,
                               double probability, OneHotCoverage& acc,
                               std::vector<OracleLeaf>& leaves,
                               std::size_t budget) {
  if (steps_left == 0) {
    if (leaves.size() >= budget)
      throw ResourceError("oracle_conditional: enumeration budget exceeded");
    leaves.push_back(OracleLeaf{first_action, probability, acc.coverage()});
    return;
  }
  const auto row = beta.row(state);
  for (std::size_t a = 0; a < row.size(); ++a) {
    if (row[a] <= 0.0) continue;
    const std::size_t next = mdp.successor(state, a);
    const std::size_t dir = map.direction(next);
    acc.add_direction(dir);
    oracle_dfs_one_hot(mdp, beta, map, next, steps_left - 1,
                       first_action < 0 ? static_cast<int>(a) : first_action,
                       probability * row[a], acc, leaves, budget);
    acc.remove_direction(dir);
  }
}

}  // namespace detail

// Exact conditional of the behavior policy given that the remaining suffix
// attains maximal coverage: enumerate every beta-supported suffix of length
// steps_remaining from `state`, score each by the coverage of
// (history ∪ suffix including `state`), keep the ties within 1e-12 of the
// maximum, and return the beta-probability-weighted marginal over first
// actions, renormalized. Actions outside beta's support get exactly 0.
// With no steps remaining there is no suffix to condition on and the
// behavior row itself is returned.
inline std::vector<double> oracle_conditional(
    const TabularMdp& mdp, const BehaviorPolicy& beta, std::size_t state,
    std::span<const int> history_states, const FeatureMap& map, double lambda,
    std::size_t steps_remaining, std::size_t budget = kOracleBudget) {
  if (!mdp.deterministic())
    throw DomainError("oracle_conditional: MDP must be deterministic");
  if (state >= mdp.n_states())
    throw DomainError("oracle_conditional: state out of range");
  if (!map.is_one_hot())
    throw DomainError("oracle_conditional: feature map must be one-hot");
  const auto beta_row = beta.row(state);
  if (steps_remaining == 0)
    return std::vector<double>(beta_row.begin(), beta_row.end());

  std::vector<detail::OracleLeaf> leaves;
  OneHotCoverage acc(map.dim(), lambda);
  for (int s : history_states)
    acc.add_direction(map.direction(static_cast<std::size_t>(s)));
  acc.add_direction(map.direction(state));
  detail::oracle_dfs_one_hot(mdp, beta, map, state, steps_remaining, -1, 1.0,
                             acc, leaves, budget);

  double max_cov = leaves.front().cov;
  for (const auto& leaf : leaves) max_cov = std::max(max_cov, leaf.cov);

  std::vector<double> marginal(mdp.n_actions(), 0.0);
  double total = 0.0;
  for (const auto& leaf : leaves) {
    if (leaf.cov < max_cov - kOracleTieTolerance) continue;
    marginal[static_cast<std::size_t>(leaf.first_action)] += leaf.probability;
    total += leaf.probability;
  }
  for (double& p : marginal) p /= total;
  return marginal;
}

}  // namespace be
