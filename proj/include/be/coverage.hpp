#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "be/errors.hpp"
#include "be/features.hpp"
#include "be/linalg.hpp"
#include "be/mdp.hpp"

namespace be {

// Running Gram matrix of visited features together with the regularized
// inverse (Lambda + lambda I)^{-1}. The inverse is maintained by the
// Sherman-Morrison rank-1 identity; a full Cholesky recompute every 512
// updates bounds floating-point drift. Coverage of the accumulated multiset
// is 1 / tr((Lambda + lambda I)^{-1}): strictly positive, and non-decreasing
// as states are added.
class CoverageAccumulator {
 public:
  explicit CoverageAccumulator(std::size_t dim, double lambda = 0.01)
      : lambda_(lambda), gram_(dim, dim), inv_(dim, dim), n_states_(0) {
    if (dim == 0) throw DomainError("CoverageAccumulator: dim must be positive");
    if (!(lambda > 0.0))
      throw DomainError("CoverageAccumulator: lambda must be positive");
    for (std::size_t i = 0; i < dim; ++i) inv_(i, i) = 1.0 / lambda_;
  }

  std::size_t dim() const { return gram_.rows(); }
  double lambda() const { return lambda_; }
  std::size_t n_states() const { return n_states_; }
  const Mat& gram() const { return gram_; }
  const Mat& inverse() const { return inv_; }

  void add_state(std::span<const double> phi) {
    if (phi.size() != dim())
      throw DomainError("add_state: feature length != accumulator dimension");
    for (double x : phi)
      if (!std::isfinite(x)) throw DomainError("add_state: non-finite feature");
    gram_.add_outer(phi);
    // inv <- inv - (inv phi)(inv phi)^T / (1 + phi^T inv phi)
    const std::vector<double> u = inv_.matvec(phi);
    double denom = 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) denom += phi[i] * u[i];
    inv_.add_outer(u, -1.0 / denom);
    ++n_states_;
    if (n_states_ % kRecomputeEvery == 0) recompute_inverse();
  }

  void add_state(const FeatureMap& map, std::size_t state) {
    add_state(map.evaluate(state));
  }

  double coverage() const { return 1.0 / inv_.trace(); }

  // Regularized Gram, Lambda + lambda I.
  Mat regularized_gram() const {
    Mat m = gram_;
    for (std::size_t i = 0; i < dim(); ++i) m(i, i) += lambda_;
    return m;
  }

  void recompute_inverse() { inv_ = spd_inverse(regularized_gram()); }

 private:
  static constexpr std::size_t kRecomputeEvery = 512;

  double lambda_;
  Mat gram_;
  Mat inv_;
  std::size_t n_states_;
};

// Finite-state fast path: with one-hot features, coverage reduces exactly to
// (sum_s 1/(N(s) + lambda))^{-1} over per-direction visit counts. Tracks the
// running sum so adding a state is O(1). Training labels for one-hot maps go
// through this; the matrix accumulator above is the general route, and the
// two are required to agree to 1e-12.
class OneHotCoverage {
 public:
  OneHotCoverage(std::size_t dim, double lambda)
      : lambda_(lambda), counts_(dim, 0), sum_(static_cast<double>(dim) / lambda) {}

  std::size_t dim() const { return counts_.size(); }

  void add_direction(std::size_t dir) {
    const double n = static_cast<double>(counts_[dir]);
    sum_ += 1.0 / (n + 1.0 + lambda_) - 1.0 / (n + lambda_);
    ++counts_[dir];
  }

  void remove_direction(std::size_t dir) {
    const double n = static_cast<double>(counts_[dir]);
    sum_ += 1.0 / (n - 1.0 + lambda_) - 1.0 / (n + lambda_);
    --counts_[dir];
  }

  double coverage() const { return 1.0 / sum_; }
  std::span<const std::size_t> counts() const { return counts_; }

  static double from_counts(std::span<const std::size_t> counts, double lambda) {
    double s = 0.0;
    for (std::size_t n : counts) s += 1.0 / (static_cast<double>(n) + lambda);
    return 1.0 / s;
  }

 private:
  double lambda_;
  std::vector<std::size_t> counts_;
  double sum_;
};

// Span of feature directions the behavior policy actually visits: the
// eigenvectors of the estimated behavior Gram matrix whose eigenvalues clear
// the threshold epsilon. Columns are orthonormal, ordered by descending
// eigenvalue.
struct BehaviorSubspace {
  Mat basis;                           // d x r, column-orthonormal
  double epsilon = 0.0;                // absolute retention threshold
  std::vector<double> singular_values; // retained, descending

  std::size_t rank() const { return basis.cols(); }
};

// Eigendecomposition of a per-trajectory mean Gram matrix, keeping
// directions whose eigenvalue clears epsilon.
inline BehaviorSubspace subspace_from_mean_gram(const Mat& mean, double epsilon) {
  if (!(epsilon > 0.0))
    throw DomainError("estimate_behavior_subspace: epsilon must be positive");
  const std::size_t dim = mean.rows();
  const EigenSym eig = jacobi_eigen_sym(mean);
  std::size_t kept = 0;
  for (double v : eig.values)
    if (v >= epsilon) ++kept;
  if (kept == 0)
    throw DomainError("estimate_behavior_subspace: epsilon above largest eigenvalue, basis empty");

  BehaviorSubspace sub;
  sub.epsilon = epsilon;
  sub.basis = Mat(dim, kept);
  sub.singular_values.resize(kept);
  // eig.values is ascending; emit retained columns in descending order.
  for (std::size_t j = 0; j < kept; ++j) {
    const std::size_t src = dim - 1 - j;
    sub.singular_values[j] = eig.values[src];
    for (std::size_t i = 0; i < dim; ++i) sub.basis(i, j) = eig.vectors(i, src);
  }
  return sub;
}

// Per-trajectory mean of within-trajectory Gram sums. Each inner list holds
// the feature vectors of one trajectory's summed steps.
inline Mat behavior_mean_gram(
    const std::vector<std::vector<std::vector<double>>>& trajectories_features,
    std::size_t dim) {
  if (trajectories_features.empty())
    throw DomainError("estimate_behavior_subspace: empty dataset");
  Mat gram(dim, dim);
  for (const auto& traj : trajectories_features)
    for (const auto& phi : traj) gram.add_outer(phi);
  const double scale = 1.0 / static_cast<double>(trajectories_features.size());
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) gram(r, c) *= scale;
  return gram;
}

inline BehaviorSubspace estimate_behavior_subspace_from_features(
    const std::vector<std::vector<std::vector<double>>>& trajectories_features,
    std::size_t dim, double epsilon) {
  return subspace_from_mean_gram(behavior_mean_gram(trajectories_features, dim),
                                 epsilon);
}

// Relative retention threshold: fraction of the largest eigenvalue of the
// mean behavior Gram. Default fraction 1e-3.
inline double relative_subspace_epsilon(const Mat& mean_gram,
                                        double fraction = 1e-3) {
  const EigenSym eig = jacobi_eigen_sym(mean_gram);
  return fraction * eig.values.back();
}

// Mean Gram from a demonstration dataset. The within-trajectory sum runs
// over steps 1..K: the start state is shared by every trajectory and carries
// no information about where the behavior policy goes.
inline Mat behavior_mean_gram(const DemoDataset& data, const FeatureMap& map) {
  if (data.trajectories.empty())
    throw DomainError("estimate_behavior_subspace: empty dataset");
  const std::size_t dim = map.dim();
  Mat gram(dim, dim);
  for (const auto& traj : data.trajectories)
    for (std::size_t k = 1; k < traj.states.size(); ++k)
      gram.add_outer(map.evaluate(static_cast<std::size_t>(traj.states[k])));
  const double scale = 1.0 / static_cast<double>(data.trajectories.size());
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) gram(r, c) *= scale;
  return gram;
}

inline BehaviorSubspace estimate_behavior_subspace(const DemoDataset& data,
                                                   const FeatureMap& map,
                                                   double epsilon) {
  return subspace_from_mean_gram(behavior_mean_gram(data, map), epsilon);
}

// Coverage restricted to a behavior subspace:
// 1 / tr((U^T Lambda U + lambda I_r)^{-1}). With the identity basis this is
// exactly the unrestricted coverage.
inline double coverage_beta(const CoverageAccumulator& acc,
                            const BehaviorSubspace& sub) {
  if (sub.basis.rows() != acc.dim())
    throw DomainError("coverage_beta: basis dimension mismatch");
  const std::size_t r = sub.rank();
  const Mat ut = sub.basis.transposed();
  Mat projected = ut.matmul(acc.gram()).matmul(sub.basis);
  for (std::size_t i = 0; i < r; ++i) projected(i, i) += acc.lambda();
  return 1.0 / spd_inverse(projected).trace();
}

// Coverage of history and future taken together. Either list may be empty;
// states are ids evaluated through the map.
inline double coverage_to_go(std::span<const int> history_states,
                             std::span<const int> future_states,
                             const FeatureMap& map, double lambda) {
  CoverageAccumulator acc(map.dim(), lambda);
  for (int s : history_states) acc.add_state(map, static_cast<std::size_t>(s));
  for (int s : future_states) acc.add_state(map, static_cast<std::size_t>(s));
  return acc.coverage();
}

}  // namespace be
