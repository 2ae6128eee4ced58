#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "be/errors.hpp"
#include "be/linalg.hpp"
#include "be/rng.hpp"

namespace be {

enum class FeatureKind { one_hot, random_cosine, identity };

inline std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::one_hot: return "onehot";
    case FeatureKind::random_cosine: return "random_cosine";
    case FeatureKind::identity: return "identity";
  }
  return "?";
}

// Maps a state to a d-dimensional feature vector.
//
//  - one_hot: state id -> e_i. An optional direction table lets several
//    states share a direction (tree environments give every interior state
//    the same feature); without it the direction is the state id itself.
//  - random_cosine: x -> cos(A x + b) with A, b drawn once from the seed.
//    Entries always land in [-1, 1].
//  - identity: passes a real vector through unchanged.
class FeatureMap {
 public:
  static FeatureMap one_hot(std::size_t dim) {
    FeatureMap m;
    m.kind_ = FeatureKind::one_hot;
    m.dim_ = dim;
    return m;
  }

  // One-hot over shared directions: direction_of_state[s] in [0, dim).
  static FeatureMap one_hot_table(std::size_t dim,
                                  std::vector<std::size_t> direction_of_state) {
    FeatureMap m;
    m.kind_ = FeatureKind::one_hot;
    m.dim_ = dim;
    for (std::size_t d : direction_of_state)
      if (d >= dim) throw DomainError("one_hot_table: direction out of range");
    m.direction_table_ = std::move(direction_of_state);
    return m;
  }

  static FeatureMap identity(std::size_t dim) {
    FeatureMap m;
    m.kind_ = FeatureKind::identity;
    m.dim_ = dim;
    return m;
  }

  static FeatureMap random_cosine(std::size_t dim, std::size_t input_dim,
                                  std::uint64_t seed) {
    FeatureMap m;
    m.kind_ = FeatureKind::random_cosine;
    m.dim_ = dim;
    m.input_dim_ = input_dim;
    m.seed_ = seed;
    Rng rng(seed, 0x5eedu);
    m.matrix_ = Mat(dim, input_dim);
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < input_dim; ++c)
        m.matrix_(r, c) = gaussian(rng);
    m.offset_.resize(dim);
    for (std::size_t r = 0; r < dim; ++r)
      m.offset_[r] = rng.next_double() * 2.0 * pi();
    return m;
  }

  FeatureKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t input_dim() const { return input_dim_; }
  std::uint64_t seed() const { return seed_; }
  bool has_direction_table() const { return !direction_table_.empty(); }

  bool is_one_hot() const { return kind_ == FeatureKind::one_hot; }

  // Direction index for one-hot maps (identity mapping without a table).
  std::size_t direction(std::size_t state) const {
    if (kind_ != FeatureKind::one_hot)
      throw DomainError("direction: feature map is not one-hot");
    if (!direction_table_.empty()) {
      if (state >= direction_table_.size())
        throw DomainError("direction: state id " + std::to_string(state) +
                          " outside direction table");
      return direction_table_[state];
    }
    if (state >= dim_)
      throw DomainError("direction: state id " + std::to_string(state) +
                        " >= dimension " + std::to_string(dim_));
    return state;
  }

  std::vector<double> evaluate(std::size_t state) const {
    if (kind_ != FeatureKind::one_hot)
      throw DomainError("evaluate(state id) requires a one-hot map");
    std::vector<double> out(dim_, 0.0);
    out[direction(state)] = 1.0;
    return out;
  }

  std::vector<double> evaluate(std::span<const double> x) const {
    switch (kind_) {
      case FeatureKind::identity: {
        if (x.size() != dim_)
          throw DomainError("identity features: wrong input length");
        return std::vector<double>(x.begin(), x.end());
      }
      case FeatureKind::random_cosine: {
        if (x.size() != input_dim_)
          throw DomainError("random_cosine features: wrong input length");
        std::vector<double> out = matrix_.matvec(x);
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = std::cos(out[i] + offset_[i]);
        return out;
      }
      case FeatureKind::one_hot:
        throw DomainError("one-hot features take a state id, not a vector");
    }
    throw DomainError("evaluate: unknown feature kind");
  }

  const Mat& matrix() const { return matrix_; }
  std::span<const double> offset() const { return offset_; }

 private:
  static double pi() { return 3.14159265358979323846; }

  // Box-Muller from our own stream so the draw is identical on any platform.
  static double gaussian(Rng& rng) {
    double u1 = rng.next_double();
    while (u1 <= 0.0) u1 = rng.next_double();
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi() * u2);
  }

  FeatureKind kind_ = FeatureKind::one_hot;
  std::size_t dim_ = 0;
  std::size_t input_dim_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::size_t> direction_table_;
  Mat matrix_;
  std::vector<double> offset_;
};

}  // namespace be
