#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "be/errors.hpp"
#include "be/features.hpp"

using be::FeatureKind;
using be::FeatureMap;

TEST_CASE("one-hot features produce unit basis vectors") {
  FeatureMap m = FeatureMap::one_hot(4);
  REQUIRE(m.kind() == FeatureKind::one_hot);
  REQUIRE(m.dim() == 4u);
  for (std::size_t s = 0; s < 4; ++s) {
    std::vector<double> v = m.evaluate(s);
    REQUIRE(v.size() == 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      REQUIRE(v[i] == (i == s ? 1.0 : 0.0));
    }
    REQUIRE(m.direction(s) == s);
  }
}

TEST_CASE("one-hot rejects out-of-range state ids") {
  FeatureMap m = FeatureMap::one_hot(3);
  REQUIRE_THROWS_AS(m.evaluate(std::size_t{3}), be::DomainError);
}

TEST_CASE("direction table lets states share a feature direction") {
  // States 0..4 collapse onto 3 directions; interior states share direction 2.
  FeatureMap m = FeatureMap::one_hot_table(3, {0, 2, 2, 1, 2});
  REQUIRE(m.has_direction_table());
  REQUIRE(m.direction(1) == 2u);
  REQUIRE(m.direction(4) == 2u);
  REQUIRE(m.direction(3) == 1u);
  std::vector<double> v1 = m.evaluate(std::size_t{1});
  std::vector<double> v4 = m.evaluate(std::size_t{4});
  REQUIRE(v1 == v4);
  REQUIRE(v1[2] == 1.0);
}

TEST_CASE("direction table validates entries") {
  REQUIRE_THROWS_AS(FeatureMap::one_hot_table(2, {0, 2}), be::DomainError);
}

TEST_CASE("identity features pass vectors through") {
  FeatureMap m = FeatureMap::identity(3);
  std::vector<double> x = {0.5, -1.25, 3.0};
  REQUIRE(m.evaluate(std::span<const double>(x)) == x);
  std::vector<double> bad = {1.0, 2.0};
  REQUIRE_THROWS_AS(m.evaluate(std::span<const double>(bad)), be::DomainError);
}

TEST_CASE("random cosine features are deterministic in the seed") {
  FeatureMap a = FeatureMap::random_cosine(6, 3, 2024);
  FeatureMap b = FeatureMap::random_cosine(6, 3, 2024);
  FeatureMap c = FeatureMap::random_cosine(6, 3, 2025);
  std::vector<double> x = {0.3, -0.7, 1.1};
  std::vector<double> fa = a.evaluate(std::span<const double>(x));
  std::vector<double> fb = b.evaluate(std::span<const double>(x));
  std::vector<double> fc = c.evaluate(std::span<const double>(x));
  REQUIRE(fa == fb);
  REQUIRE(fa != fc);
}

TEST_CASE("random cosine outputs stay in [-1, 1]") {
  FeatureMap m = FeatureMap::random_cosine(16, 4, 7);
  be::Rng rng(1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.next_double() * 10.0 - 5.0;
    for (double f : m.evaluate(std::span<const double>(x))) {
      REQUIRE(f >= -1.0);
      REQUIRE(f <= 1.0);
    }
  }
}

TEST_CASE("random cosine matches its closed form") {
  FeatureMap m = FeatureMap::random_cosine(5, 2, 99);
  std::vector<double> x = {1.5, -0.25};
  std::vector<double> got = m.evaluate(std::span<const double>(x));
  const be::Mat& a = m.matrix();
  std::span<const double> b = m.offset();
  for (std::size_t i = 0; i < 5; ++i) {
    double want = std::cos(a(i, 0) * x[0] + a(i, 1) * x[1] + b[i]);
    REQUIRE(got[i] == Catch::Approx(want).margin(1e-15));
  }
}

TEST_CASE("feature kind round-trips through names") {
  REQUIRE(be::to_string(FeatureKind::one_hot) == "onehot");
  REQUIRE(be::to_string(FeatureKind::random_cosine) == "random_cosine");
  REQUIRE(be::to_string(FeatureKind::identity) == "identity");
}

TEST_CASE("one-hot map refuses vector input and vice versa") {
  FeatureMap oh = FeatureMap::one_hot(2);
  std::vector<double> x = {1.0, 0.0};
  REQUIRE_THROWS_AS(oh.evaluate(std::span<const double>(x)), be::DomainError);
  FeatureMap id = FeatureMap::identity(2);
  REQUIRE_THROWS_AS(id.evaluate(std::size_t{0}), be::DomainError);
}
