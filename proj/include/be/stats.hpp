#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "be/errors.hpp"

namespace be {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean: empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Unbiased sample variance (n-1 denominator).
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw DomainError("sample_variance: need n >= 2");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double standard_error(std::span<const double> xs) {
  return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

namespace detail {

// Continued-fraction core of the regularized incomplete beta (Lentz's
// method, the standard modified form).
inline double beta_cont_frac(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw DomainError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0))
    throw DomainError("incomplete_beta: a and b must be positive");
  if (x < 0.0 || x > 1.0) throw DomainError("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::beta_cont_frac(a, b, x) / a;
  return 1.0 - front * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

// CDF of Student's t with df degrees of freedom.
inline double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw DomainError("student_t_cdf: df must be positive");
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_one_sided = 1.0;  // H1: mean(a) > mean(b)
};

// Welch's unequal-variance t-test, one-sided against mean(a) > mean(b),
// with the Welch-Satterthwaite degrees of freedom.
inline WelchResult welch_one_sided(std::span<const double> a,
                                   std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw DomainError("welch_one_sided: need n >= 2 per sample");
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = sample_variance(a) / static_cast<double>(a.size());
  const double vb = sample_variance(b) / static_cast<double>(b.size());
  const double se2 = va + vb;
  if (!(se2 > 0.0)) {
    // Identical constant samples: no evidence either way.
    WelchResult r;
    r.t = ma > mb ? std::numeric_limits<double>::infinity()
                  : (ma < mb ? -std::numeric_limits<double>::infinity() : 0.0);
    r.df = static_cast<double>(a.size() + b.size() - 2);
    r.p_one_sided = ma > mb ? 0.0 : (ma < mb ? 1.0 : 0.5);
    return r;
  }
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / static_cast<double>(a.size() - 1) +
          vb * vb / static_cast<double>(b.size() - 1));
  r.p_one_sided = 1.0 - student_t_cdf(r.t, r.df);
  return r;
}

// Average ranks (ties share the mean of their rank range).
inline std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&xs](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank correlation: Pearson correlation of the average ranks.
inline double spearman_rho(std::span<const double> x,
                           std::span<const double> y) {
  if (x.size() != y.size())
    throw DomainError("spearman_rho: length mismatch");
  if (x.size() < 2) throw DomainError("spearman_rho: need n >= 2");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw DomainError("spearman_rho: a sample is constant");
  return sxy / std::sqrt(sxx * syy);
}

// Pearson chi-square goodness-of-fit statistic against expected counts.
inline double chi_square_statistic(std::span<const double> observed,
                                   std::span<const double> expected) {
  if (observed.size() != expected.size())
    throw DomainError("chi_square_statistic: length mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0))
      throw DomainError("chi_square_statistic: expected counts must be positive");
    const double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  return stat;
}

// Critical value of the chi-square distribution with 2 degrees of freedom at
// significance 0.01; df=2 has the closed form -2 ln(alpha).
inline constexpr double kChiSquareCritDf2Alpha01 = 9.21034037197618;

}  // namespace be
