#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "be/errors.hpp"
#include "be/features.hpp"
#include "be/rng.hpp"

namespace be {

// How a raw state history is summarized into a table key. FeatureCounts is
// the default: per-direction visit counts capped at a small constant, a
// sufficient statistic for coverage under one-hot features. DownsampledStates
// mirrors deployment-time context downsampling: a fixed-size multiset drawn
// uniformly from the history, resampled at each episode start.
enum class HistoryMode { feature_counts, downsampled_states, first_state_only, empty };

inline const char* to_string(HistoryMode m) {
  switch (m) {
    case HistoryMode::feature_counts: return "feature_counts";
    case HistoryMode::downsampled_states: return "downsampled_states";
    case HistoryMode::first_state_only: return "first_state_only";
    case HistoryMode::empty: return "empty";
  }
  return "?";
}

inline HistoryMode history_mode_from_string(const std::string& s) {
  if (s == "feature_counts") return HistoryMode::feature_counts;
  if (s == "downsampled_states") return HistoryMode::downsampled_states;
  if (s == "first_state_only") return HistoryMode::first_state_only;
  if (s == "empty") return HistoryMode::empty;
  throw ConfigError("unknown history mode: " + s);
}

struct HistorySummary {
  HistoryMode mode = HistoryMode::empty;
  std::vector<int> payload;

  auto operator<=>(const HistorySummary&) const = default;
};

struct SummaryParams {
  const FeatureMap* map = nullptr;  // required for feature_counts
  int cap = 3;                      // per-direction count cap
  std::size_t context_length = 50;  // downsampled multiset size
};

inline constexpr int kPadState = -1;

// Summarize a raw state history. The RNG is consumed only by
// downsampled_states; other modes are deterministic functions of the input.
inline HistorySummary summarize_history(HistoryMode mode,
                                        std::span<const int> history,
                                        const SummaryParams& params, Rng& rng) {
  HistorySummary out;
  out.mode = mode;
  switch (mode) {
    case HistoryMode::empty:
      return out;
    case HistoryMode::first_state_only:
      out.payload.push_back(history.empty() ? kPadState : history.front());
      return out;
    case HistoryMode::feature_counts: {
      if (params.map == nullptr || !params.map->is_one_hot())
        throw DomainError("feature_counts summary requires a one-hot feature map");
      out.payload.assign(params.map->dim(), 0);
      for (int s : history) {
        const std::size_t d = params.map->direction(static_cast<std::size_t>(s));
        if (out.payload[d] < params.cap) ++out.payload[d];
      }
      return out;
    }
    case HistoryMode::downsampled_states: {
      const std::size_t want = params.context_length;
      if (want == 0)
        throw DomainError("downsampled_states summary requires context_length >= 1");
      if (history.size() <= want) {
        out.payload.assign(history.begin(), history.end());
        while (out.payload.size() < want) out.payload.push_back(kPadState);
      } else {
        // Uniform subset without replacement via partial Fisher-Yates.
        std::vector<int> pool(history.begin(), history.end());
        for (std::size_t i = 0; i < want; ++i) {
          const std::size_t j =
              i + rng.uniform_int(static_cast<std::uint32_t>(pool.size() - i));
          std::swap(pool[i], pool[j]);
        }
        out.payload.assign(pool.begin(), pool.begin() + static_cast<long>(want));
      }
      // Canonical multiset order.
      std::sort(out.payload.begin(), out.payload.end());
      return out;
    }
  }
  throw DomainError("summarize_history: unknown mode");
}

// Quantile bucketizer for coverage-to-go labels. Edges are label quantiles
// with duplicates collapsed, so heavily tied label sets yield fewer than the
// requested number of buckets; edges are strictly increasing and bucket(v)
// is monotone in v, clamped to [0, n_buckets-1].
class CoverageBucket {
 public:
  static CoverageBucket fit(std::vector<double> labels, std::size_t max_buckets) {
    if (labels.empty()) throw DomainError("CoverageBucket: no labels");
    if (max_buckets == 0)
      throw DomainError("CoverageBucket: need at least one bucket");
    for (double v : labels)
      if (!std::isfinite(v)) throw DomainError("CoverageBucket: non-finite label");
    std::sort(labels.begin(), labels.end());
    const std::size_t n = labels.size();
    std::vector<double> edges;
    for (std::size_t i = 0; i <= max_buckets; ++i) {
      const std::size_t idx = (n - 1) * i / max_buckets;
      const double v = labels[idx];
      if (edges.empty() || v > edges.back()) edges.push_back(v);
    }
    return CoverageBucket(std::move(edges));
  }

  explicit CoverageBucket(std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.empty()) throw DomainError("CoverageBucket: empty edge list");
    for (std::size_t i = 1; i < edges_.size(); ++i)
      if (!(edges_[i] > edges_[i - 1]))
        throw DomainError("CoverageBucket: edges must be strictly increasing");
  }

  std::size_t n_buckets() const {
    return edges_.size() <= 1 ? 1 : edges_.size() - 1;
  }

  std::size_t max_bucket() const { return n_buckets() - 1; }

  // Thresholds between buckets are the interior edges; a value equal to a
  // threshold lands in the upper bucket.
  std::size_t bucket(double v) const {
    if (edges_.size() <= 2) return 0;
    std::size_t b = 0;
    for (std::size_t i = 1; i + 1 < edges_.size(); ++i)
      if (edges_[i] <= v) ++b;
    return b;
  }

  const std::vector<double>& edges() const { return edges_; }

 private:
  std::vector<double> edges_;
};

}  // namespace be
