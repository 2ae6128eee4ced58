#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "be/coverage.hpp"
#include "be/errors.hpp"
#include "be/features.hpp"
#include "be/history.hpp"
#include "be/mdp.hpp"
#include "be/rng.hpp"

namespace be {

// Deployment-time exploratoriness setting: either the top bucket (default),
// an explicit bucket index, or a raw coverage value pushed through the
// trained bucketizer.
struct ExpSetting {
  enum class Kind { max_bucket, bucket_index, raw_value };
  Kind kind = Kind::max_bucket;
  std::size_t index = 0;
  double raw = 0.0;

  static ExpSetting max() { return {}; }
  static ExpSetting bucket(std::size_t i) {
    return {Kind::bucket_index, i, 0.0};
  }
  static ExpSetting value(double v) { return {Kind::raw_value, 0, v}; }
};

struct PolicyKey {
  int state = 0;
  int task = -1;  // -1 when the policy is not task-conditioned
  std::size_t bucket = 0;
  HistorySummary summary;

  auto operator<=>(const PolicyKey&) const = default;
};

inline std::vector<double> normalize_counts(std::span<const std::uint64_t> counts,
                                            double alpha) {
  double total = 0.0;
  for (std::uint64_t c : counts) total += static_cast<double>(c);
  total += alpha * static_cast<double>(counts.size());
  std::vector<double> probs(counts.size());
  for (std::size_t a = 0; a < counts.size(); ++a)
    probs[a] = (static_cast<double>(counts[a]) + alpha) / total;
  return probs;
}

// Tabular conditional policy over (state, history summary, coverage bucket
// [, task]) keys, with a plain per-state fallback head. Counts are integers;
// rows normalize with Laplace pseudo-count alpha at query time. The query
// chain on a missing key: same key with an empty summary, then the fallback
// head, then uniform over the behavior policy's supported actions.
class ConditionalPolicy {
 public:
  ConditionalPolicy(HistoryMode history_mode, int cap,
                    std::size_t context_length, std::size_t n_actions,
                    double alpha, bool task_conditioned,
                    CoverageBucket bucketizer)
      : history_mode_(history_mode),
        cap_(cap),
        context_length_(context_length),
        n_actions_(n_actions),
        alpha_(alpha),
        task_conditioned_(task_conditioned),
        bucketizer_(std::move(bucketizer)) {
    if (n_actions_ == 0)
      throw DomainError("ConditionalPolicy: n_actions must be positive");
    if (!(alpha_ >= 0.0))
      throw DomainError("ConditionalPolicy: alpha must be non-negative");
  }

  HistoryMode history_mode() const { return history_mode_; }
  std::size_t n_actions() const { return n_actions_; }
  double alpha() const { return alpha_; }
  bool task_conditioned() const { return task_conditioned_; }
  const CoverageBucket& bucketizer() const { return bucketizer_; }

  SummaryParams summary_params(const FeatureMap* map) const {
    SummaryParams p;
    p.map = map;
    p.cap = cap_;
    p.context_length = context_length_;
    return p;
  }

  void set_support(std::vector<std::vector<bool>> masks) {
    support_ = std::move(masks);
  }
  const std::vector<std::vector<bool>>& support() const { return support_; }

  void increment(const PolicyKey& key, int action) {
    auto& row = table_[key];
    if (row.empty()) row.assign(n_actions_, 0);
    ++row[static_cast<std::size_t>(action)];
  }

  void increment_fallback(int state, int task, int action) {
    auto& row = bc_[{state, task}];
    if (row.empty()) row.assign(n_actions_, 0);
    ++row[static_cast<std::size_t>(action)];
  }

  std::size_t resolve_bucket(const ExpSetting& exp) const {
    switch (exp.kind) {
      case ExpSetting::Kind::max_bucket:
        return bucketizer_.max_bucket();
      case ExpSetting::Kind::bucket_index:
        return std::min(exp.index, bucketizer_.max_bucket());
      case ExpSetting::Kind::raw_value:
        return bucketizer_.bucket(exp.raw);
    }
    return bucketizer_.max_bucket();
  }

  // Fallback-head row: plain demonstrated-action frequencies at the state.
  std::vector<double> bc_row(int state, int task = -1) const {
    auto it = bc_.find({state, task});
    if (it != bc_.end()) return normalize_counts(it->second, alpha_);
    return support_uniform(state);
  }

  std::vector<double> action_distribution(int state,
                                          const HistorySummary& summary,
                                          std::size_t bucket,
                                          int task = -1) const {
    auto it = table_.find(PolicyKey{state, task, bucket, summary});
    if (it != table_.end()) return normalize_counts(it->second, alpha_);
    if (summary.mode != HistoryMode::empty) {
      auto it2 = table_.find(
          PolicyKey{state, task, bucket, HistorySummary{HistoryMode::empty, {}}});
      if (it2 != table_.end()) return normalize_counts(it2->second, alpha_);
    }
    return bc_row(state, task);
  }

  int sample(int state, const HistorySummary& summary, std::size_t bucket,
             Rng& rng, int task = -1) const {
    const std::vector<double> dist =
        action_distribution(state, summary, bucket, task);
    return static_cast<int>(rng.sample_discrete(dist));
  }

  // One-shot form: summarize the raw history (seeded downsampling where the
  // mode calls for it), resolve the exp setting, query, sample.
  int sample_action(int state, std::span<const int> history,
                    const ExpSetting& exp, const FeatureMap* map, Rng& rng,
                    int task = -1) const {
    const HistorySummary summary =
        summarize_history(history_mode_, history, summary_params(map), rng);
    return sample(state, summary, resolve_bucket(exp), rng, task);
  }

  const std::map<PolicyKey, std::vector<std::uint64_t>>& table() const {
    return table_;
  }
  const std::map<std::pair<int, int>, std::vector<std::uint64_t>>& fallback()
      const {
    return bc_;
  }

  void save(std::ostream& out) const {
    char buf[64];
    out << "be-policy v1\n";
    out << "history_mode " << to_string(history_mode_) << "\n";
    out << "cap " << cap_ << "\n";
    out << "context_length " << context_length_ << "\n";
    out << "n_actions " << n_actions_ << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", alpha_);
    out << "alpha " << buf << "\n";
    out << "task_conditioned " << (task_conditioned_ ? 1 : 0) << "\n";
    out << "edges " << bucketizer_.edges().size();
    for (double e : bucketizer_.edges()) {
      std::snprintf(buf, sizeof(buf), "%.17g", e);
      out << " " << buf;
    }
    out << "\n";
    out << "support " << support_.size() << "\n";
    for (std::size_t s = 0; s < support_.size(); ++s) {
      out << s << " ";
      for (bool b : support_[s]) out << (b ? '1' : '0');
      out << "\n";
    }
    out << "table " << table_.size() << "\n";
    for (const auto& [key, counts] : table_) {
      out << key.state << " " << key.task << " " << key.bucket << " "
          << to_string(key.summary.mode) << " " << key.summary.payload.size();
      for (int v : key.summary.payload) out << " " << v;
      for (std::uint64_t c : counts) out << " " << c;
      out << "\n";
    }
    out << "fallback " << bc_.size() << "\n";
    for (const auto& [key, counts] : bc_) {
      out << key.first << " " << key.second;
      for (std::uint64_t c : counts) out << " " << c;
      out << "\n";
    }
    out << "end\n";
  }

  static ConditionalPolicy load(std::istream& in) {
    auto expect = [&in](const char* tag) {
      std::string word;
      in >> word;
      if (word != tag)
        throw DomainError(std::string("policy load: expected '") + tag +
                          "', got '" + word + "'");
    };
    expect("be-policy");
    expect("v1");
    expect("history_mode");
    std::string mode_str;
    in >> mode_str;
    expect("cap");
    int cap;
    in >> cap;
    expect("context_length");
    std::size_t context_length;
    in >> context_length;
    expect("n_actions");
    std::size_t n_actions;
    in >> n_actions;
    expect("alpha");
    double alpha;
    in >> alpha;
    expect("task_conditioned");
    int task_flag;
    in >> task_flag;
    expect("edges");
    std::size_t n_edges;
    in >> n_edges;
    std::vector<double> edges(n_edges);
    for (double& e : edges) in >> e;
    expect("support");
    std::size_t n_support;
    in >> n_support;
    std::vector<std::vector<bool>> support(n_support);
    for (std::size_t i = 0; i < n_support; ++i) {
      std::size_t idx;
      std::string mask;
      in >> idx >> mask;
      if (idx != i) throw DomainError("policy load: support rows out of order");
      support[i].resize(mask.size());
      for (std::size_t a = 0; a < mask.size(); ++a)
        support[i][a] = mask[a] == '1';
    }
    ConditionalPolicy policy(history_mode_from_string(mode_str), cap,
                             context_length, n_actions, alpha, task_flag != 0,
                             CoverageBucket(std::move(edges)));
    policy.set_support(std::move(support));
    expect("table");
    std::size_t n_rows;
    in >> n_rows;
    for (std::size_t i = 0; i < n_rows; ++i) {
      PolicyKey key;
      std::string row_mode;
      std::size_t payload_len;
      in >> key.state >> key.task >> key.bucket >> row_mode >> payload_len;
      key.summary.mode = history_mode_from_string(row_mode);
      key.summary.payload.resize(payload_len);
      for (int& v : key.summary.payload) in >> v;
      std::vector<std::uint64_t> counts(n_actions);
      for (std::uint64_t& c : counts) in >> c;
      policy.table_[key] = std::move(counts);
    }
    expect("fallback");
    std::size_t n_bc;
    in >> n_bc;
    for (std::size_t i = 0; i < n_bc; ++i) {
      int state, task;
      in >> state >> task;
      std::vector<std::uint64_t> counts(n_actions);
      for (std::uint64_t& c : counts) in >> c;
      policy.bc_[{state, task}] = std::move(counts);
    }
    expect("end");
    if (!in) throw DomainError("policy load: truncated or malformed input");
    return policy;
  }

 private:
  std::vector<double> support_uniform(int state) const {
    const std::size_t s = static_cast<std::size_t>(state);
    if (s < support_.size()) {
      std::size_t n_supported = 0;
      for (bool b : support_[s])
        if (b) ++n_supported;
      if (n_supported > 0) {
        std::vector<double> probs(n_actions_, 0.0);
        for (std::size_t a = 0; a < n_actions_; ++a)
          if (support_[s][a])
            probs[a] = 1.0 / static_cast<double>(n_supported);
        return probs;
      }
    }
    return std::vector<double>(n_actions_, 1.0 / static_cast<double>(n_actions_));
  }

  HistoryMode history_mode_;
  int cap_;
  std::size_t context_length_;
  std::size_t n_actions_;
  double alpha_;
  bool task_conditioned_;
  CoverageBucket bucketizer_;
  std::map<PolicyKey, std::vector<std::uint64_t>> table_;
  std::map<std::pair<int, int>, std::vector<std::uint64_t>> bc_;
  std::vector<std::vector<bool>> support_;
};

struct TrainConfig {
  HistoryMode history_mode = HistoryMode::feature_counts;
  int cap = 3;
  std::size_t context_length = 50;
  std::size_t max_buckets = 8;
  double alpha = 0.0;
  bool task_conditioned = false;
  const BehaviorPolicy* beta = nullptr;  // support masks come from here when set
  std::uint64_t seed = 0;
};

namespace detail {

// Coverage of (history states ∪ trajectory suffix from step k), with a
// one-hot fast path through the count formula. The general path rebuilds a
// matrix accumulator per label.
class LabelScratch {
 public:
  LabelScratch(const FeatureMap& map, double lambda)
      : map_(map), lambda_(lambda), one_hot_(map.is_one_hot()) {}

  double label(std::span<const int> history, std::span<const int> traj_states,
               std::size_t k) const {
    if (one_hot_) {
      OneHotCoverage acc(map_.dim(), lambda_);
      for (int s : history)
        acc.add_direction(map_.direction(static_cast<std::size_t>(s)));
      for (std::size_t i = k; i < traj_states.size(); ++i)
        acc.add_direction(
            map_.direction(static_cast<std::size_t>(traj_states[i])));
      return acc.coverage();
    }
    CoverageAccumulator acc(map_.dim(), lambda_);
    for (int s : history) acc.add_state(map_, static_cast<std::size_t>(s));
    for (std::size_t i = k; i < traj_states.size(); ++i)
      acc.add_state(map_, static_cast<std::size_t>(traj_states[i]));
    return acc.coverage();
  }

 private:
  const FeatureMap& map_;
  double lambda_;
  bool one_hot_;
};

}  // namespace detail

// Conditional maximum-likelihood training: for every trajectory step and M
// histories drawn uniformly from the training trajectories, label the step
// with the coverage of (history ∪ suffix), bucketize the labels by their
// empirical quantiles (two passes: labels first, then counting), and count
// demonstrated actions per (state, summary, bucket[, task]) key. Every
// sample also feeds the Empty-summary key at the same bucket, giving the
// first fallback level; the fallback head gets one count per step.
inline ConditionalPolicy train_be(const DemoDataset& dataset,
                                  const FeatureMap& map, double lambda,
                                  std::size_t samples_per_pair,
                                  const TrainConfig& config) {
  if (dataset.trajectories.empty()) throw DomainError("train_be: empty dataset");
  if (samples_per_pair == 0) throw DomainError("train_be: M must be >= 1");
  const std::size_t n_traj = dataset.trajectories.size();

  std::size_t n_actions = 0;
  for (const auto& traj : dataset.trajectories) {
    if (config.task_conditioned && !traj.task_label)
      throw DomainError("train_be: task-conditioned training needs labels on every trajectory");
    for (int a : traj.actions)
      n_actions = std::max(n_actions, static_cast<std::size_t>(a) + 1);
  }
  if (config.beta != nullptr && config.beta->n_states() > 0)
    n_actions = std::max(n_actions, config.beta->row(0).size());

  const detail::LabelScratch scratch(map, lambda);
  SummaryParams params;
  params.map = &map;
  params.cap = config.cap;
  params.context_length = config.context_length;

  // Pass 1: draw histories, summarize them, compute labels.
  Rng rng(config.seed, 0x7ea1u);
  struct Sample {
    std::uint32_t traj;
    std::uint16_t step;
    HistorySummary summary;
    double label;
  };
  std::vector<Sample> samples;
  std::vector<double> labels;
  samples.reserve(n_traj);
  for (std::size_t t = 0; t < n_traj; ++t) {
    const auto& traj = dataset.trajectories[t];
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      for (std::size_t m = 0; m < samples_per_pair; ++m) {
        const std::size_t h_index =
            rng.uniform_int(static_cast<std::uint32_t>(n_traj));
        const auto& h = dataset.trajectories[h_index].states;
        HistorySummary summary =
            summarize_history(config.history_mode, h, params, rng);
        const double label = scratch.label(h, traj.states, k);
        labels.push_back(label);
        samples.push_back(Sample{static_cast<std::uint32_t>(t),
                                 static_cast<std::uint16_t>(k),
                                 std::move(summary), label});
      }
    }
  }

  CoverageBucket bucketizer = CoverageBucket::fit(labels, config.max_buckets);
  ConditionalPolicy policy(config.history_mode, config.cap,
                           config.context_length, n_actions, config.alpha,
                           config.task_conditioned, std::move(bucketizer));

  // Pass 2: count.
  for (const auto& sample : samples) {
    const auto& traj = dataset.trajectories[sample.traj];
    const int state = traj.states[sample.step];
    const int action = traj.actions[sample.step];
    const int task =
        config.task_conditioned ? *traj.task_label : -1;
    const std::size_t bucket = policy.bucketizer().bucket(sample.label);
    policy.increment(PolicyKey{state, task, bucket, sample.summary}, action);
    if (sample.summary.mode != HistoryMode::empty)
      policy.increment(
          PolicyKey{state, task, bucket, HistorySummary{HistoryMode::empty, {}}},
          action);
  }
  for (const auto& traj : dataset.trajectories) {
    const int task = config.task_conditioned ? *traj.task_label : -1;
    for (std::size_t k = 0; k < traj.states.size(); ++k)
      policy.increment_fallback(traj.states[k], task, traj.actions[k]);
  }

  if (config.beta != nullptr) {
    std::vector<std::vector<bool>> masks;
    masks.reserve(config.beta->n_states());
    for (std::size_t s = 0; s < config.beta->n_states(); ++s)
      masks.push_back(config.beta->support_mask(s));
    policy.set_support(std::move(masks));
  } else {
    // Demonstrated actions are a subset of the behavior policy's support.
    std::size_t n_states = 0;
    for (const auto& traj : dataset.trajectories)
      for (int s : traj.states)
        n_states = std::max(n_states, static_cast<std::size_t>(s) + 1);
    std::vector<std::vector<bool>> masks(n_states,
                                         std::vector<bool>(n_actions, false));
    for (const auto& traj : dataset.trajectories)
      for (std::size_t k = 0; k < traj.states.size(); ++k)
        masks[static_cast<std::size_t>(traj.states[k])]
             [static_cast<std::size_t>(traj.actions[k])] = true;
    policy.set_support(std::move(masks));
  }
  return policy;
}

// Task-conditioned variant: identical training with the task label appended
// to every key.
inline ConditionalPolicy train_be_task(const DemoDataset& dataset,
                                       const FeatureMap& map, double lambda,
                                       std::size_t samples_per_pair,
                                       TrainConfig config) {
  config.task_conditioned = true;
  return train_be(dataset, map, lambda, samples_per_pair, config);
}

}  // namespace be
