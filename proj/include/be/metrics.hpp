#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "be/errors.hpp"

namespace be {

// One record per environment step across the whole deployment. Coverage
// columns are cumulative over every state visited so far; goals and regions
// are cumulative distinct counts ("at least once" semantics, never
// per-episode).
struct StepRecord {
  std::size_t step = 0;
  std::size_t episode = 0;
  int state = 0;
  int action = 0;
  double coverage = 0.0;
  double coverage_beta = 0.0;
  std::size_t goals_reached = 0;
  std::size_t regions_reached = 0;
};

struct MetricsLog {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<StepRecord> records;
  std::size_t support_violations = 0;

  std::size_t final_goals() const {
    return records.empty() ? 0 : records.back().goals_reached;
  }
  std::size_t final_regions() const {
    return records.empty() ? 0 : records.back().regions_reached;
  }
  double final_coverage() const {
    return records.empty() ? 0.0 : records.back().coverage;
  }
};

// Fixed-precision float formatting for file output: 12 significant digits,
// enough to compare runs while absorbing platform FMA differences.
inline std::string format_g12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_metrics_csv(std::ostream& out, const MetricsLog& log) {
  out << "step,episode,state,action,coverage,coverage_beta,goals_reached,"
         "regions_reached\n";
  for (const auto& r : log.records) {
    out << r.step << "," << r.episode << "," << r.state << "," << r.action
        << "," << format_g12(r.coverage) << "," << format_g12(r.coverage_beta)
        << "," << r.goals_reached << "," << r.regions_reached << "\n";
  }
}

inline void write_metrics_csv_file(const std::string& path,
                                   const MetricsLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_metrics_csv: cannot open " + path);
  write_metrics_csv(out, log);
  if (!out) throw ConfigError("write_metrics_csv: write failed for " + path);
}

}  // namespace be
