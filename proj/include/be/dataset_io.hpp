#pragma once

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "be/errors.hpp"
#include "be/mdp.hpp"

namespace be {

// Line-delimited dataset format: a header object with the generating MDP's
// fingerprint, the RNG seed, and the horizon, then one object per trajectory
// with integer state and action lists (plus "task" when labeled). All values
// are integers or strings, so round-trips are bit-exact.

inline void write_dataset(std::ostream& out, const DemoDataset& data) {
  nlohmann::ordered_json header;
  header["mdp_fingerprint"] = data.mdp_fingerprint;
  header["seed"] = data.seed;
  header["horizon"] = data.horizon;
  out << header.dump() << "\n";
  for (const auto& traj : data.trajectories) {
    nlohmann::ordered_json line;
    line["states"] = traj.states;
    line["actions"] = traj.actions;
    if (traj.task_label) line["task"] = *traj.task_label;
    out << line.dump() << "\n";
  }
}

inline void write_dataset_file(const std::string& path,
                               const DemoDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_dataset: cannot open " + path);
  write_dataset(out, data);
  if (!out) throw ConfigError("write_dataset: write failed for " + path);
}

inline DemoDataset read_dataset(std::istream& in) {
  DemoDataset data;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::ordered_json obj;
    try {
      obj = nlohmann::ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw DomainError("read_dataset: line " + std::to_string(line_no) +
                        ": " + e.what());
    }
    if (!have_header) {
      if (!obj.contains("mdp_fingerprint") || !obj.contains("seed") ||
          !obj.contains("horizon"))
        throw DomainError("read_dataset: line 1 is not a dataset header");
      data.mdp_fingerprint = obj["mdp_fingerprint"].get<std::string>();
      data.seed = obj["seed"].get<std::uint64_t>();
      data.horizon = obj["horizon"].get<std::size_t>();
      have_header = true;
      continue;
    }
    if (!obj.contains("states") || !obj.contains("actions"))
      throw DomainError("read_dataset: line " + std::to_string(line_no) +
                        " missing states/actions");
    Trajectory traj;
    traj.states = obj["states"].get<std::vector<int>>();
    traj.actions = obj["actions"].get<std::vector<int>>();
    if (obj.contains("task")) traj.task_label = obj["task"].get<int>();
    data.trajectories.push_back(std::move(traj));
  }
  if (!have_header) throw DomainError("read_dataset: empty input");
  return data;
}

inline DemoDataset read_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_dataset: cannot open " + path);
  return read_dataset(in);
}

inline std::string dataset_to_string(const DemoDataset& data) {
  std::ostringstream out;
  write_dataset(out, data);
  return out.str();
}

}  // namespace be
