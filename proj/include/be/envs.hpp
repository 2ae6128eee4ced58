#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "be/errors.hpp"
#include "be/features.hpp"
#include "be/mdp.hpp"
#include "be/rng.hpp"

namespace be {

// ---------------------------------------------------------------------------
// Two-goal tree: a root with two deterministic chains of equal depth, one
// per goal. The behavior policy branches once at the root (action 1 with
// probability p) and is committed thereafter; goals are absorbing.
// State layout: 0 = root, 1..depth = chain to g1, depth+1..2*depth = chain
// to g2. Horizon = depth, so every trajectory ends on a goal.
// ---------------------------------------------------------------------------

struct TwoGoalTree {
  TabularMdp mdp;
  BehaviorPolicy beta;
  std::size_t goal1;
  std::size_t goal2;
};

inline TwoGoalTree build_two_goal_tree(double p, std::size_t depth) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("build_two_goal_tree: p must lie strictly in (0, 1)");
  if (depth < 1) throw DomainError("build_two_goal_tree: depth must be >= 1");

  const std::size_t n = 1 + 2 * depth;
  const std::size_t g1 = depth;
  const std::size_t g2 = 2 * depth;
  auto point_mass = [n](std::size_t t) {
    std::vector<double> row(n, 0.0);
    row[t] = 1.0;
    return row;
  };

  std::vector<std::vector<std::vector<double>>> trans(n);
  for (std::size_t s = 0; s < n; ++s) trans[s].resize(2);
  trans[0][0] = point_mass(1);
  trans[0][1] = point_mass(depth + 1);
  for (std::size_t i = 1; i < depth; ++i) {
    trans[i][0] = point_mass(i + 1);
    trans[i][1] = point_mass(i + 1);
    trans[depth + i][0] = point_mass(depth + i + 1);
    trans[depth + i][1] = point_mass(depth + i + 1);
  }
  trans[g1][0] = point_mass(g1);
  trans[g1][1] = point_mass(g1);
  trans[g2][0] = point_mass(g2);
  trans[g2][1] = point_mass(g2);

  std::vector<bool> terminal(n, false);
  terminal[g1] = terminal[g2] = true;

  std::vector<std::vector<double>> beta_table(n, {1.0, 0.0});
  beta_table[0] = {1.0 - p, p};

  TabularMdp mdp(n, 2, std::move(trans), point_mass(0), depth,
                 std::move(terminal));
  return TwoGoalTree{std::move(mdp), BehaviorPolicy(std::move(beta_table)), g1,
                     g2};
}

// Directions for the two-goal tree: goal1 -> 0, goal2 -> 1, every other
// state shares direction 2.
inline FeatureMap two_goal_feature_map(const TwoGoalTree& env) {
  std::vector<std::size_t> dirs(env.mdp.n_states(), 2);
  dirs[env.goal1] = 0;
  dirs[env.goal2] = 1;
  return FeatureMap::one_hot_table(3, std::move(dirs));
}

// ---------------------------------------------------------------------------
// Random terminal tree: a complete branching^depth tree with seeded branch
// probabilities. Leaves are assigned (surjectively, via a seeded shuffle)
// to n_beta one-hot terminal directions e_0..e_{n_beta-1}; every interior
// state shares direction e_{n_beta}.
// ---------------------------------------------------------------------------

struct RandomTerminalTree {
  TabularMdp mdp;
  BehaviorPolicy beta;
  FeatureMap map;
  std::size_t n_beta;
  std::size_t depth;
  std::size_t branching;
  std::uint64_t seed;
  std::vector<std::size_t> leaves;            // state ids at level `depth`
  std::vector<double> leaf_probability;       // path-product per leaf
  double min_leaf_probability;
  double min_direction_weight;                // min over directions of summed leaf mass
};

inline RandomTerminalTree build_random_terminal_tree(std::size_t n_beta,
                                                     std::size_t depth,
                                                     std::size_t branching,
                                                     std::uint64_t seed) {
  if (n_beta < 1)
    throw DomainError("build_random_terminal_tree: n_beta must be >= 1");
  if (depth < 1 || branching < 1)
    throw DomainError("build_random_terminal_tree: depth and branching must be >= 1");
  std::size_t n_leaves = 1;
  for (std::size_t i = 0; i < depth; ++i) {
    n_leaves *= branching;
    if (n_leaves > 1000000)
      throw DomainError("build_random_terminal_tree: tree too large");
  }
  if (n_leaves < n_beta)
    throw DomainError(
        "build_random_terminal_tree: branching^depth < n_beta, infeasible");

  // Breadth-first ids: level l starts at (branching^l - 1)/(branching - 1).
  std::vector<std::size_t> level_start(depth + 2, 0);
  {
    std::size_t width = 1;
    for (std::size_t l = 0; l <= depth; ++l) {
      level_start[l + 1] = level_start[l] + width;
      width *= branching;
    }
  }
  const std::size_t n = level_start[depth + 1];
  const std::size_t first_leaf = level_start[depth];

  auto point_mass = [n](std::size_t t) {
    std::vector<double> row(n, 0.0);
    row[t] = 1.0;
    return row;
  };

  std::vector<std::vector<std::vector<double>>> trans(n);
  std::vector<bool> terminal(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    trans[s].resize(branching);
    if (s < first_leaf) {
      const std::size_t level = static_cast<std::size_t>(
          std::upper_bound(level_start.begin(), level_start.end(), s) -
          level_start.begin() - 1);
      const std::size_t offset = s - level_start[level];
      const std::size_t child0 = level_start[level + 1] + offset * branching;
      for (std::size_t a = 0; a < branching; ++a)
        trans[s][a] = point_mass(child0 + a);
    } else {
      terminal[s] = true;
      for (std::size_t a = 0; a < branching; ++a) trans[s][a] = point_mass(s);
    }
  }

  // Branch probabilities in [1,2) before normalization keep every branch
  // above 1/(2*branching).
  Rng rng(seed, 0xbeefull);
  std::vector<std::vector<double>> beta_table(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (s >= first_leaf) {
      beta_table[s].assign(branching, 0.0);
      beta_table[s][0] = 1.0;
      continue;
    }
    std::vector<double> w(branching);
    double total = 0.0;
    for (double& x : w) {
      x = 1.0 + rng.next_double();
      total += x;
    }
    for (double& x : w) x /= total;
    beta_table[s] = std::move(w);
  }

  // Leaf -> direction: seeded shuffle, then round-robin over directions so
  // every direction receives at least one leaf.
  std::vector<std::size_t> leaf_order(n_leaves);
  for (std::size_t i = 0; i < n_leaves; ++i) leaf_order[i] = i;
  for (std::size_t i = n_leaves; i > 1; --i)
    std::swap(leaf_order[i - 1], leaf_order[rng.uniform_int(static_cast<std::uint32_t>(i))]);

  std::vector<std::size_t> direction_of_state(n, n_beta);
  for (std::size_t i = 0; i < n_leaves; ++i)
    direction_of_state[first_leaf + leaf_order[i]] = i % n_beta;

  // Exact leaf path products from the beta table.
  std::vector<double> reach(n, 0.0);
  reach[0] = 1.0;
  for (std::size_t s = 0; s < first_leaf; ++s) {
    const std::size_t level = static_cast<std::size_t>(
        std::upper_bound(level_start.begin(), level_start.end(), s) -
        level_start.begin() - 1);
    const std::size_t offset = s - level_start[level];
    const std::size_t child0 = level_start[level + 1] + offset * branching;
    for (std::size_t a = 0; a < branching; ++a)
      reach[child0 + a] += reach[s] * beta_table[s][a];
  }

  std::vector<std::size_t> leaves(n_leaves);
  std::vector<double> leaf_prob(n_leaves);
  double min_leaf = 1.0;
  std::vector<double> dir_weight(n_beta, 0.0);
  for (std::size_t i = 0; i < n_leaves; ++i) {
    leaves[i] = first_leaf + i;
    leaf_prob[i] = reach[first_leaf + i];
    min_leaf = std::min(min_leaf, leaf_prob[i]);
    dir_weight[direction_of_state[first_leaf + i]] += leaf_prob[i];
  }
  const double min_dir = *std::min_element(dir_weight.begin(), dir_weight.end());

  TabularMdp mdp(n, branching, std::move(trans), point_mass(0), depth,
                 std::move(terminal));
  FeatureMap map = FeatureMap::one_hot_table(n_beta + 1,
                                             std::move(direction_of_state));
  return RandomTerminalTree{std::move(mdp),
                            BehaviorPolicy(std::move(beta_table)),
                            std::move(map),
                            n_beta,
                            depth,
                            branching,
                            seed,
                            std::move(leaves),
                            std::move(leaf_prob),
                            min_leaf,
                            min_dir};
}

// ---------------------------------------------------------------------------
// Grid maze. Text layout: '#' wall, '.' free, 'S' start, 'G' goal, digits =
// shared region ids. Free cells become states in row-major order; moves are
// 4-connected (0 up, 1 down, 2 left, 3 right) with blocked moves self-
// looping. Goal cells are absorbing. Demonstrations commit to one goal per
// trajectory (goal drawn from the configured weights) and follow a dithered
// shortest-path policy toward it; the returned BehaviorPolicy is the
// per-state mixture of those committed policies, whose support is the union
// of theirs.
// ---------------------------------------------------------------------------

struct MazeSpec {
  std::vector<std::string> lines;
  std::vector<double> goal_weights;  // empty = uniform over goals
  double dither = 0.1;               // per-step probability of a uniform action
  std::size_t horizon = 40;
};

struct GridMaze {
  TabularMdp mdp;
  BehaviorPolicy beta;               // per-state mixture of committed policies
  FeatureMap map;                    // one-hot over free cells
  std::vector<int> regions;          // region id per state
  std::size_t n_regions;
  std::size_t start_state;
  std::vector<std::size_t> goal_states;
  std::vector<double> goal_weights;  // normalized
  double dither;
  std::size_t width;
  std::size_t height;
  std::vector<std::vector<std::vector<double>>> committed;  // [goal][state] -> action dist
};

inline GridMaze build_grid_maze(const MazeSpec& spec) {
  const auto& lines = spec.lines;
  if (lines.empty()) throw DomainError("build_grid_maze: empty layout");
  const std::size_t height = lines.size();
  const std::size_t width = lines[0].size();
  if (width == 0) throw DomainError("build_grid_maze: empty layout row");
  for (const auto& row : lines)
    if (row.size() != width)
      throw DomainError("build_grid_maze: ragged layout rows");

  constexpr std::size_t kNoState = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> state_of_cell(width * height, kNoState);
  std::vector<std::size_t> cell_of_state;
  std::vector<int> regions;
  std::vector<std::size_t> goal_states;
  std::size_t start_state = kNoState;
  bool any_digit = false;
  for (const auto& row : lines)
    for (char c : row)
      if (c >= '0' && c <= '9') any_digit = true;

  int next_region = any_digit ? 10 : 0;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const char ch = lines[r][c];
      if (ch == '#') continue;
      if (ch != '.' && ch != 'S' && ch != 'G' && !(ch >= '0' && ch <= '9'))
        throw DomainError(std::string("build_grid_maze: invalid layout char '") +
                          ch + "'");
      const std::size_t sid = cell_of_state.size();
      state_of_cell[r * width + c] = sid;
      cell_of_state.push_back(r * width + c);
      regions.push_back(ch >= '0' && ch <= '9' ? ch - '0' : next_region++);
      if (ch == 'S') {
        if (start_state != kNoState)
          throw DomainError("build_grid_maze: multiple start cells");
        start_state = sid;
      }
      if (ch == 'G') goal_states.push_back(sid);
    }
  }
  if (start_state == kNoState)
    throw DomainError("build_grid_maze: no start cell");
  const std::size_t n = cell_of_state.size();

  std::vector<int> distinct = regions;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const std::size_t n_regions = distinct.size();

  std::vector<bool> is_goal(n, false);
  for (std::size_t g : goal_states) is_goal[g] = true;

  // Successor table on the full free-cell graph; blocked moves self-loop.
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  std::vector<std::size_t> succ(n * 4);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t cell = cell_of_state[s];
    const int r = static_cast<int>(cell / width);
    const int c = static_cast<int>(cell % width);
    for (std::size_t a = 0; a < 4; ++a) {
      const int nr = r + dr[a];
      const int nc = c + dc[a];
      std::size_t target = s;
      if (nr >= 0 && nr < static_cast<int>(height) && nc >= 0 &&
          nc < static_cast<int>(width)) {
        const std::size_t t = state_of_cell[nr * width + nc];
        if (t != kNoState) target = t;
      }
      succ[s * 4 + a] = is_goal[s] ? s : target;
    }
  }

  auto point_mass = [n](std::size_t t) {
    std::vector<double> row(n, 0.0);
    row[t] = 1.0;
    return row;
  };
  std::vector<std::vector<std::vector<double>>> trans(n);
  for (std::size_t s = 0; s < n; ++s) {
    trans[s].resize(4);
    for (std::size_t a = 0; a < 4; ++a) trans[s][a] = point_mass(succ[s * 4 + a]);
  }
  std::vector<bool> terminal(n, false);
  for (std::size_t g : goal_states) terminal[g] = true;

  std::vector<double> weights = spec.goal_weights;
  if (goal_states.empty() && !weights.empty())
    throw DomainError("build_grid_maze: goal_weights given but layout has no goals");
  if (!goal_states.empty()) {
    if (weights.empty()) weights.assign(goal_states.size(), 1.0);
    if (weights.size() != goal_states.size())
      throw DomainError("build_grid_maze: goal_weights length != number of goals");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0))
        throw DomainError("build_grid_maze: negative goal weight");
      total += w;
    }
    if (!(total > 0.0))
      throw DomainError("build_grid_maze: goal weights sum to zero");
    for (double& w : weights) w /= total;
  }
  if (!(spec.dither >= 0.0 && spec.dither <= 1.0))
    throw DomainError("build_grid_maze: dither must lie in [0, 1]");

  // Committed policy per goal: BFS distances on the graph with the other
  // goals removed, greedy descent with dither. Rows at goal cells are point
  // masses on action 0 (the cell is absorbing regardless).
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::vector<double>>> committed;
  for (std::size_t gi = 0; gi < goal_states.size(); ++gi) {
    const std::size_t goal = goal_states[gi];
    std::vector<std::size_t> dist(n, kInf);
    std::deque<std::size_t> queue;
    dist[goal] = 0;
    queue.push_back(goal);
    while (!queue.empty()) {
      const std::size_t s = queue.front();
      queue.pop_front();
      // Expand predecessors: any free neighbor t (not another goal) with a
      // move into s.
      const std::size_t cell = cell_of_state[s];
      const int r = static_cast<int>(cell / width);
      const int c = static_cast<int>(cell % width);
      for (std::size_t a = 0; a < 4; ++a) {
        const int nr = r + dr[a];
        const int nc = c + dc[a];
        if (nr < 0 || nr >= static_cast<int>(height) || nc < 0 ||
            nc >= static_cast<int>(width))
          continue;
        const std::size_t t = state_of_cell[nr * width + nc];
        if (t == kNoState || dist[t] != kInf) continue;
        if (is_goal[t] && t != goal) continue;
        dist[t] = dist[s] + 1;
        queue.push_back(t);
      }
    }
    if (weights[gi] > 0.0 && dist[start_state] == kInf)
      throw DomainError("build_grid_maze: goal " + std::to_string(gi) +
                        " unreachable from start");

    std::vector<std::vector<double>> table(n);
    for (std::size_t s = 0; s < n; ++s) {
      if (is_goal[s]) {
        table[s] = {1.0, 0.0, 0.0, 0.0};
        continue;
      }
      if (dist[s] == kInf) {
        table[s] = {0.25, 0.25, 0.25, 0.25};
        continue;
      }
      std::size_t best = kInf;
      for (std::size_t a = 0; a < 4; ++a) {
        const std::size_t t = succ[s * 4 + a];
        const std::size_t dt = (is_goal[t] && t != goal) ? kInf : dist[t];
        best = std::min(best, dt);
      }
      std::vector<bool> greedy(4, false);
      std::size_t n_greedy = 0;
      for (std::size_t a = 0; a < 4; ++a) {
        const std::size_t t = succ[s * 4 + a];
        const std::size_t dt = (is_goal[t] && t != goal) ? kInf : dist[t];
        if (dt == best) {
          greedy[a] = true;
          ++n_greedy;
        }
      }
      table[s].assign(4, spec.dither / 4.0);
      for (std::size_t a = 0; a < 4; ++a)
        if (greedy[a])
          table[s][a] += (1.0 - spec.dither) / static_cast<double>(n_greedy);
    }
    committed.push_back(std::move(table));
  }

  std::vector<std::vector<double>> beta_table(n);
  if (goal_states.empty()) {
    for (std::size_t s = 0; s < n; ++s) beta_table[s].assign(4, 0.25);
  } else {
    for (std::size_t s = 0; s < n; ++s) {
      beta_table[s].assign(4, 0.0);
      for (std::size_t gi = 0; gi < goal_states.size(); ++gi)
        for (std::size_t a = 0; a < 4; ++a)
          beta_table[s][a] += weights[gi] * committed[gi][s][a];
    }
  }

  TabularMdp mdp(n, 4, std::move(trans), point_mass(start_state), spec.horizon,
                 std::move(terminal));
  return GridMaze{std::move(mdp),
                  BehaviorPolicy(std::move(beta_table)),
                  FeatureMap::one_hot(n),
                  std::move(regions),
                  n_regions,
                  start_state,
                  std::move(goal_states),
                  std::move(weights),
                  spec.dither,
                  width,
                  height,
                  std::move(committed)};
}

inline GridMaze build_grid_maze_from_text(const std::string& text,
                                          std::vector<double> goal_weights = {},
                                          double dither = 0.1,
                                          std::size_t horizon = 40) {
  MazeSpec spec;
  spec.goal_weights = std::move(goal_weights);
  spec.dither = dither;
  spec.horizon = horizon;
  std::string line;
  for (char c : text) {
    if (c == '\n') {
      if (!line.empty()) spec.lines.push_back(line);
      line.clear();
    } else if (c != '\r') {
      line.push_back(c);
    }
  }
  if (!line.empty()) spec.lines.push_back(line);
  return build_grid_maze(spec);
}

// Demonstrations from the committed-goal mixture: each trajectory draws a
// goal from the weights, then rolls out that goal's dithered shortest-path
// policy. The task label records the committed goal. Goal-less mazes fall
// back to uniform random-walk demonstrations.
inline DemoDataset generate_maze_dataset(const GridMaze& maze,
                                         std::size_t n_traj, Rng& rng) {
  if (n_traj == 0) throw DomainError("generate_maze_dataset: n_traj must be >= 1");
  DemoDataset data;
  data.mdp_fingerprint = maze.mdp.fingerprint();
  data.seed = rng.seed();
  data.horizon = maze.mdp.horizon();
  data.trajectories.reserve(n_traj);
  for (std::size_t t = 0; t < n_traj; ++t) {
    Rng child = rng.split(t);
    if (maze.goal_states.empty()) {
      data.trajectories.push_back(
          rollout(maze.mdp, sampler_from(maze.beta, child), child));
      continue;
    }
    const std::size_t goal = child.sample_discrete(maze.goal_weights);
    const auto& table = maze.committed[goal];
    ActionSampler sampler = [&table, &child](int state, int,
                                             const RolloutContext&) {
      return static_cast<int>(
          child.sample_discrete(table[static_cast<std::size_t>(state)]));
    };
    Trajectory traj = rollout(maze.mdp, sampler, child);
    traj.task_label = static_cast<int>(goal);
    data.trajectories.push_back(std::move(traj));
  }
  return data;
}

}  // namespace be
