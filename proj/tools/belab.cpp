// belab: experiment runner for coverage-conditioned policies on tabular MDPs.
//
// Subcommands: gen-data, train, deploy, calibrate, ablate, verify-prop1,
// compare. Each reads one TOML-style config (see configs/ and the README
// for the schema). All randomness derives from seeds in the config, so a
// run is reproducible byte-for-byte.
//
// Exit codes: 0 ok, 2 config error, 3 contract violation, 4 resource
// budget exceeded.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "be/baselines.hpp"
#include "be/config.hpp"
#include "be/coverage.hpp"
#include "be/dataset_io.hpp"
#include "be/envs.hpp"
#include "be/errors.hpp"
#include "be/history.hpp"
#include "be/metrics.hpp"
#include "be/online.hpp"
#include "be/policy.hpp"
#include "be/prop1.hpp"
#include "be/rng.hpp"
#include "be/stats.hpp"
#include "be/svg.hpp"

namespace {

// Per-subcommand RNG stream tags; they keep streams disjoint even when the
// same seed appears in several config sections.
constexpr std::uint64_t kStreamData = 0xda7a;
constexpr std::uint64_t kStreamDeploy = 0xde91;
constexpr std::uint64_t kStreamCalibrate = 0xca11;
constexpr std::uint64_t kStreamAblate = 0xab1a;
constexpr std::uint64_t kStreamProp1 = 0x9e01;
constexpr std::uint64_t kStreamCompare = 0xc09e;

struct LoadedConfig {
  be::ConfigTable table;
  std::string dir;  // directory of the config file, for bundled inputs
};

LoadedConfig load_config(const std::string& path) {
  be::ConfigTable table = be::ConfigTable::parse_file(path);
  return {std::move(table),
          std::filesystem::path(path).parent_path().string()};
}

// env.layout is resolved against the config file's directory so a config
// plus its maze text form a self-contained bundle. Every other path in a
// config is taken relative to the working directory.
std::string resolve_near_config(const LoadedConfig& cfg,
                                const std::string& rel) {
  std::filesystem::path p(rel);
  if (p.is_absolute() || cfg.dir.empty()) return rel;
  return (std::filesystem::path(cfg.dir) / p).string();
}

struct EnvSpec {
  std::string kind;
  std::string features;
  // two_goal
  double p = 0.0;
  std::int64_t depth = 0;
  // random_tree
  std::int64_t n_beta = 0;
  std::int64_t branching = 0;
  std::int64_t seed = 0;
  // grid_maze
  std::string layout;
  std::vector<double> goal_weights;
  double dither = 0.1;
  std::int64_t horizon = 40;
};

EnvSpec read_env_spec(be::ConfigReader& reader) {
  EnvSpec spec;
  spec.kind = reader.get_string("env.kind");
  spec.features = reader.get_string_or("env.features", "env");
  if (spec.kind == "two_goal") {
    spec.p = reader.get_double("env.p");
    spec.depth = reader.get_int("env.depth");
  } else if (spec.kind == "random_tree") {
    spec.n_beta = reader.get_int("env.n_beta");
    spec.depth = reader.get_int("env.depth");
    spec.branching = reader.get_int("env.branching");
    spec.seed = reader.get_int("env.seed");
  } else if (spec.kind == "grid_maze") {
    spec.layout = reader.get_string("env.layout");
    spec.goal_weights = reader.get_double_array_or("env.goal_weights", {});
    spec.dither = reader.get_double_or("env.dither", 0.1);
    spec.horizon = reader.get_int_or("env.horizon", 40);
  }
  return spec;
}

struct EnvBundle {
  std::optional<be::TwoGoalTree> two_goal;
  std::optional<be::RandomTerminalTree> tree;
  std::optional<be::GridMaze> maze;
  std::optional<be::FeatureMap> features;

  const be::TabularMdp& mdp() const {
    if (two_goal) return two_goal->mdp;
    if (tree) return tree->mdp;
    return maze->mdp;
  }
  const be::BehaviorPolicy& beta() const {
    if (two_goal) return two_goal->beta;
    if (tree) return tree->beta;
    return maze->beta;
  }
  const be::FeatureMap& map() const { return *features; }
  const std::vector<int>* regions() const {
    return maze ? &maze->regions : nullptr;
  }
};

EnvBundle build_env(const EnvSpec& spec, const LoadedConfig& cfg) {
  EnvBundle env;
  if (spec.kind == "two_goal") {
    env.two_goal = be::build_two_goal_tree(spec.p,
                                           static_cast<std::size_t>(spec.depth));
    env.features = be::two_goal_feature_map(*env.two_goal);
  } else if (spec.kind == "random_tree") {
    env.tree = be::build_random_terminal_tree(
        static_cast<std::size_t>(spec.n_beta),
        static_cast<std::size_t>(spec.depth),
        static_cast<std::size_t>(spec.branching),
        static_cast<std::uint64_t>(spec.seed));
    env.features = env.tree->map;
  } else if (spec.kind == "grid_maze") {
    const std::string path = resolve_near_config(cfg, spec.layout);
    std::ifstream in(path);
    if (!in) throw be::ConfigError("env.layout: cannot open " + path);
    std::ostringstream text;
    text << in.rdbuf();
    env.maze = be::build_grid_maze_from_text(
        text.str(), spec.goal_weights, spec.dither,
        static_cast<std::size_t>(spec.horizon));
    env.features = env.maze->map;
  } else {
    throw be::ConfigError(
        "env.kind must be one of two_goal, random_tree, grid_maze (got '" +
        spec.kind + "')");
  }
  if (spec.features == "state_one_hot") {
    env.features = be::FeatureMap::one_hot(env.mdp().n_states());
  } else if (spec.features != "env") {
    throw be::ConfigError("env.features must be 'env' or 'state_one_hot'");
  }
  return env;
}

void check_rng_id(be::ConfigReader& reader) {
  const std::string rng = reader.get_string_or("run.rng", "pcg32");
  if (rng != "pcg32")
    throw be::ConfigError("run.rng: only 'pcg32' is supported (got '" + rng +
                          "')");
}

std::vector<be::ExpSetting> schedule_from(const std::vector<double>& raw) {
  std::vector<be::ExpSetting> schedule;
  schedule.reserve(raw.size());
  for (double v : raw) {
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw be::ConfigError("deploy.exp_schedule entries must be bucket "
                            "indices (non-negative integers)");
    schedule.push_back(be::ExpSetting::bucket(static_cast<std::size_t>(v)));
  }
  return schedule;
}

be::DemoDataset load_dataset_checked(const std::string& path,
                                     const EnvBundle& env) {
  be::DemoDataset data = be::read_dataset_file(path);
  if (data.mdp_fingerprint != env.mdp().fingerprint())
    throw be::ContractError("dataset " + path + " was generated for MDP " +
                            data.mdp_fingerprint + " but the config builds " +
                            env.mdp().fingerprint());
  return data;
}

// Shared [train] block; only method=be reads the conditioning keys.
struct TrainArgs {
  std::string method;
  std::string policy_path;
  std::int64_t m_histories = 4;
  std::int64_t max_buckets = 8;
  double alpha = 0.0;
  std::string history_mode;
  std::int64_t context_length = 50;
  std::int64_t cap = 3;
  bool task_conditioned = false;
  bool use_beta_support = true;
  std::int64_t seed = 0;
};

TrainArgs read_train_args(be::ConfigReader& reader, std::int64_t run_seed) {
  TrainArgs args;
  args.method = reader.get_string_or("train.method", "be");
  args.policy_path = reader.get_string("train.policy_path");
  args.m_histories = reader.get_int_or("train.m_histories", 4);
  args.max_buckets = reader.get_int_or("train.max_buckets", 8);
  args.alpha = reader.get_double_or("train.alpha", 0.0);
  args.history_mode =
      reader.get_string_or("train.history_mode", "feature_counts");
  args.context_length = reader.get_int_or("train.context_length", 50);
  args.cap = reader.get_int_or("train.cap", 3);
  args.task_conditioned = reader.get_bool_or("train.task_conditioned", false);
  args.use_beta_support = reader.get_bool_or("train.use_beta_support", true);
  args.seed = reader.get_int_or("train.seed", run_seed);
  return args;
}

be::TrainConfig train_config_from(const TrainArgs& args,
                                  const EnvBundle& env) {
  be::TrainConfig tc;
  tc.history_mode = be::history_mode_from_string(args.history_mode);
  tc.cap = static_cast<int>(args.cap);
  tc.context_length = static_cast<std::size_t>(args.context_length);
  tc.max_buckets = static_cast<std::size_t>(args.max_buckets);
  tc.alpha = args.alpha;
  tc.task_conditioned = args.task_conditioned;
  tc.beta = args.use_beta_support ? &env.beta() : nullptr;
  tc.seed = static_cast<std::uint64_t>(args.seed);
  return tc;
}

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path parent =
      std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

template <typename Policy>
void save_policy_file(const Policy& policy, const std::string& path) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw be::ConfigError("cannot open " + path + " for writing");
  policy.save(out);
  if (!out) throw be::ContractError("write failed for " + path);
}

template <typename Policy>
Policy load_policy_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw be::ConfigError("cannot open policy file " + path);
  return Policy::load(in);
}

void write_text_file(const std::string& path, const std::string& text) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw be::ConfigError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw be::ContractError("write failed for " + path);
}

// Agent factory used by deploy and compare. The returned bundle keeps the
// loaded policy alive for the lambdas inside OnlineAgent.
struct AgentBundle {
  std::shared_ptr<be::ConditionalPolicy> be_policy;
  std::shared_ptr<be::BcPolicy> bc_policy;
  std::shared_ptr<be::BcHistoryPolicy> bc_history_policy;
  be::OnlineAgent agent;
};

AgentBundle make_agent(const std::string& method, const EnvBundle& env,
                       const std::string& policy_path,
                       be::DeployHistoryMode deploy_mode, int task,
                       double count_bonus_c) {
  AgentBundle bundle;
  if (method == "be") {
    bundle.be_policy = std::make_shared<be::ConditionalPolicy>(
        load_policy_file<be::ConditionalPolicy>(policy_path));
    bundle.agent =
        be::make_be_agent(*bundle.be_policy, env.map(), deploy_mode, task);
  } else if (method == "bc") {
    bundle.bc_policy = std::make_shared<be::BcPolicy>(
        load_policy_file<be::BcPolicy>(policy_path));
    bundle.agent = be::make_bc_agent(*bundle.bc_policy);
  } else if (method == "bc_history") {
    bundle.bc_history_policy = std::make_shared<be::BcHistoryPolicy>(
        load_policy_file<be::BcHistoryPolicy>(policy_path));
    bundle.agent = be::make_bc_history_agent(*bundle.bc_history_policy,
                                             env.map());
  } else if (method == "random") {
    bundle.agent = be::make_random_agent(env.mdp().n_actions());
  } else if (method == "count_bonus") {
    bundle.agent = be::make_count_bonus_agent(env.mdp(), count_bonus_c);
  } else {
    throw be::ConfigError(
        "method must be one of be, bc, bc_history, random, count_bonus "
        "(got '" + method + "')");
  }
  return bundle;
}

// In-memory policies for compare; training is deterministic in the config,
// so each method trains once and redeploys across seeds.
struct PolicySet {
  std::shared_ptr<be::ConditionalPolicy> be_policy;
  std::shared_ptr<be::BcPolicy> bc_policy;
  std::shared_ptr<be::BcHistoryPolicy> bc_history_policy;
};

PolicySet train_for_compare(const std::string& method, const EnvBundle& env,
                            const be::DemoDataset& data,
                            const TrainArgs& targs, double lambda) {
  PolicySet set;
  if (method == "be") {
    be::TrainConfig tc = train_config_from(targs, env);
    set.be_policy = std::make_shared<be::ConditionalPolicy>(
        tc.task_conditioned
            ? be::train_be_task(data, env.map(), lambda,
                                static_cast<std::size_t>(targs.m_histories), tc)
            : be::train_be(data, env.map(), lambda,
                           static_cast<std::size_t>(targs.m_histories), tc));
  } else if (method == "bc") {
    set.bc_policy = std::make_shared<be::BcPolicy>(be::train_bc(data));
  } else if (method == "bc_history") {
    be::TrainConfig tc = train_config_from(targs, env);
    set.bc_history_policy = std::make_shared<be::BcHistoryPolicy>(
        be::train_bc_history(data, env.map(), lambda,
                             static_cast<std::size_t>(targs.m_histories), tc));
  } else if (method != "random" && method != "count_bonus") {
    throw be::ConfigError(
        "compare.methods entries must be one of be, bc, bc_history, random, "
        "count_bonus (got '" + method + "')");
  }
  return set;
}

// Agents hold per-run mutable state (history summaries, visit counts), so
// one is built per deployment from the shared policy set.
be::OnlineAgent agent_for_compare(const std::string& method,
                                  const PolicySet& set, const EnvBundle& env,
                                  be::DeployHistoryMode deploy_mode, int task,
                                  double count_bonus_c) {
  if (method == "be")
    return be::make_be_agent(*set.be_policy, env.map(), deploy_mode, task);
  if (method == "bc") return be::make_bc_agent(*set.bc_policy);
  if (method == "bc_history")
    return be::make_bc_history_agent(*set.bc_history_policy, env.map());
  if (method == "random") return be::make_random_agent(env.mdp().n_actions());
  return be::make_count_bonus_agent(env.mdp(), count_bonus_c);
}

int cmd_gen_data(const LoadedConfig& cfg) {
  be::ConfigReader reader(cfg.table);
  check_rng_id(reader);
  const std::int64_t run_seed = reader.get_int("run.seed");
  EnvSpec spec = read_env_spec(reader);
  const std::int64_t n_traj = reader.get_int("data.n_trajectories");
  const std::int64_t seed = reader.get_int_or("data.seed", run_seed);
  const std::string path = reader.get_string("data.path");
  reader.finish("gen-data");

  EnvBundle env = build_env(spec, cfg);
  be::Rng rng(static_cast<std::uint64_t>(seed), kStreamData);
  be::DemoDataset data =
      env.maze ? be::generate_maze_dataset(
                     *env.maze, static_cast<std::size_t>(n_traj), rng)
               : be::generate_dataset(env.mdp(), env.beta(),
                                      static_cast<std::size_t>(n_traj), rng);
  ensure_parent_dir(path);
  be::write_dataset_file(path, data);
  std::cout << "gen-data: wrote " << data.trajectories.size()
            << " trajectories to " << path
            << " mdp=" << data.mdp_fingerprint << "\n";
  return 0;
}

int cmd_train(const LoadedConfig& cfg) {
  be::ConfigReader reader(cfg.table);
  check_rng_id(reader);
  const std::int64_t run_seed = reader.get_int("run.seed");
  EnvSpec spec = read_env_spec(reader);
  const std::string data_path = reader.get_string("data.path");
  const double lambda = reader.get_double_or("coverage.lambda", 0.01);
  TrainArgs targs = read_train_args(reader, run_seed);
  reader.finish("train");

  EnvBundle env = build_env(spec, cfg);
  be::DemoDataset data = load_dataset_checked(data_path, env);

  if (targs.method == "be") {
    be::TrainConfig tc = train_config_from(targs, env);
    be::ConditionalPolicy policy =
        tc.task_conditioned
            ? be::train_be_task(data, env.map(), lambda,
                                static_cast<std::size_t>(targs.m_histories), tc)
            : be::train_be(data, env.map(), lambda,
                           static_cast<std::size_t>(targs.m_histories), tc);
    save_policy_file(policy, targs.policy_path);
    std::cout << "train: method=be keys=" << policy.table().size()
              << " buckets=" << policy.bucketizer().max_bucket() + 1
              << " path=" << targs.policy_path << "\n";
  } else if (targs.method == "bc") {
    be::BcPolicy policy = be::train_bc(data);
    save_policy_file(policy, targs.policy_path);
    std::cout << "train: method=bc states=" << env.mdp().n_states()
              << " path=" << targs.policy_path << "\n";
  } else if (targs.method == "bc_history") {
    be::TrainConfig tc = train_config_from(targs, env);
    be::BcHistoryPolicy policy = be::train_bc_history(
        data, env.map(), lambda,
        static_cast<std::size_t>(targs.m_histories), tc);
    save_policy_file(policy, targs.policy_path);
    std::cout << "train: method=bc_history keys="
              << policy.inner().table().size()
              << " path=" << targs.policy_path << "\n";
  } else {
    throw be::ConfigError(
        "train.method must be one of be, bc, bc_history (got '" +
        targs.method + "')");
  }
  return 0;
}

int cmd_deploy(const LoadedConfig& cfg) {
  be::ConfigReader reader(cfg.table);
  check_rng_id(reader);
  const std::int64_t run_seed = reader.get_int("run.seed");
  EnvSpec spec = read_env_spec(reader);
  const double lambda = reader.get_double_or("coverage.lambda", 0.01);
  const double eps_fraction =
      reader.get_double_or("coverage.epsilon_fraction", 1e-3);
  const std::string method = reader.get_string_or("deploy.method", "be");
  const std::string policy_path =
      (method == "random" || method == "count_bonus")
          ? reader.get_string_or("train.policy_path", "")
          : reader.get_string("train.policy_path");
  const std::int64_t n_episodes = reader.get_int("deploy.n_episodes");
  const std::string mode_name =
      reader.get_string_or("deploy.history_mode", "online");
  const std::vector<double> raw_schedule =
      reader.get_double_array_or("deploy.exp_schedule", {});
  const std::int64_t task = reader.get_int_or("deploy.task", -1);
  const bool use_subspace = reader.get_bool_or("deploy.subspace", false);
  const std::string data_path =
      use_subspace ? reader.get_string("data.path")
                   : reader.get_string_or("data.path", "");
  const double count_bonus_c =
      reader.get_double_or("deploy.count_bonus_c", 1.0);
  const std::string metrics_path = reader.get_string("deploy.metrics_path");
  const std::string svg_path = reader.get_string_or("deploy.svg_path", "");
  const std::int64_t seed = reader.get_int_or("deploy.seed", run_seed);
  reader.finish("deploy");

  EnvBundle env = build_env(spec, cfg);
  be::DeployHistoryMode mode = be::deploy_history_mode_from_string(mode_name);
  AgentBundle bundle = make_agent(method, env, policy_path, mode,
                                  static_cast<int>(task), count_bonus_c);

  be::OnlineParams params;
  params.n_episodes = static_cast<std::size_t>(n_episodes);
  params.exp_schedule = schedule_from(raw_schedule);
  params.beta = &env.beta();
  params.regions = env.regions();
  params.lambda = lambda;

  std::optional<be::BehaviorSubspace> subspace;
  if (use_subspace) {
    be::DemoDataset data = load_dataset_checked(data_path, env);
    be::Mat gram = be::behavior_mean_gram(data, env.map());
    subspace = be::subspace_from_mean_gram(
        gram, be::relative_subspace_epsilon(gram, eps_fraction));
    params.subspace = &*subspace;
  }

  be::Rng rng(static_cast<std::uint64_t>(seed), kStreamDeploy);
  be::MetricsLog log = be::run_online(env.mdp(), env.map(), bundle.agent,
                                      params, rng);
  log.method = method;
  log.seed = static_cast<std::uint64_t>(seed);
  ensure_parent_dir(metrics_path);
  be::write_metrics_csv_file(metrics_path, log);

  if (!svg_path.empty()) {
    ensure_parent_dir(svg_path);
    be::SvgSeries goals{"goals_reached", {}, {}};
    be::SvgSeries regions{"regions_reached", {}, {}};
    for (const auto& rec : log.records) {
      goals.xs.push_back(static_cast<double>(rec.step));
      goals.ys.push_back(static_cast<double>(rec.goals_reached));
      regions.xs.push_back(static_cast<double>(rec.step));
      regions.ys.push_back(static_cast<double>(rec.regions_reached));
    }
    be::write_line_chart_file(svg_path, "deployment (" + method + ")",
                              "env step", "count", {regions, goals});
  }

  std::cout << "deploy: method=" << method << " episodes=" << n_episodes
            << " goals=" << log.final_goals()
            << " regions=" << log.final_regions()
            << " coverage=" << be::format_g12(log.final_coverage())
            << " violations=" << log.support_violations << "\n";
  return 0;
}

int cmd_calibrate(const LoadedConfig& cfg) {
  be::ConfigReader reader(cfg.table);
  check_rng_id(reader);
  const std::int64_t run_seed = reader.get_int("run.seed");
  EnvSpec spec = read_env_spec(reader);
  const double lambda = reader.get_double_or("coverage.lambda", 0.01);
  const std::string policy_path = reader.get_string("train.policy_path");
  const std::vector<double> raw_buckets =
      reader.get_double_array("calibrate.exp_buckets");
  const std::int64_t n_episodes = reader.get_int("calibrate.n_episodes");
  const std::int64_t n_seeds = reader.get_int("calibrate.n_seeds");
  const std::string csv_path = reader.get_string("calibrate.csv_path");
  const std::string svg_path = reader.get_string_or("calibrate.svg_path", "");
  reader.finish("calibrate");

  EnvBundle env = build_env(spec, cfg);
  be::ConditionalPolicy policy =
      load_policy_file<be::ConditionalPolicy>(policy_path);
  std::vector<std::size_t> buckets;
  for (double v : raw_buckets) {
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw be::ConfigError("calibrate.exp_buckets must be non-negative "
                            "integers");
    buckets.push_back(static_cast<std::size_t>(v));
  }

  be::OnlineParams base;
  base.beta = &env.beta();
  base.regions = env.regions();
  base.lambda = lambda;
  be::Rng rng(static_cast<std::uint64_t>(run_seed), kStreamCalibrate);
  be::CalibrationCurve curve = be::calibration_sweep(
      policy, env.mdp(), env.map(), buckets,
      static_cast<std::size_t>(n_episodes),
      static_cast<std::size_t>(n_seeds), base, rng);

  std::ostringstream csv;
  csv << "bucket,mean_regions,stderr_regions\n";
  for (const auto& point : curve.points) {
    csv << point.bucket << "," << be::format_g12(point.mean_regions) << ","
        << be::format_g12(point.stderr_regions) << "\n";
  }
  write_text_file(csv_path, csv.str());

  if (!svg_path.empty()) {
    ensure_parent_dir(svg_path);
    be::SvgSeries series{"mean regions", {}, {}};
    for (const auto& point : curve.points) {
      series.xs.push_back(static_cast<double>(point.bucket));
      series.ys.push_back(point.mean_regions);
    }
    be::write_line_chart_file(svg_path, "calibration", "exploratoriness bucket",
                              "regions reached", {series});
  }

  std::cout << "calibrate: buckets=" << curve.points.size()
            << " seeds=" << n_seeds;
  try {
    std::vector<double> xs, ys;
    for (const auto& point : curve.points) {
      xs.push_back(static_cast<double>(point.bucket));
      ys.push_back(point.mean_regions);
    }
    std::cout << " spearman=" << be::format_g12(be::spearman_rho(xs, ys));
  } catch (const be::DomainError&) {
    std::cout << " spearman=undefined";
  }
  std::cout << " violations=" << curve.support_violations << "\n";
  return 0;
}

int cmd_ablate(const LoadedConfig& cfg) {
  be::ConfigReader reader(cfg.table);
  check_rng_id(reader);
  const std::int64_t run_seed = reader.get_int("run.seed");
  EnvSpec spec = read_env_spec(reader);
  const double lambda = reader.get_double_or("coverage.lambda", 0.01);
  const std::string policy_path = reader.get_string("train.policy_path");
  const std::vector<std::string> mode_names = reader.get_string_array_or(
      "ablate.modes", {"online", "first_state", "none"});
  const std::int64_t n_episodes = reader.get_int("ablate.n_episodes");
  const std::int64_t n_seeds = reader.get_int("ablate.n_seeds");
  const std::string csv_path = reader.get_string("ablate.csv_path");
  reader.finish("ablate");

  EnvBundle env = build_env(spec, cfg);
  be::ConditionalPolicy policy =
      load_policy_file<be::ConditionalPolicy>(policy_path);
  std::vector<be::DeployHistoryMode> modes;
  for (const auto& name : mode_names)
    modes.push_back(be::deploy_history_mode_from_string(name));

  be::OnlineParams base;
  base.beta = &env.beta();
  base.regions = env.regions();
  base.lambda = lambda;
  be::Rng rng(static_cast<std::uint64_t>(run_seed), kStreamAblate);
  be::AblationResult result = be::ablation_history(
      policy, env.mdp(), env.map(), modes,
      static_cast<std::size_t>(n_episodes),
      static_cast<std::size_t>(n_seeds), base, rng);

  std::ostringstream csv;
  csv << "mode,seed,regions_reached\n";
  for (const auto& [mode, regions] : result.regions_per_mode)
    for (std::size_t s = 0; s < regions.size(); ++s)
      csv << mode << "," << s << "," << be::format_g12(regions[s]) << "\n";
  write_text_file(csv_path, csv.str());

  std::cout << "ablate:";
  for (const auto& [mode, regions] : result.regions_per_mode)
    std::cout << " " << mode << "=" << be::format_g12(be::mean(regions));
  std::cout << " violations=" << result.support_violations << "\n";
  return 0;
}

int cmd_verify_prop1(const LoadedConfig& cfg) {
  be::ConfigReader reader(cfg.table);
  check_rng_id(reader);
  const std::int64_t run_seed = reader.get_int("run.seed");
  const std::int64_t instances = reader.get_int_or("prop1.instances", 100);
  const std::int64_t seed0 = reader.get_int_or("prop1.seed0", 1);
  const std::int64_t n_trials = reader.get_int_or("prop1.n_trials", 20);
  const std::vector<double> n_beta_values = reader.get_double_array_or(
      "prop1.n_beta_values", {2, 3, 4, 5, 6});
  const std::vector<double> depth_values =
      reader.get_double_array_or("prop1.depth_values", {2, 3, 4});
  const std::vector<double> branching_values =
      reader.get_double_array_or("prop1.branching_values", {2, 3});
  const double lambda = reader.get_double_or("prop1.lambda", 0.01);
  const double eps_fraction =
      reader.get_double_or("prop1.epsilon_fraction", 0.5);
  const bool include_trials =
      reader.get_bool_or("prop1.include_trials", false);
  const std::string report_path = reader.get_string("prop1.report_path");
  reader.finish("verify-prop1");

  if (instances <= 0)
    throw be::ConfigError("prop1.instances must be >= 1");
  if (n_beta_values.empty() || depth_values.empty() ||
      branching_values.empty())
    throw be::ConfigError("prop1 parameter value lists must be non-empty");

  // Instance i cycles through the feasible (n_beta, depth, branching)
  // triples; a tree needs branching^depth >= n_beta terminal directions.
  struct Triple {
    std::size_t n_beta, depth, branching;
  };
  std::vector<Triple> grid;
  for (double nb : n_beta_values)
    for (double d : depth_values)
      for (double b : branching_values) {
        const Triple t{static_cast<std::size_t>(nb),
                       static_cast<std::size_t>(d),
                       static_cast<std::size_t>(b)};
        double leaves = 1.0;
        for (std::size_t j = 0; j < t.depth; ++j)
          leaves *= static_cast<double>(t.branching);
        if (leaves >= static_cast<double>(t.n_beta)) grid.push_back(t);
      }
  if (grid.empty())
    throw be::ConfigError("prop1 grid has no feasible "
                          "(n_beta, depth, branching) combination");

  be::Rng master(static_cast<std::uint64_t>(run_seed), kStreamProp1);
  nlohmann::ordered_json report;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  std::size_t total_trials = 0;
  std::size_t total_successes = 0;
  std::size_t total_violations = 0;
  for (std::int64_t i = 0; i < instances; ++i) {
    const Triple& triple = grid[static_cast<std::size_t>(i) % grid.size()];
    const std::size_t n_beta = triple.n_beta;
    const std::size_t depth = triple.depth;
    const std::size_t branching = triple.branching;
    const std::uint64_t instance_seed =
        static_cast<std::uint64_t>(seed0 + i);
    be::RandomTerminalTree tree =
        be::build_random_terminal_tree(n_beta, depth, branching,
                                       instance_seed);
    be::Prop1Instance instance =
        be::make_prop1_instance(tree, lambda, eps_fraction);
    be::Prop1Report r = be::verify_prop1(
        instance, master.split(static_cast<std::uint64_t>(i)),
        static_cast<std::size_t>(n_trials));
    total_trials += r.n_trials;
    total_successes += r.successes;
    total_violations += r.support_violations;
    nlohmann::ordered_json entry = be::prop1_report_json(r);
    entry["depth"] = depth;
    entry["branching"] = branching;
    if (!include_trials) entry.erase("trials");
    entries.push_back(std::move(entry));
  }
  report["n_instances"] = instances;
  report["n_trials_per_instance"] = n_trials;
  report["total_trials"] = total_trials;
  report["total_successes"] = total_successes;
  report["success_rate"] =
      total_trials == 0
          ? 0.0
          : static_cast<double>(total_successes) /
                static_cast<double>(total_trials);
  report["support_violations"] = total_violations;
  report["instances"] = std::move(entries);
  write_text_file(report_path, report.dump(2) + "\n");

  std::cout << "verify-prop1: instances=" << instances
            << " trials=" << total_trials
            << " success_rate="
            << be::format_g12(report["success_rate"].get<double>())
            << " violations=" << total_violations << "\n";
  return 0;
}

int cmd_compare(const LoadedConfig& cfg) {
  be::ConfigReader reader(cfg.table);
  check_rng_id(reader);
  const std::int64_t run_seed = reader.get_int("run.seed");
  EnvSpec spec = read_env_spec(reader);
  const double lambda = reader.get_double_or("coverage.lambda", 0.01);
  const std::string data_path = reader.get_string("data.path");
  TrainArgs targs = read_train_args(reader, run_seed);
  const std::vector<std::string> methods =
      reader.get_string_array("compare.methods");
  const std::int64_t n_episodes = reader.get_int("compare.n_episodes");
  const std::int64_t n_seeds = reader.get_int("compare.n_seeds");
  const std::string mode_name =
      reader.get_string_or("deploy.history_mode", "online");
  const std::vector<double> raw_schedule =
      reader.get_double_array_or("deploy.exp_schedule", {});
  const std::int64_t task = reader.get_int_or("deploy.task", -1);
  const double count_bonus_c =
      reader.get_double_or("deploy.count_bonus_c", 1.0);
  const std::string csv_path = reader.get_string("compare.csv_path");
  const std::string per_seed_csv_path =
      reader.get_string_or("compare.per_seed_csv_path", "");
  const std::string svg_regions =
      reader.get_string_or("compare.svg_regions_path", "");
  const std::string svg_goals =
      reader.get_string_or("compare.svg_goals_path", "");
  reader.finish("compare");

  if (methods.empty())
    throw be::ConfigError("compare.methods must list at least one method");
  if (n_seeds <= 0) throw be::ConfigError("compare.n_seeds must be >= 1");

  EnvBundle env = build_env(spec, cfg);
  be::DemoDataset data = load_dataset_checked(data_path, env);
  be::DeployHistoryMode mode = be::deploy_history_mode_from_string(mode_name);

  be::Rng master(static_cast<std::uint64_t>(run_seed), kStreamCompare);
  std::ostringstream csv;
  csv << "method,mean_goals,stderr_goals,mean_regions,stderr_regions,"
         "mean_coverage,stderr_coverage\n";
  std::ostringstream seed_csv;
  seed_csv << "method,seed,goals,regions_reached,coverage\n";
  std::vector<be::SvgSeries> region_series;
  std::vector<be::SvgSeries> goal_series;
  std::size_t total_violations = 0;

  for (const auto& method : methods) {
    PolicySet set = train_for_compare(method, env, data, targs, lambda);
    std::vector<double> goals, regions, coverages;
    std::vector<double> region_curve, goal_curve;
    std::size_t curve_len = 0;
    std::size_t method_violations = 0;
    for (std::int64_t s = 0; s < n_seeds; ++s) {
      // Fresh agent per (method, seed); the seed stream is shared across
      // methods so comparisons run under matched randomness.
      be::OnlineAgent agent = agent_for_compare(
          method, set, env, mode, static_cast<int>(task), count_bonus_c);
      be::OnlineParams params;
      params.n_episodes = static_cast<std::size_t>(n_episodes);
      params.exp_schedule = schedule_from(raw_schedule);
      params.beta = &env.beta();
      params.regions = env.regions();
      params.lambda = lambda;
      be::Rng run_rng = master.split(static_cast<std::uint64_t>(s));
      be::MetricsLog log = be::run_online(env.mdp(), env.map(), agent,
                                          params, run_rng);
      total_violations += log.support_violations;
      method_violations += log.support_violations;
      goals.push_back(static_cast<double>(log.final_goals()));
      regions.push_back(static_cast<double>(log.final_regions()));
      coverages.push_back(log.final_coverage());
      seed_csv << method << "," << s << ","
               << static_cast<std::size_t>(goals.back()) << ","
               << be::format_g12(regions.back()) << ","
               << be::format_g12(coverages.back()) << "\n";
      if (curve_len == 0) {
        curve_len = log.records.size();
        region_curve.assign(curve_len, 0.0);
        goal_curve.assign(curve_len, 0.0);
      }
      for (std::size_t i = 0; i < curve_len; ++i) {
        region_curve[i] +=
            static_cast<double>(log.records[i].regions_reached);
        goal_curve[i] += static_cast<double>(log.records[i].goals_reached);
      }
    }
    const double n = static_cast<double>(n_seeds);
    csv << method << "," << be::format_g12(be::mean(goals)) << ","
        << be::format_g12(be::standard_error(goals)) << ","
        << be::format_g12(be::mean(regions)) << ","
        << be::format_g12(be::standard_error(regions)) << ","
        << be::format_g12(be::mean(coverages)) << ","
        << be::format_g12(be::standard_error(coverages)) << "\n";
    be::SvgSeries rs{method, {}, {}};
    be::SvgSeries gs{method, {}, {}};
    for (std::size_t i = 0; i < curve_len; ++i) {
      rs.xs.push_back(static_cast<double>(i));
      rs.ys.push_back(region_curve[i] / n);
      gs.xs.push_back(static_cast<double>(i));
      gs.ys.push_back(goal_curve[i] / n);
    }
    region_series.push_back(std::move(rs));
    goal_series.push_back(std::move(gs));
    std::cout << "compare: " << method
              << " goals=" << be::format_g12(be::mean(goals))
              << " regions=" << be::format_g12(be::mean(regions))
              << " violations=" << method_violations << "\n";
  }

  write_text_file(csv_path, csv.str());
  if (!per_seed_csv_path.empty())
    write_text_file(per_seed_csv_path, seed_csv.str());
  if (!svg_regions.empty()) {
    ensure_parent_dir(svg_regions);
    be::write_line_chart_file(svg_regions, "regions reached", "env step",
                              "regions", region_series);
  }
  if (!svg_goals.empty()) {
    ensure_parent_dir(svg_goals);
    be::write_line_chart_file(svg_goals, "goals reached", "env step", "goals",
                              goal_series);
  }
  std::cout << "compare: wrote " << csv_path
            << " violations=" << total_violations << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"belab: coverage-conditioned policy laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  auto add_sub = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "experiment config (TOML subset)")
        ->required();
    return sub;
  };
  CLI::App* gen = add_sub("gen-data", "sample demonstrations from the "
                                      "behavior policy into a dataset file");
  CLI::App* train = add_sub("train", "fit a policy from a dataset");
  CLI::App* deploy = add_sub("deploy", "run a trained policy online and log "
                                       "metrics");
  CLI::App* calibrate = add_sub("calibrate", "sweep the exploratoriness "
                                             "conditioning value");
  CLI::App* ablate = add_sub("ablate", "deploy one policy under each history "
                                       "mode");
  CLI::App* prop1 = add_sub("verify-prop1", "check the oracle covers all "
                                            "behavior directions in n_beta "
                                            "episodes");
  CLI::App* compare = add_sub("compare", "train and deploy several methods "
                                         "under matched seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "belab: config error: " << e.what() << "\n";
    return 2;
  }

  try {
    LoadedConfig cfg = load_config(config_path);
    if (gen->parsed()) return cmd_gen_data(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (deploy->parsed()) return cmd_deploy(cfg);
    if (calibrate->parsed()) return cmd_calibrate(cfg);
    if (ablate->parsed()) return cmd_ablate(cfg);
    if (prop1->parsed()) return cmd_verify_prop1(cfg);
    if (compare->parsed()) return cmd_compare(cfg);
  } catch (const be::ConfigError& e) {
    // Aggregated reader messages already start with "config error".
    const std::string what = e.what();
    if (what.rfind("config error", 0) == 0)
      std::cerr << "belab: " << what << "\n";
    else
      std::cerr << "belab: config error: " << what << "\n";
    return 2;
  } catch (const be::ResourceError& e) {
    std::cerr << "belab: resource exceeded: " << e.what() << "\n";
    return 4;
  } catch (const be::ContractError& e) {
    std::cerr << "belab: contract violation: " << e.what() << "\n";
    return 3;
  } catch (const be::DomainError& e) {
    std::cerr << "belab: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "belab: error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
