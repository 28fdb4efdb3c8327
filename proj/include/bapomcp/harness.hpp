#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bapomcp/allocation.hpp"
#include "bapomcp/bandit.hpp"
#include "bapomcp/belief_gp.hpp"
#include "bapomcp/commitment.hpp"
#include "bapomcp/environments.hpp"
#include "bapomcp/pomcp.hpp"

namespace bapomcp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnvironmentConfig {
  enum class Kind { kDynamic, kGridDataset };

  Kind kind = Kind::kDynamic;
  std::string path;                                   // grid datasets
  KernelParams dataset_kernel = synthetic_dataset_kernel();
  double grid_resolution = 0.25;                      // dynamic lattice spacing
  double step_length = 3.0;                           // grid-dataset move length
  bool vertical_moves = true;
  double observation_noise_std = 0.0;
};

struct ExperimentConfig {
  std::string name = "run";
  EnvironmentConfig environment;
  int T = 200;
  double c = 10.0;
  std::size_t total_budget = 20000;
  AllocationCurve curve = AllocationCurve::beta_curve(6.0, 1.0);
  Explorer explorer = Explorer::kUGapEb;
  CommitmentPolicy commitment = CommitmentPolicy::welch(0.05);
  SearchConfig search;
  /// Unset: 0.1 x the field's value range.
  std::optional<double> obs_bin_width;
  KernelParams kernel;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  void validate() const {
    if (T < 1) throw ConfigError("T must be >= 1");
    if (!(c >= 0.0)) throw ConfigError("c must be non-negative");
    if (total_budget < static_cast<std::size_t>(T)) throw ConfigError("total_budget must be >= T");
    if (seeds.empty()) throw ConfigError("seeds must be non-empty");
    if (environment.kind == EnvironmentConfig::Kind::kGridDataset && environment.path.empty()) {
      throw ConfigError("grid-dataset environment needs a path");
    }
    if (!(environment.observation_noise_std >= 0.0)) {
      throw ConfigError("observation_noise_std must be non-negative");
    }
    if (obs_bin_width && !(*obs_bin_width > 0.0)) throw ConfigError("obs_bin_width must be positive");
    try {
      curve.validate();
      commitment.validate();
      kernel.validate();
      environment.dataset_kernel.validate();
      SearchConfig s = search;
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

/// Per-environment defaults: the dynamic field uses c = 10, a Beta(6, 1) curve
/// and a two-step search horizon; dataset fields use c = 100 and Beta(4, 4).
inline ExperimentConfig default_config(EnvironmentConfig::Kind kind) {
  ExperimentConfig cfg;
  cfg.environment.kind = kind;
  if (kind == EnvironmentConfig::Kind::kDynamic) {
    cfg.c = 10.0;
    cfg.curve = AllocationCurve::beta_curve(6.0, 1.0);
    cfg.kernel = {.lengthscale = 0.75,
                  .signal_variance = 0.3,
                  .noise_variance = 1e-4,
                  .depth_lengthscale = 0.0,
                  .time_lengthscale = 0.02};
    cfg.search.max_depth = 2;
  } else {
    cfg.c = 100.0;
    cfg.curve = AllocationCurve::beta_curve(4.0, 4.0);
    cfg.kernel = {.lengthscale = 20.0,
                  .signal_variance = 1.0,
                  .noise_variance = 1e-4,
                  .depth_lengthscale = 5.0,
                  .time_lengthscale = 0.0};
  }
  return cfg;
}

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline void read_kernel(const json& obj, KernelParams& k, const std::string& where) {
  check_keys(obj, {"lengthscale", "signal_variance", "noise_variance", "depth_lengthscale",
                   "time_lengthscale"},
             where);
  read(obj, "lengthscale", k.lengthscale, where);
  read(obj, "signal_variance", k.signal_variance, where);
  read(obj, "noise_variance", k.noise_variance, where);
  read(obj, "depth_lengthscale", k.depth_lengthscale, where);
  read(obj, "time_lengthscale", k.time_lengthscale, where);
}

inline Explorer parse_explorer(const std::string& s) {
  if (s == "uct") return Explorer::kUct;
  if (s == "ugapeb") return Explorer::kUGapEb;
  if (s == "sr") return Explorer::kSuccessiveRejects;
  throw ConfigError("explorer must be one of uct, ugapeb, sr (got '" + s + "')");
}

}  // namespace detail

inline std::string to_string(Explorer e) {
  switch (e) {
    case Explorer::kUct: return "uct";
    case Explorer::kUGapEb: return "ugapeb";
    case Explorer::kSuccessiveRejects: return "sr";
  }
  return "?";
}

namespace detail {

inline ExperimentConfig parse_config_fields(const nlohmann::json& j) {
  detail::check_keys(j, {"name", "environment", "T", "c", "total_budget", "curve", "explorer",
                         "commitment", "search", "kernel", "seeds"},
                     "config");
  auto kind = EnvironmentConfig::Kind::kDynamic;
  if (j.contains("environment")) {
    const auto& e = j.at("environment");
    detail::check_keys(e, {"kind", "path", "kernel", "grid_resolution", "step_length",
                           "vertical_moves", "observation_noise_std"},
                       "environment");
    const std::string k = e.value("kind", std::string("dynamic"));
    if (k == "grid-dataset") {
      kind = EnvironmentConfig::Kind::kGridDataset;
    } else if (k != "dynamic") {
      throw ConfigError("environment.kind must be 'dynamic' or 'grid-dataset'");
    }
  }
  ExperimentConfig cfg = default_config(kind);
  if (j.contains("environment")) {
    const auto& e = j.at("environment");
    auto& env = cfg.environment;
    read(e, "path", env.path, "environment");
    read(e, "grid_resolution", env.grid_resolution, "environment");
    read(e, "step_length", env.step_length, "environment");
    read(e, "vertical_moves", env.vertical_moves, "environment");
    read(e, "observation_noise_std", env.observation_noise_std, "environment");
    if (e.contains("kernel")) detail::read_kernel(e.at("kernel"), env.dataset_kernel, "environment.kernel");
  }
  read(j, "name", cfg.name, "config");
  read(j, "T", cfg.T, "config");
  read(j, "c", cfg.c, "config");
  read(j, "total_budget", cfg.total_budget, "config");
  read(j, "seeds", cfg.seeds, "config");
  if (j.contains("explorer")) {
    cfg.explorer = detail::parse_explorer(j.at("explorer").get<std::string>());
  }
  if (j.contains("curve")) {
    const auto& c = j.at("curve");
    detail::check_keys(c, {"kind", "alpha", "beta"}, "curve");
    const std::string k = c.value("kind", std::string("beta"));
    if (k == "fixed") {
      cfg.curve = AllocationCurve::fixed();
    } else if (k == "beta") {
      cfg.curve.kind = AllocationCurve::Kind::kBeta;
      read(c, "alpha", cfg.curve.alpha, "curve");
      read(c, "beta", cfg.curve.beta, "curve");
    } else {
      throw ConfigError("curve.kind must be 'fixed' or 'beta'");
    }
  }
  if (j.contains("commitment")) {
    const auto& c = j.at("commitment");
    detail::check_keys(c, {"kind", "k", "p_threshold", "delta", "epsilon", "max_commit"},
                       "commitment");
    auto& p = cfg.commitment;
    const std::string k = c.value("kind", std::string("welch"));
    if (k == "single") {
      p.kind = CommitmentPolicy::Kind::kSingle;
    } else if (k == "fixed_k") {
      p.kind = CommitmentPolicy::Kind::kFixedK;
    } else if (k == "welch") {
      p.kind = CommitmentPolicy::Kind::kWelch;
    } else if (k == "ugapec") {
      p.kind = CommitmentPolicy::Kind::kUGapEc;
    } else {
      throw ConfigError("commitment.kind must be single, fixed_k, welch or ugapec");
    }
    read(c, "k", p.k, "commitment");
    read(c, "p_threshold", p.p_threshold, "commitment");
    read(c, "delta", p.delta, "commitment");
    read(c, "epsilon", p.epsilon, "commitment");
    read(c, "max_commit", p.max_commit, "commitment");
  }
  if (j.contains("search")) {
    const auto& s = j.at("search");
    detail::check_keys(s, {"gamma", "max_depth", "obs_bin_width", "rollout_policy_seed", "h_eps"},
                       "search");
    read(s, "gamma", cfg.search.gamma, "search");
    read(s, "max_depth", cfg.search.max_depth, "search");
    read(s, "rollout_policy_seed", cfg.search.rollout_policy_seed, "search");
    if (s.contains("obs_bin_width")) cfg.obs_bin_width = s.at("obs_bin_width").get<double>();
    if (s.contains("h_eps") && !s.at("h_eps").is_null()) {
      cfg.search.h_eps = s.at("h_eps").get<double>();
    }
  }
  if (j.contains("kernel")) detail::read_kernel(j.at("kernel"), cfg.kernel, "kernel");
  return cfg;
}

}  // namespace detail

/// Parses an experiment config. Fields missing from the JSON keep the
/// defaults of the chosen environment kind; unknown keys are errors.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    cfg = detail::parse_config_fields(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

inline Environment build_environment(const ExperimentConfig& cfg) {
  const auto& e = cfg.environment;
  Environment env;
  if (e.kind == EnvironmentConfig::Kind::kDynamic) {
    env = Environment::dynamic(e.grid_resolution, cfg.T);
  } else {
    env = Environment::grid(load_grid_dataset(e.path, e.dataset_kernel), cfg.T,
                            MotionModel::compass(e.step_length, e.vertical_moves));
  }
  env.observation_noise_std = e.observation_noise_std;
  env.workspace.validate();
  return env;
}

struct EpisodeRow {
  std::uint64_t seed = 0;
  int step = 0;
  std::size_t rollouts_used = 0;
  std::size_t actions_committed = 0;
  double reward = 0.0;
  double cumulative_reward = 0.0;
  double wall_ms = 0.0;
  // Diagnostics.
  double truth_value = 0.0;
  double truth_rmse = 0.0;
  bool bin_mismatch = false;
};

struct EpisodeLog {
  std::uint64_t seed = 0;
  std::vector<EpisodeRow> rows;
  std::size_t total_rollouts = 0;
  double total_reward = 0.0;
  double total_wall_ms = 0.0;
  std::size_t planning_calls = 0;
  std::size_t schedule_total = 0;  // realized schedule total over all T steps
};

struct EpisodeHooks {
  /// Called after every planning call with the finished tree.
  std::function<void(int step, const SearchTree&)> on_plan;
  bool diagnostics = false;
};

namespace detail {

/// Truth-vs-belief RMSE over a coarse lattice at normalized time t.
inline double belief_rmse(const Environment& env, const GpBelief& belief, double t) {
  const auto& box = env.workspace.bounds;
  const bool dynamic = env.truth.time_varying();
  const int nxy = dynamic ? 11 : 8;
  const int nz = dynamic ? 1 : 3;
  double sse = 0.0;
  int count = 0;
  for (int k = 0; k < nz; ++k) {
    const double z = nz == 1 ? box.lo.z : box.lo.z + (box.hi.z - box.lo.z) * k / (nz - 1);
    for (int j = 0; j < nxy; ++j) {
      for (int i = 0; i < nxy; ++i) {
        const Point p{box.lo.x + (box.hi.x - box.lo.x) * i / (nxy - 1),
                      box.lo.y + (box.hi.y - box.lo.y) * j / (nxy - 1), z, dynamic ? t : 0.0};
        const double err = belief.posterior(p).mean - env.truth.evaluate(p, t);
        sse += err * err;
        ++count;
      }
    }
  }
  return std::sqrt(sse / count);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// One seeded episode of T environment steps.
///
/// Each step either executes the next pending committed action (no planning,
/// zero rollouts) or plans with that step's allocation and commits a new plan.
/// Rewards score the visited point under the belief before its observation is
/// added. The tree is dropped once its committed plan is used up.
inline EpisodeLog run_episode(const ExperimentConfig& cfg, const Environment& env,
                              std::uint64_t seed, const EpisodeHooks& hooks = {}) {
  Rng rng(detail::mix_seed(seed, cfg.search.rollout_policy_seed));
  const BeliefModel model(env, cfg.c);
  SearchConfig search = cfg.search;
  const auto [vlo, vhi] = env.truth.value_range();
  search.obs_bin_width = cfg.obs_bin_width.value_or(0.1 * std::max(vhi - vlo, 1e-9));
  const Planner<BeliefModel> planner(model, search, cfg.explorer);

  const std::size_t floor = env.actions(env.start).size();
  const auto schedule = build_schedule(cfg.curve, cfg.total_budget,
                                       static_cast<std::size_t>(cfg.T), floor);

  GpBelief belief(cfg.kernel, env.belief_bounds());
  AgentState state = env.start;
  ReturnRange range;
  std::deque<std::size_t> pending;
  std::deque<std::int64_t> pending_bins;

  EpisodeLog log;
  log.seed = seed;
  log.schedule_total = schedule.total();
  log.rows.reserve(cfg.T);
  double cumulative = 0.0;

  for (int step = 0; step < cfg.T; ++step) {
    EpisodeRow row;
    row.seed = seed;
    row.step = step;
    std::optional<std::int64_t> expected_bin;
    if (pending.empty()) {
      const std::size_t n = std::max(schedule.per_step[step], env.actions(state).size());
      const auto t0 = std::chrono::steady_clock::now();
      const SimBelief sim_root(std::make_shared<QueryCache>(belief));
      const SearchTree tree = planner.plan(sim_root, state, n, rng, range);
      const CommittedPlan plan = extract_plan(tree, cfg.commitment, range.spread());
      const auto t1 = std::chrono::steady_clock::now();
      row.rollouts_used = n;
      row.actions_committed = plan.actions.size();
      row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      pending.assign(plan.actions.begin(), plan.actions.end());
      pending_bins.assign(plan.expected_bins.begin(), plan.expected_bins.end());
      ++log.planning_calls;
      if (hooks.on_plan) hooks.on_plan(step, tree);
    } else {
      expected_bin = pending_bins.front();
      pending_bins.pop_front();
    }
    const std::size_t a = pending.front();
    pending.pop_front();

    const auto legal = env.actions(state);
    const Action& action = legal.at(a);
    AgentState next_state{displaced(state.position, action), state.step_index + 1};
    const auto query = belief.query(env.belief_point(next_state));
    row.reward = objective_reward(query.stats, cfg.c);
    const StepOutcome outcome = env.step(state, action, rng);
    belief.try_observe(query, outcome.observation);
    state = outcome.state;

    if (expected_bin) {
      row.bin_mismatch =
          discretize_observation(outcome.observation, search.obs_bin_width) != *expected_bin;
    }
    if (hooks.diagnostics) {
      const double t = std::min(1.0, static_cast<double>(state.step_index) / cfg.T);
      row.truth_value = env.truth.evaluate(state.position, t);
      row.truth_rmse = detail::belief_rmse(env, belief, t);
    }
    cumulative += row.reward;
    row.cumulative_reward = cumulative;
    log.total_rollouts += row.rollouts_used;
    log.total_wall_ms += row.wall_ms;
    log.rows.push_back(row);
  }
  log.total_reward = cumulative;
  return log;
}

inline EpisodeLog run_episode(const ExperimentConfig& cfg, std::uint64_t seed,
                              const EpisodeHooks& hooks = {}) {
  cfg.validate();
  return run_episode(cfg, build_environment(cfg), seed, hooks);
}

inline constexpr const char* kEpisodeCsvHeader =
    "seed,step,rollouts_used,actions_committed,reward,cumulative_reward,wall_ms";
inline constexpr const char* kSummaryCsvHeader =
    "method,seed,total_reward,total_rollouts,total_wall_ms";

inline void write_episode_csv(const EpisodeLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(12);
  out << kEpisodeCsvHeader << '\n';
  for (const auto& r : log.rows) {
    out << r.seed << ',' << r.step << ',' << r.rollouts_used << ',' << r.actions_committed << ','
        << r.reward << ',' << r.cumulative_reward << ',' << r.wall_ms << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline void write_diagnostics_csv(const EpisodeLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(12);
  out << "seed,step,truth_value,truth_rmse,bin_mismatch\n";
  for (const auto& r : log.rows) {
    out << r.seed << ',' << r.step << ',' << r.truth_value << ',' << r.truth_rmse << ','
        << (r.bin_mismatch ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

struct SeedTotals {
  std::uint64_t seed = 0;
  double total_reward = 0.0;
  std::size_t total_rollouts = 0;
  double total_wall_ms = 0.0;
};

struct RunSummary {
  std::string method;
  std::vector<SeedTotals> per_seed;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_rollouts = 0.0;
  double std_rollouts = 0.0;
  double total_wall_ms = 0.0;
};

namespace detail {

inline std::pair<double, double> mean_and_sample_std(const std::vector<double>& xs) {
  ArmStats acc;
  for (double x : xs) acc.add(x);
  return {acc.mean, acc.count < 2 ? 0.0 : std::sqrt(acc.variance())};
}

}  // namespace detail

inline RunSummary summarize(const std::string& method, const std::vector<EpisodeLog>& logs) {
  RunSummary s;
  s.method = method;
  std::vector<double> rewards, rollouts;
  for (const auto& log : logs) {
    s.per_seed.push_back({log.seed, log.total_reward, log.total_rollouts, log.total_wall_ms});
    rewards.push_back(log.total_reward);
    rollouts.push_back(static_cast<double>(log.total_rollouts));
    s.total_wall_ms += log.total_wall_ms;
  }
  std::tie(s.mean_reward, s.std_reward) = detail::mean_and_sample_std(rewards);
  std::tie(s.mean_rollouts, s.std_rollouts) = detail::mean_and_sample_std(rollouts);
  return s;
}

inline void write_summary_csv(const std::vector<RunSummary>& summaries,
                              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(12);
  out << kSummaryCsvHeader << '\n';
  for (const auto& s : summaries) {
    for (const auto& t : s.per_seed) {
      out << s.method << ',' << t.seed << ',' << t.total_reward << ',' << t.total_rollouts << ','
          << t.total_wall_ms << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

struct ExperimentOptions {
  std::optional<std::filesystem::path> out_dir;
  bool parallel = false;
  bool diagnostics = false;
};

struct ExperimentResult {
  RunSummary summary;
  std::vector<EpisodeLog> logs;
};

/// Runs every seed (optionally in parallel, one episode per task) and, with an
/// output directory, writes `<method>_seed<k>.csv` per episode plus
/// `summary.csv`.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::vector<std::uint64_t>& seeds,
                                       const ExperimentOptions& opts = {}) {
  cfg.validate();
  if (seeds.empty()) throw ConfigError("no seeds to run");
  const Environment env = build_environment(cfg);
  EpisodeHooks hooks;
  hooks.diagnostics = opts.diagnostics;

  ExperimentResult result;
  if (opts.parallel && seeds.size() > 1) {
    std::vector<std::future<EpisodeLog>> jobs;
    for (auto s : seeds) {
      jobs.push_back(std::async(std::launch::async,
                                [&, s] { return run_episode(cfg, env, s, hooks); }));
    }
    for (auto& j : jobs) result.logs.push_back(j.get());
  } else {
    for (auto s : seeds) result.logs.push_back(run_episode(cfg, env, s, hooks));
  }
  result.summary = summarize(cfg.name, result.logs);

  if (opts.out_dir) {
    std::filesystem::create_directories(*opts.out_dir);
    for (const auto& log : result.logs) {
      const std::string stem = cfg.name + "_seed" + std::to_string(log.seed);
      write_episode_csv(log, *opts.out_dir / (stem + ".csv"));
      if (opts.diagnostics) write_diagnostics_csv(log, *opts.out_dir / (stem + ".diag.csv"));
    }
    write_summary_csv({result.summary}, *opts.out_dir / "summary.csv");
  }
  return result;
}

struct GridResult {
  AllocationCurve curve;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_rollouts = 0.0;
};

using EpisodeRunner = std::function<EpisodeLog(const ExperimentConfig&, std::uint64_t)>;

/// Evaluates all 49 grid curves over the config's seeds and ranks them by mean
/// final cumulative reward (descending; ties keep grid order). `runner`
/// replaces the episode simulation, e.g. with a cheaper surrogate.
inline std::vector<GridResult> grid_search(const ExperimentConfig& cfg,
                                           const EpisodeRunner& runner = {},
                                           const std::optional<std::filesystem::path>& out_dir = {}) {
  cfg.validate();
  std::optional<Environment> env;
  if (!runner) env = build_environment(cfg);
  std::vector<GridResult> results;
  for (const auto& curve : grid_candidates()) {
    ExperimentConfig c = cfg;
    c.curve = curve;
    std::vector<EpisodeLog> logs;
    for (auto s : cfg.seeds) logs.push_back(runner ? runner(c, s) : run_episode(c, *env, s));
    const auto summary = summarize("grid", logs);
    results.push_back({curve, summary.mean_reward, summary.std_reward, summary.mean_rollouts});
  }
  std::stable_sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
    return a.mean_reward > b.mean_reward;
  });
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    const auto path = *out_dir / "grid_search.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(12);
    out << "rank,alpha,beta,mean_reward,std_reward,mean_rollouts\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      out << i + 1 << ',' << r.curve.alpha << ',' << r.curve.beta << ',' << r.mean_reward << ','
          << r.std_reward << ',' << r.mean_rollouts << '\n';
    }
  }
  return results;
}

/// Baseline: even split, UCT, one action per plan.
inline ExperimentConfig baseline_variant(ExperimentConfig cfg) {
  cfg.name = "baseline";
  cfg.curve = AllocationCurve::fixed();
  cfg.explorer = Explorer::kUct;
  cfg.commitment.kind = CommitmentPolicy::Kind::kSingle;
  return cfg;
}

/// Proposed: Beta curve (the config's, else the environment default), UGapEb
/// at the root, Welch commitment at p = 0.05.
inline ExperimentConfig proposed_variant(ExperimentConfig cfg) {
  cfg.name = "proposed";
  if (cfg.curve.kind != AllocationCurve::Kind::kBeta) cfg.curve = default_config(cfg.environment.kind).curve;
  cfg.explorer = Explorer::kUGapEb;
  cfg.commitment.kind = CommitmentPolicy::Kind::kWelch;
  cfg.commitment.p_threshold = 0.05;
  return cfg;
}

struct ComparisonReport {
  ExperimentResult baseline;
  ExperimentResult proposed;
};

/// Runs baseline and proposed on the same seeds. With an output directory,
/// writes `comparison.csv` (rows aligned on seed and step), `summary.csv` and
/// `wallclock.csv`.
inline ComparisonReport compare_baseline(const ExperimentConfig& cfg,
                                         const ExperimentOptions& opts = {}) {
  ComparisonReport report;
  ExperimentOptions inner = opts;
  inner.out_dir.reset();
  report.baseline = run_experiment(baseline_variant(cfg), cfg.seeds, inner);
  report.proposed = run_experiment(proposed_variant(cfg), cfg.seeds, inner);

  if (opts.out_dir) {
    std::filesystem::create_directories(*opts.out_dir);
    const auto path = *opts.out_dir / "comparison.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(12);
    out << "seed,step,baseline_reward,baseline_cumulative_reward,baseline_rollouts,"
           "proposed_reward,proposed_cumulative_reward,proposed_rollouts\n";
    for (std::size_t e = 0; e < report.baseline.logs.size(); ++e) {
      const auto& b = report.baseline.logs[e];
      const auto& p = report.proposed.logs[e];
      for (std::size_t i = 0; i < b.rows.size(); ++i) {
        out << b.seed << ',' << b.rows[i].step << ',' << b.rows[i].reward << ','
            << b.rows[i].cumulative_reward << ',' << b.rows[i].rollouts_used << ','
            << p.rows[i].reward << ',' << p.rows[i].cumulative_reward << ','
            << p.rows[i].rollouts_used << '\n';
      }
    }
    write_summary_csv({report.baseline.summary, report.proposed.summary},
                      *opts.out_dir / "summary.csv");
    std::ofstream wall(*opts.out_dir / "wallclock.csv");
    wall.precision(12);
    wall << "method,total_wall_ms\n"
         << "baseline," << report.baseline.summary.total_wall_ms << '\n'
         << "proposed," << report.proposed.summary.total_wall_ms << '\n';
  }
  return report;
}

}  // namespace bapomcp
