#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "linqrl/envgen.hpp"

namespace linqrl {

enum class AgentKind { kLinQ, kBaseline, kOracleGreedy, kUniformRandom };

std::string_view to_string(AgentKind kind);
// Accepts linq, baseline (baseline_lsvi), oracle (oracle_greedy) and
// random (uniform_random).
AgentKind parse_agent_kind(std::string_view name);

struct InitialStateMode {
  enum class Kind { kFixed, kCycle, kRandom };
  Kind kind = Kind::kFixed;
  State state = 0;  // used by kFixed
};

std::string to_string(const InitialStateMode& mode);
// "fixed", "fixed:<s>", "cycle" or "random".
InitialStateMode parse_initial_state_mode(std::string_view text);

// Opt-in invariant monitors. Only the LinQ agent has index sets and
// regressors to monitor; for other agents these are reported as disabled.
struct MonitorFlags {
  bool nesting = true;
  bool regression = true;
  bool potential = true;
  bool revisit = true;
  bool optimism = false;
  bool martingale = false;

  static MonitorFlags all();
  static MonitorFlags none();
};

// "all", "none", "default" or a comma list of
// nesting,regression,potential,revisit,optimism,martingale.
MonitorFlags parse_monitor_flags(std::string_view text);

struct ExperimentConfig {
  AgentKind agent = AgentKind::kLinQ;
  std::int64_t episodes = 1;
  double delta = 0.1;
  double c_beta = 8.0;
  std::optional<double> gap_override;
  // Replaces the β computed from the path budget.
  std::optional<double> beta_override;
  std::uint64_t seed = 0;
  MonitorFlags monitors;
  InitialStateMode initial_state;
  // Keep per-path records in RegretLog::series.
  bool record_series = false;
  // Free-form descriptor of the environment source, echoed in summaries.
  std::string env_label;
};

// Throws UsageError unless episodes ≥ 1, delta ∈ (0,1), c_beta > 0 and any
// override is positive.
void validate_config(const ExperimentConfig& config);

struct PathRecord {
  std::int64_t path_index = 0;
  std::int64_t episode_index = 0;
  int start_step = 1;
  double per_path_regret = 0.0;
  double cum_path_regret = 0.0;
  double cum_episode_regret = 0.0;
  std::int64_t revisits_so_far = 0;
  std::int64_t samples_so_far = 0;

  friend bool operator==(const PathRecord&, const PathRecord&) = default;
};

struct MonitorResult {
  bool enabled = false;
  bool deterministic = true;
  bool pass = true;
  double measured = 0.0;
  double bound = 0.0;
  std::int64_t violations = 0;
  std::string detail;

  friend bool operator==(const MonitorResult&, const MonitorResult&) = default;
};

struct BoundCheck {
  bool applicable = false;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = true;

  friend bool operator==(const BoundCheck&, const BoundCheck&) = default;
};

struct BoundReport {
  BoundCheck revisits;           // K − N against the total revisit bound
  BoundCheck per_step_revisits;  // max_h |I_{h+1} \ I_h| against the per-step bound
  BoundCheck average_regret;     // Regret(N)/N against the regret envelope
  BoundCheck path_regret;        // Regret_path(K) against its high-probability bound
  BoundCheck expected_regret;    // Regret_path(K) against the logarithmic envelope
  bool precondition_applicable = false;
  bool precondition_met = false;
  double precondition_episodes = 0.0;  // N required by the envelope

  friend bool operator==(const BoundReport&, const BoundReport&) = default;
};

struct RegretLog {
  AgentKind agent = AgentKind::kLinQ;
  std::string env_label;
  EnvKind env_kind = EnvKind::kLinearMdp;
  std::uint64_t env_seed = 0;
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  int dim = 0;
  std::uint64_t seed = 0;
  double delta = 0.0;
  double c_beta = 0.0;
  std::optional<double> gap_override;
  std::string initial_state_mode;

  double beta = 0.0;
  double k_budget = 0.0;
  double gap_input = 0.0;
  double certified_gap = 0.0;
  bool c_beta_below_theory = false;
  bool gap_overestimated = false;

  std::int64_t episodes = 0;  // N
  std::int64_t paths = 0;     // K
  std::int64_t samples = 0;   // T
  std::vector<double> episode_regret;
  double total_episode_regret = 0.0;
  double total_path_regret = 0.0;
  // Σ of per-path regret over the paths that completed an episode.
  double completing_path_regret = 0.0;
  std::vector<std::int64_t> index_set_sizes;  // |I_h|, h = 1..H
  std::vector<std::int64_t> step_revisits;    // |I_{h+1} \ I_h|, h = 1..H−1

  MonitorResult nesting;
  MonitorResult regression;
  MonitorResult potential;
  MonitorResult revisit;
  MonitorResult consistency;
  MonitorResult optimism;
  MonitorResult martingale;
  BoundReport bounds;

  std::vector<PathRecord> series;

  std::int64_t revisits() const noexcept { return paths - episodes; }
  double average_episode_regret() const noexcept {
    return episodes > 0 ? total_episode_regret / static_cast<double>(episodes) : 0.0;
  }
  // True when every enabled deterministic monitor passed.
  bool deterministic_monitors_pass() const;

  friend bool operator==(const RegretLog&, const RegretLog&) = default;
};

using SeriesSink = std::function<void(const PathRecord&)>;

// Runs the configured agent for config.episodes episodes on env. Regret is
// computed by exact policy evaluation. Deterministic in (env, config).
// `sink`, when set, receives every path record as it is produced.
RegretLog run_experiment(const Environment& env, const ExperimentConfig& config, const SeriesSink& sink = {});

// Fills log.bounds from the log's counts and the environment's gap.
BoundReport evaluate_theorem_bounds(const RegretLog& log);

struct SweepJob {
  std::shared_ptr<const Environment> env;
  ExperimentConfig config;
  // Called from the worker running this job only.
  SeriesSink sink;
};

struct SweepResult {
  std::optional<RegretLog> log;
  std::string error;
};

// Runs share-nothing jobs on up to `threads` workers (0 picks the hardware
// concurrency). Results are in input order and match sequential execution.
std::vector<SweepResult> parallel_sweep(const std::vector<SweepJob>& jobs, unsigned threads = 0);

// Summary JSON with sorted keys; non-finite numbers become null.
std::string summary_json(const RegretLog& log);

inline constexpr std::string_view kSeriesHeader =
    "path_index,episode_index,start_step,per_path_regret,cum_path_regret,cum_episode_regret,"
    "revisits_so_far,samples_so_far";
// One CSV row without the trailing newline; doubles use shortest round-trip.
std::string series_row(const PathRecord& record);
// Header plus every row of log.series.
std::string series_csv(const RegretLog& log);

// Shortest round-trip decimal for a finite double.
std::string format_double(double value);

}  // namespace linqrl
