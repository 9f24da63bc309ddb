#include "linqrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "linqrl/agent.hpp"
#include "linqrl/errors.hpp"
#include "linqrl/rng.hpp"

namespace linqrl {

using nlohmann::json;

namespace {

constexpr double kRegressionTolerance = 1e-8;
constexpr double kOptimismSlack = 1e-8;
constexpr double kConsistencyTolerance = 1e-10;
// Seeds of the two per-run streams: transitions, and everything else
// (initial states, random policies).
constexpr std::uint64_t kTransitionStream = 0;
constexpr std::uint64_t kAuxStream = 1;

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = text.find(sep);
    out.push_back(text.substr(0, pos));
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  return out;
}

double potential_bound(int dim, std::int64_t updates) {
  return 2.0 * dim * std::log(static_cast<double>(updates) / dim + 1.0);
}

void note_first(MonitorResult& m, const std::string& what) {
  ++m.violations;
  m.pass = false;
  if (m.detail.empty()) m.detail = what;
}

}  // namespace

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::kLinQ:
      return "linq";
    case AgentKind::kBaseline:
      return "baseline";
    case AgentKind::kOracleGreedy:
      return "oracle";
    case AgentKind::kUniformRandom:
      return "random";
  }
  return "unknown";
}

AgentKind parse_agent_kind(std::string_view name) {
  if (name == "linq") return AgentKind::kLinQ;
  if (name == "baseline" || name == "baseline_lsvi") return AgentKind::kBaseline;
  if (name == "oracle" || name == "oracle_greedy") return AgentKind::kOracleGreedy;
  if (name == "random" || name == "uniform_random") return AgentKind::kUniformRandom;
  throw UsageError("unknown agent '" + std::string(name) + "'");
}

std::string to_string(const InitialStateMode& mode) {
  switch (mode.kind) {
    case InitialStateMode::Kind::kFixed:
      return "fixed:" + std::to_string(mode.state);
    case InitialStateMode::Kind::kCycle:
      return "cycle";
    case InitialStateMode::Kind::kRandom:
      return "random";
  }
  return "unknown";
}

InitialStateMode parse_initial_state_mode(std::string_view text) {
  InitialStateMode mode;
  if (text == "cycle") {
    mode.kind = InitialStateMode::Kind::kCycle;
  } else if (text == "random") {
    mode.kind = InitialStateMode::Kind::kRandom;
  } else if (text == "fixed") {
    mode.kind = InitialStateMode::Kind::kFixed;
  } else if (text.starts_with("fixed:")) {
    mode.kind = InitialStateMode::Kind::kFixed;
    const auto digits = text.substr(6);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), mode.state);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || mode.state < 0) {
      throw UsageError("invalid initial state in '" + std::string(text) + "'");
    }
  } else {
    throw UsageError("unknown initial-state mode '" + std::string(text) + "'");
  }
  return mode;
}

MonitorFlags MonitorFlags::all() {
  MonitorFlags f;
  f.optimism = true;
  f.martingale = true;
  return f;
}

MonitorFlags MonitorFlags::none() {
  MonitorFlags f;
  f.nesting = f.regression = f.potential = f.revisit = false;
  return f;
}

MonitorFlags parse_monitor_flags(std::string_view text) {
  if (text == "all") return MonitorFlags::all();
  if (text == "none") return MonitorFlags::none();
  if (text == "default") return MonitorFlags{};
  MonitorFlags f = MonitorFlags::none();
  for (auto name : split(text, ',')) {
    if (name == "nesting") {
      f.nesting = true;
    } else if (name == "regression") {
      f.regression = true;
    } else if (name == "potential") {
      f.potential = true;
    } else if (name == "revisit") {
      f.revisit = true;
    } else if (name == "optimism") {
      f.optimism = true;
    } else if (name == "martingale") {
      f.martingale = true;
    } else {
      throw UsageError("unknown monitor '" + std::string(name) + "'");
    }
  }
  return f;
}

void validate_config(const ExperimentConfig& config) {
  if (config.episodes < 1) throw UsageError("episodes must be at least 1");
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw UsageError("delta must lie in (0, 1)");
  if (!(config.c_beta > 0.0) || !std::isfinite(config.c_beta)) throw UsageError("c_beta must be positive");
  if (config.gap_override && !(*config.gap_override > 0.0)) throw UsageError("gap override must be positive");
  if (config.beta_override && !(*config.beta_override >= 0.0 && std::isfinite(*config.beta_override))) {
    throw UsageError("beta override must be finite and nonnegative");
  }
}

bool RegretLog::deterministic_monitors_pass() const {
  for (const MonitorResult* m : {&nesting, &regression, &potential, &revisit, &consistency}) {
    if (m->enabled && m->deterministic && !m->pass) return false;
  }
  return true;
}

namespace {

// Shared accounting for all agents: exact values of the policy a path was
// sampled with, cached while the policy is unchanged.
class PathEvaluator {
 public:
  explicit PathEvaluator(const FiniteMdp& mdp) : mdp_(&mdp) {}

  const ValueTable& values(const DeterministicPolicy& policy) {
    if (!cached_ || !(policy == *cached_)) {
      cached_ = policy;
      values_ = policy_evaluate(*mdp_, policy);
    }
    return *values_;
  }

 private:
  const FiniteMdp* mdp_;
  std::optional<DeterministicPolicy> cached_;
  std::optional<ValueTable> values_;
};

class Runner {
 public:
  Runner(const Environment& env, const ExperimentConfig& config, const SeriesSink& sink)
      : env_(env),
        mdp_(env.mdp()),
        dp_(env.dp()),
        config_(config),
        sink_(sink),
        transitions_(derive_seed(config.seed, kTransitionStream)),
        aux_(derive_seed(config.seed, kAuxStream)),
        evaluator_(env.mdp()) {
    if (config.initial_state.kind == InitialStateMode::Kind::kFixed &&
        config.initial_state.state >= mdp_.num_states()) {
      throw UsageError("fixed initial state is out of range");
    }
    log_.agent = config.agent;
    log_.env_label = config.env_label;
    log_.env_kind = env.kind();
    log_.env_seed = env.seed();
    log_.horizon = env.horizon();
    log_.num_states = env.num_states();
    log_.num_actions = env.num_actions();
    log_.dim = env.dim();
    log_.seed = config.seed;
    log_.delta = config.delta;
    log_.c_beta = config.c_beta;
    log_.gap_override = config.gap_override;
    log_.initial_state_mode = to_string(config.initial_state);
    log_.certified_gap = env.certified_gap();
    log_.gap_input = config.gap_override.value_or(env.certified_gap());
    log_.gap_overestimated = log_.gap_input > log_.certified_gap;
    log_.c_beta_below_theory = config.c_beta < 8.0;
    log_.consistency.enabled = true;
    log_.consistency.bound = kConsistencyTolerance;
  }

  RegretLog run() {
    switch (config_.agent) {
      case AgentKind::kLinQ:
        run_linq();
        break;
      case AgentKind::kBaseline:
        run_baseline();
        break;
      case AgentKind::kOracleGreedy:
      case AgentKind::kUniformRandom:
        run_fixed_policies();
        break;
    }
    const double diff = std::abs(log_.total_episode_regret - log_.completing_path_regret);
    log_.consistency.measured = diff;
    log_.consistency.pass = diff <= kConsistencyTolerance;
    if (!log_.consistency.pass) log_.consistency.detail = "episode and path regret totals disagree";
    log_.bounds = evaluate_theorem_bounds(log_);
    return std::move(log_);
  }

 private:
  State initial_state(std::int64_t episode) {
    switch (config_.initial_state.kind) {
      case InitialStateMode::Kind::kFixed:
        return config_.initial_state.state;
      case InitialStateMode::Kind::kCycle:
        return static_cast<State>((episode - 1) % mdp_.num_states());
      case InitialStateMode::Kind::kRandom:
        return static_cast<State>(aux_.below(static_cast<std::uint64_t>(mdp_.num_states())));
    }
    return 0;
  }

  double regret_of(const ValueTable& values, State s1) const {
    return dp_.v_star.at(1, s1) - values.at(1, s1);
  }

  void record_path(std::int64_t path_index, int start_step, double path_regret, bool completes,
                   double episode_regret) {
    log_.paths = path_index;
    log_.samples += mdp_.horizon() - start_step + 1;
    if (start_step > 1) ++revisits_;
    log_.total_path_regret += path_regret;
    if (completes) {
      ++log_.episodes;
      log_.episode_regret.push_back(episode_regret);
      log_.total_episode_regret += episode_regret;
      log_.completing_path_regret += path_regret;
    }
    if (!config_.record_series && !sink_) return;
    PathRecord rec;
    rec.path_index = path_index;
    rec.episode_index = completes ? log_.episodes : log_.episodes + 1;
    rec.start_step = start_step;
    rec.per_path_regret = path_regret;
    rec.cum_path_regret = log_.total_path_regret;
    rec.cum_episode_regret = log_.total_episode_regret;
    rec.revisits_so_far = revisits_;
    rec.samples_so_far = log_.samples;
    if (sink_) sink_(rec);
    if (config_.record_series) log_.series.push_back(rec);
  }

  // Samples a full trajectory under policy; used by agents without revisits.
  void roll_out(const DeterministicPolicy& policy, State s) {
    const int H = mdp_.horizon();
    for (int h = 1; h < H; ++h) {
      const Action a = policy.action(h, s);
      s = sample_next_state(mdp_.transition_row(h, s, a), transitions_.uniform());
    }
  }

  void run_fixed_policies() {
    const int H = mdp_.horizon();
    const int S = mdp_.num_states();
    const int A = mdp_.num_actions();
    DeterministicPolicy policy = dp_.greedy_policy;
    for (std::int64_t n = 1; n <= config_.episodes; ++n) {
      const State s1 = initial_state(n);
      if (config_.agent == AgentKind::kUniformRandom) {
        for (int h = 1; h <= H; ++h) {
          for (State s = 0; s < S; ++s) {
            policy.set_action(h, s, static_cast<Action>(aux_.below(static_cast<std::uint64_t>(A))));
          }
        }
      }
      roll_out(policy, s1);
      const double regret = regret_of(evaluator_.values(policy), s1);
      record_path(n, 1, regret, true, regret);
    }
  }

  void run_baseline() {
    const int H = mdp_.horizon();
    const double beta = config_.beta_override.value_or(
        compute_beta(env_.dim(), H, static_cast<double>(config_.episodes), config_.delta, config_.c_beta));
    log_.beta = beta;
    log_.k_budget = static_cast<double>(config_.episodes);
    BaselineAgent agent(env_.features(), beta);
    for (std::int64_t n = 1; n <= config_.episodes; ++n) {
      const State s1 = initial_state(n);
      agent.run_episode(mdp_, transitions_, s1);
      const double regret = regret_of(evaluator_.values(agent.last_episode_policy()), s1);
      record_path(n, 1, regret, true, regret);
    }
  }

  void run_linq() {
    const int H = mdp_.horizon();
    const int S = mdp_.num_states();
    const int A = mdp_.num_actions();
    const int d = env_.dim();
    const MonitorFlags& mon = config_.monitors;

    log_.k_budget = default_k_budget(config_.episodes, d, H, config_.delta, config_.c_beta, log_.gap_input);
    log_.beta = config_.beta_override.value_or(compute_beta(d, H, log_.k_budget, config_.delta, config_.c_beta));
    LinQAgent agent(env_.features(), LinQConfig{log_.beta, log_.gap_input});

    log_.nesting.enabled = mon.nesting;
    log_.regression.enabled = mon.regression;
    log_.regression.bound = kRegressionTolerance;
    log_.potential.enabled = mon.potential;
    log_.potential.bound = 1.0;
    log_.revisit.enabled = mon.revisit;
    log_.optimism.enabled = mon.optimism;
    log_.optimism.deterministic = false;
    log_.optimism.bound = kOptimismSlack;
    log_.martingale.enabled = mon.martingale;
    log_.martingale.deterministic = false;

    // Visited (s,a) per step for the optimism monitor.
    std::vector<std::vector<char>> seen(static_cast<std::size_t>(H) + 1,
                                        std::vector<char>(static_cast<std::size_t>(S) * A, 0));
    std::vector<std::vector<int>> visited(static_cast<std::size_t>(H) + 1);
    std::vector<char> step_updated(static_cast<std::size_t>(H) + 2, 0);
    double xi2 = 0.0;

    auto check_optimism = [&](std::int64_t k, int h, int cell) {
      const State s = cell / A;
      const Action a = cell % A;
      const double q = agent.q_estimate(h, s, a);
      const double excess = q - dp_.q(h, s, a);
      const double bonus = agent.bonus(h, s, a);
      const double worst = std::max(-excess, excess - 2.0 * bonus);
      log_.optimism.measured = std::max(log_.optimism.measured, worst);
      if (worst > kOptimismSlack) {
        std::ostringstream os;
        os << "path " << k << " step " << h << " (s=" << s << ", a=" << a << "): Q-Q* = " << excess
           << ", 2b = " << 2.0 * bonus;
        note_first(log_.optimism, os.str());
      }
    };

    State s1 = 0;
    while (agent.episodes() < config_.episodes) {
      if (agent.resume_step() == 1) s1 = initial_state(agent.episodes() + 1);
      const PathBuffer& path = agent.sample_path(mdp_, transitions_, s1);
      const std::int64_t k = path.index;
      const int start = path.start_step;
      const ValueTable& path_values = evaluator_.values(agent.last_path_policy());
      const double path_regret = regret_of(path_values, path.states[1]);

      const int stop = agent.backward_pass();
      const auto& updated = agent.last_updated_steps();
      for (int h : updated) step_updated[static_cast<std::size_t>(h)] = 1;

      if (mon.nesting) {
        for (int h : updated) {
          if (h < H && agent.regressor(h + 1).index_set.back() != k) {
            note_first(log_.nesting, "path " + std::to_string(k) + " entered I_" + std::to_string(h) +
                                         " but not I_" + std::to_string(h + 1));
          }
        }
      }
      if (mon.regression) {
        for (int h : updated) {
          const double r = agent.regression_residual(h);
          log_.regression.measured = std::max(log_.regression.measured, r);
          if (!(r <= kRegressionTolerance)) {
            note_first(log_.regression, "path " + std::to_string(k) + " step " + std::to_string(h) +
                                            ": residual " + format_double(r));
          }
        }
      }
      if (mon.potential) {
        for (int h : updated) {
          const StepRegressor& reg = agent.regressor(h);
          const double bound = potential_bound(d, reg.index_set.size());
          const double ratio = reg.potential / bound;
          log_.potential.measured = std::max(log_.potential.measured, ratio);
          if (!(reg.potential <= bound)) {
            note_first(log_.potential, "path " + std::to_string(k) + " step " + std::to_string(h) + ": sum " +
                                           format_double(reg.potential) + " > " + format_double(bound));
          }
        }
      }
      if (mon.optimism) {
        for (int h = start; h <= H; ++h) {
          const auto hi = static_cast<std::size_t>(h);
          const int cell = path.states[hi] * A + path.actions[hi];
          if (!seen[hi][static_cast<std::size_t>(cell)]) {
            seen[hi][static_cast<std::size_t>(cell)] = 1;
            visited[hi].push_back(cell);
            if (!step_updated[hi]) check_optimism(k, h, cell);
          }
        }
        for (int h : updated) {
          const auto hi = static_cast<std::size_t>(h);
          const int cell = path.states[hi] * A + path.actions[hi];
          if (!seen[hi][static_cast<std::size_t>(cell)]) {
            seen[hi][static_cast<std::size_t>(cell)] = 1;
            visited[hi].push_back(cell);
          }
          for (int c : visited[hi]) check_optimism(k, h, c);
        }
      }
      if (mon.martingale) {
        for (int h : updated) {
          if (h == H) continue;
          const auto hi = static_cast<std::size_t>(h);
          const State s = path.states[hi];
          const Action a = path.actions[hi];
          const auto row = mdp_.transition_row(h, s, a);
          double expected = 0.0;
          for (State t = 0; t < S; ++t) {
            expected += row[static_cast<std::size_t>(t)] * (dp_.v_star.at(h + 1, t) - path_values.at(h + 1, t));
          }
          const State next = path.states[hi + 1];
          xi2 += expected - (dp_.v_star.at(h + 1, next) - path_values.at(h + 1, next));
        }
      }
      for (int h : updated) step_updated[static_cast<std::size_t>(h)] = 0;

      double episode_regret = 0.0;
      if (stop == 0) {
        // π^(n) is evaluated from its own snapshot, independently of the
        // per-path cache, so the consistency check compares two computations.
        const ValueTable episode_values = policy_evaluate(mdp_, agent.episode_policies().back());
        episode_regret = regret_of(episode_values, s1);
      }
      record_path(k, start, path_regret, stop == 0, episode_regret);
    }

    // Final index-set facts.
    log_.index_set_sizes.clear();
    for (int h = 1; h <= H; ++h) log_.index_set_sizes.push_back(agent.regressor(h).index_set.size());
    log_.step_revisits.clear();
    for (int h = 1; h < H; ++h) {
      log_.step_revisits.push_back(agent.regressor(h).index_set.count_not_in(agent.regressor(h + 1).index_set));
    }
    if (mon.nesting) {
      for (int h = 1; h < H; ++h) {
        if (!agent.regressor(h).index_set.subset_of(agent.regressor(h + 1).index_set)) {
          note_first(log_.nesting, "I_" + std::to_string(h) + " is not contained in I_" + std::to_string(h + 1));
        }
      }
      if (log_.index_set_sizes.front() != log_.episodes) {
        note_first(log_.nesting, "|I_1| = " + std::to_string(log_.index_set_sizes.front()) +
                                     " differs from N = " + std::to_string(log_.episodes));
      }
      if (log_.index_set_sizes.back() != log_.paths) {
        note_first(log_.nesting, "|I_H| = " + std::to_string(log_.index_set_sizes.back()) +
                                     " differs from K = " + std::to_string(log_.paths));
      }
      log_.nesting.measured = static_cast<double>(log_.nesting.violations);
    }
    if (mon.revisit) {
      const double total_bound =
          revisit_bound(d, H, static_cast<double>(log_.paths), config_.delta, config_.c_beta, log_.gap_input);
      const double step_bound =
          per_step_revisit_bound(d, H, static_cast<double>(log_.paths), config_.delta, config_.c_beta, log_.gap_input);
      log_.revisit.measured = static_cast<double>(log_.revisits());
      log_.revisit.bound = total_bound;
      if (!(log_.revisit.measured <= total_bound)) {
        note_first(log_.revisit, "K - N = " + std::to_string(log_.revisits()) + " exceeds " + format_double(total_bound));
      }
      for (std::size_t i = 0; i < log_.step_revisits.size(); ++i) {
        if (!(static_cast<double>(log_.step_revisits[i]) <= step_bound)) {
          note_first(log_.revisit, "|I_" + std::to_string(i + 2) + " \\ I_" + std::to_string(i + 1) +
                                       "| exceeds " + format_double(step_bound));
        }
      }
    }
    if (mon.martingale) {
      const double bound = H * std::sqrt(static_cast<double>(H) * static_cast<double>(log_.paths) *
                                         std::log(2.0 / config_.delta));
      log_.martingale.measured = std::abs(xi2);
      log_.martingale.bound = bound;
      log_.martingale.pass = log_.martingale.measured <= bound;
      if (!log_.martingale.pass) log_.martingale.detail = "|xi2| exceeds H*sqrt(HK ln(2/delta))";
    }
  }

  const Environment& env_;
  const FiniteMdp& mdp_;
  const DpSolution& dp_;
  const ExperimentConfig& config_;
  const SeriesSink& sink_;
  Rng transitions_;
  Rng aux_;
  PathEvaluator evaluator_;
  RegretLog log_;
  std::int64_t revisits_ = 0;
};

}  // namespace

RegretLog run_experiment(const Environment& env, const ExperimentConfig& config, const SeriesSink& sink) {
  validate_config(config);
  return Runner(env, config, sink).run();
}

BoundReport evaluate_theorem_bounds(const RegretLog& log) {
  BoundReport report;
  if (log.agent != AgentKind::kLinQ || log.episodes < 1 || log.samples < 1) return report;
  const double d = log.dim;
  const double H = log.horizon;
  const double K = static_cast<double>(log.paths);
  const double N = static_cast<double>(log.episodes);
  const double T = static_cast<double>(log.samples);
  const double c = log.c_beta;
  const double delta = log.delta;
  const double gap_sq = std::isinf(log.certified_gap) ? std::numeric_limits<double>::infinity()
                                                      : log.certified_gap * log.certified_gap;
  const double log_ht = std::log(H * T / delta);
  const double log_kh = std::log(K * H / delta);

  auto check = [](double measured, double bound) {
    return BoundCheck{true, measured, bound, measured <= bound};
  };
  report.revisits = check(static_cast<double>(log.revisits()),
                          revisit_bound(log.dim, log.horizon, K, delta, c, log.gap_input));
  const double max_step =
      log.step_revisits.empty() ? 0.0 : static_cast<double>(*std::max_element(log.step_revisits.begin(), log.step_revisits.end()));
  report.per_step_revisits = check(max_step, per_step_revisit_bound(log.dim, log.horizon, K, delta, c, log.gap_input));
  report.average_regret =
      check(log.average_episode_regret(), 8.0 * c * std::sqrt(d * d * std::pow(H, 7) * log_ht * log_ht / T));
  report.path_regret = check(log.total_path_regret,
                             4.0 * c * std::sqrt(d * d * std::pow(H, 6) * K * log_ht * log_ht) +
                                 4.0 * c * c * d * d * std::pow(H, 6) * log_kh * log_kh / gap_sq);
  const double log_plain = std::log(K * H);
  report.expected_regret =
      check(log.total_path_regret, 17.0 * c * c * d * d * std::pow(H, 7) * log_plain * log_plain / gap_sq);
  report.precondition_applicable = true;
  report.precondition_episodes = 4.0 * c * c * d * d * std::pow(H, 5) * log_ht * log_ht / gap_sq;
  report.precondition_met = N >= report.precondition_episodes;
  return report;
}

std::vector<SweepResult> parallel_sweep(const std::vector<SweepJob>& jobs, unsigned threads) {
  std::vector<SweepResult> results(jobs.size());
  if (jobs.empty()) return results;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        if (!jobs[i].env) throw UsageError("sweep job has no environment");
        results[i].log = run_experiment(*jobs[i].env, jobs[i].config, jobs[i].sink);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  if (threads == 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

namespace {

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

json monitor_json(const MonitorResult& m) {
  json j;
  j["enabled"] = m.enabled;
  j["deterministic"] = m.deterministic;
  j["pass"] = m.enabled ? json(m.pass) : json(nullptr);
  j["measured"] = number(m.measured);
  j["bound"] = number(m.bound);
  j["violations"] = m.violations;
  j["detail"] = m.detail;
  return j;
}

json bound_json(const BoundCheck& b) {
  json j;
  j["applicable"] = b.applicable;
  j["measured"] = number(b.measured);
  j["bound"] = number(b.bound);
  j["pass"] = b.applicable ? json(b.pass) : json(nullptr);
  return j;
}

}  // namespace

std::string summary_json(const RegretLog& log) {
  json j;
  j["agent"] = std::string(to_string(log.agent));
  j["env_label"] = log.env_label;
  j["env"] = {{"kind", std::string(to_string(log.env_kind))},
              {"seed", log.env_seed},
              {"H", log.horizon},
              {"S", log.num_states},
              {"A", log.num_actions},
              {"d", log.dim},
              {"certified_gap", number(log.certified_gap)}};
  j["seed"] = log.seed;
  j["delta"] = log.delta;
  j["c_beta"] = log.c_beta;
  j["gap_override"] = log.gap_override ? number(*log.gap_override) : json(nullptr);
  j["gap_input"] = number(log.gap_input);
  j["initial_state_mode"] = log.initial_state_mode;
  j["beta"] = number(log.beta);
  j["k_budget"] = number(log.k_budget);
  j["flags"] = {{"c_beta_below_theory", log.c_beta_below_theory}, {"gap_overestimated", log.gap_overestimated}};

  j["episodes"] = log.episodes;
  j["paths"] = log.paths;
  j["revisits"] = log.revisits();
  j["samples"] = log.samples;
  j["total_episode_regret"] = log.total_episode_regret;
  j["total_path_regret"] = log.total_path_regret;
  j["average_episode_regret"] = log.average_episode_regret();
  j["index_set_sizes"] = log.index_set_sizes;
  j["step_revisits"] = log.step_revisits;

  j["monitors"] = {{"nesting", monitor_json(log.nesting)},
                   {"regression", monitor_json(log.regression)},
                   {"potential", monitor_json(log.potential)},
                   {"revisit", monitor_json(log.revisit)},
                   {"consistency", monitor_json(log.consistency)},
                   {"optimism", monitor_json(log.optimism)},
                   {"martingale", monitor_json(log.martingale)}};
  j["deterministic_monitors_pass"] = log.deterministic_monitors_pass();

  json revisit = bound_json(log.bounds.revisits);
  revisit["per_step"] = bound_json(log.bounds.per_step_revisits);
  j["revisit_bound"] = std::move(revisit);
  j["bounds"] = {{"average_regret", bound_json(log.bounds.average_regret)},
                 {"path_regret", bound_json(log.bounds.path_regret)},
                 {"expected_regret", bound_json(log.bounds.expected_regret)},
                 {"precondition",
                  {{"applicable", log.bounds.precondition_applicable},
                   {"met", log.bounds.precondition_met},
                   {"required_episodes", number(log.bounds.precondition_episodes)}}}};
  return j.dump(2) + "\n";
}

std::string series_row(const PathRecord& r) {
  std::string out;
  out.reserve(128);
  out += std::to_string(r.path_index);
  out += ',';
  out += std::to_string(r.episode_index);
  out += ',';
  out += std::to_string(r.start_step);
  out += ',';
  out += format_double(r.per_path_regret);
  out += ',';
  out += format_double(r.cum_path_regret);
  out += ',';
  out += format_double(r.cum_episode_regret);
  out += ',';
  out += std::to_string(r.revisits_so_far);
  out += ',';
  out += std::to_string(r.samples_so_far);
  return out;
}

std::string series_csv(const RegretLog& log) {
  std::string out(kSeriesHeader);
  out += '\n';
  for (const auto& r : log.series) {
    out += series_row(r);
    out += '\n';
  }
  return out;
}

}  // namespace linqrl
