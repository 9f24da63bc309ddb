#include "cli.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "linqrl/envgen.hpp"
#include "linqrl/errors.hpp"
#include "linqrl/harness.hpp"
#include "verify.hpp"

namespace linqrl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw UsageError("failed writing '" + path.string() + "'");
}

void require_parent_dir(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw UsageError("output directory '" + parent.string() + "' does not exist");
  }
}

// Either inline JSON or a path to a JSON file.
std::string json_argument(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{') return arg;
  return read_file(arg);
}

// An environment file, or an env spec (inline or file) that is generated.
Environment load_env_source(const std::string& arg) {
  const std::string text = json_argument(arg);
  json probe;
  try {
    probe = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + arg + "': " + e.what());
  }
  if (probe.is_object() && probe.contains("meta")) return environment_from_json(text);
  return generate(parse_env_spec(text));
}

struct RunFlags {
  std::string env;
  std::string agent = "linq";
  std::int64_t episodes = 0;
  double delta = 0.1;
  double c_beta = 8.0;
  std::optional<double> gap_override;
  std::uint64_t seed = 0;
  std::string monitors = "default";
  std::string initial_state = "fixed";
  std::string out_prefix;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool sweep) {
  cmd->add_option("--env", f.env, "Environment file, or env spec JSON")->required();
  cmd->add_option("--agent", f.agent, "linq | baseline | oracle | random")->capture_default_str();
  cmd->add_option("--episodes", f.episodes, "Number of episodes N (>= 1)")->required();
  cmd->add_option("--delta", f.delta, "Failure probability in (0,1)")->capture_default_str();
  cmd->add_option("--c-beta", f.c_beta, "Bonus constant c_beta")->capture_default_str();
  cmd->add_option("--gap-override", f.gap_override, "Gap fed to the revisit threshold");
  if (!sweep) cmd->add_option("--seed", f.seed, "Run seed")->capture_default_str();
  cmd->add_option("--monitors", f.monitors, "all | none | default | comma list")->capture_default_str();
  cmd->add_option("--initial-state", f.initial_state, "fixed[:s] | cycle | random")->capture_default_str();
  cmd->add_option("--out-prefix", f.out_prefix, "Output path prefix")->required();
}

ExperimentConfig make_config(const RunFlags& f, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.agent = parse_agent_kind(f.agent);
  cfg.episodes = f.episodes;
  cfg.delta = f.delta;
  cfg.c_beta = f.c_beta;
  cfg.gap_override = f.gap_override;
  cfg.seed = seed;
  cfg.monitors = parse_monitor_flags(f.monitors);
  cfg.initial_state = parse_initial_state_mode(f.initial_state);
  cfg.env_label = f.env;
  validate_config(cfg);
  return cfg;
}

void print_run(const RegretLog& log, std::ostream& out) {
  out << "agent " << to_string(log.agent) << ": N=" << log.episodes << " K=" << log.paths
      << " revisits=" << log.revisits() << " T=" << log.samples << " total regret "
      << format_double(log.total_episode_regret) << " (avg " << format_double(log.average_episode_regret())
      << ")\n";
  if (log.c_beta_below_theory) out << "note: c_beta < 8 is outside the analysed regime\n";
  if (log.gap_overestimated) out << "note: gap override exceeds the certified gap; optimism is not guaranteed\n";
  if (!log.deterministic_monitors_pass()) out << "monitor failure: see summary JSON\n";
}

// Runs one experiment streaming the series CSV; returns the log.
RegretLog run_to_files(const Environment& env, const ExperimentConfig& cfg, const std::string& prefix) {
  std::ofstream series(prefix + ".series.csv", std::ios::binary | std::ios::trunc);
  if (!series) throw UsageError("cannot write '" + prefix + ".series.csv'");
  series << kSeriesHeader << '\n';
  const RegretLog log =
      run_experiment(env, cfg, [&](const PathRecord& r) { series << series_row(r) << '\n'; });
  if (!series) throw UsageError("failed writing '" + prefix + ".series.csv'");
  write_file(prefix + ".summary.json", summary_json(log));
  return log;
}

int cmd_gen(const std::string& spec_arg, EnvSpec spec, const std::string& kind, bool have_kind,
            const std::string& out_path, std::ostream& out) {
  if (!spec_arg.empty()) {
    const int rejections = spec.max_rejections;
    const bool override_rejections = rejections != EnvSpec{}.max_rejections;
    spec = parse_env_spec(json_argument(spec_arg));
    if (override_rejections) spec.max_rejections = rejections;
  } else {
    if (!have_kind) throw UsageError("gen: either --spec or --kind is required");
    spec.kind = parse_env_kind(kind);
    if (spec.kind == EnvKind::kTabularOneHot) spec.dim = spec.num_states * spec.num_actions;
    if (spec.kind == EnvKind::kDeterministicChain) spec.dim = 2;
    validate_spec(spec);
  }
  require_parent_dir(out_path);
  const Environment env = generate(spec);
  save_environment(env, out_path);
  out << "wrote " << out_path << "\n";
  out << "kind " << to_string(env.kind()) << ", H=" << env.horizon() << " S=" << env.num_states()
      << " A=" << env.num_actions() << " d=" << env.dim() << "\n";
  out << "certified gap " << format_double(env.certified_gap()) << "\n";
  out << "fit residual " << format_double(env.fit().max_residual) << "\n";
  out << "theta norms";
  for (double n : env.fit().theta_norms) out << ' ' << format_double(n);
  out << " (bound " << format_double(2.0 * env.horizon() * std::sqrt(static_cast<double>(env.dim()))) << ")\n";
  return kExitOk;
}

int cmd_run(const RunFlags& f, std::ostream& out) {
  const ExperimentConfig cfg = make_config(f, f.seed);
  require_parent_dir(f.out_prefix + ".summary.json");
  const Environment env = load_env_source(f.env);
  const RegretLog log = run_to_files(env, cfg, f.out_prefix);
  print_run(log, out);
  return log.deterministic_monitors_pass() ? kExitOk : kExitMonitor;
}

int cmd_sweep(const RunFlags& f, int seeds, std::uint64_t seed_base, unsigned threads, std::ostream& out,
              std::ostream& err) {
  if (seeds < 1) throw UsageError("--seeds must be at least 1");
  make_config(f, seed_base);
  require_parent_dir(f.out_prefix + ".summary.json");
  auto env = std::make_shared<const Environment>(load_env_source(f.env));

  struct Slot {
    std::string prefix;
    std::unique_ptr<std::ofstream> series;
  };
  std::vector<Slot> slots;
  std::vector<SweepJob> jobs;
  for (int i = 0; i < seeds; ++i) {
    const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(i);
    Slot slot;
    slot.prefix = f.out_prefix + ".seed" + std::to_string(seed);
    slot.series = std::make_unique<std::ofstream>(slot.prefix + ".series.csv", std::ios::binary | std::ios::trunc);
    if (!*slot.series) throw UsageError("cannot write '" + slot.prefix + ".series.csv'");
    *slot.series << kSeriesHeader << '\n';
    slots.push_back(std::move(slot));
    jobs.push_back({env, make_config(f, seed), {}});
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    std::ofstream* stream = slots[i].series.get();
    jobs[i].sink = [stream](const PathRecord& r) { *stream << series_row(r) << '\n'; };
  }

  const auto results = parallel_sweep(jobs, threads);
  int code = kExitOk;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.log) {
      err << "seed " << jobs[i].config.seed << ": " << r.error << "\n";
      code = std::max(code, static_cast<int>(kExitUsage));
      continue;
    }
    write_file(slots[i].prefix + ".summary.json", summary_json(*r.log));
    out << "seed " << jobs[i].config.seed << ": ";
    print_run(*r.log, out);
    if (!r.log->deterministic_monitors_pass()) code = kExitMonitor;
  }
  return code;
}

int cmd_verify(const std::string& suite, int seeds, const std::string& env_arg, std::ostream& out) {
  VerifyOptions options;
  options.suite = suite;
  options.seeds = seeds;
  if (suite != "lemmas" && suite != "regret" && suite != "all") {
    throw UsageError("unknown suite '" + suite + "' (expected lemmas, regret or all)");
  }
  if (!env_arg.empty()) options.env = std::make_shared<const Environment>(load_env_source(env_arg));
  const auto checks = run_verify(options);
  print_checks(checks, out);
  const bool ok = std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
  out << (ok ? "all checks passed\n" : "some checks failed\n");
  return ok ? kExitOk : kExitMonitor;
}

struct Stats {
  double mean = 0.0, median = 0.0, min = 0.0, max = 0.0;
};

Stats stats_of(std::vector<double> v) {
  Stats s;
  std::sort(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += x;
  s.mean = total / static_cast<double>(v.size());
  const std::size_t mid = v.size() / 2;
  s.median = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  s.min = v.front();
  s.max = v.back();
  return s;
}

double number_field(const json& j, const char* key, const std::string& file) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ParseError(file + ": missing numeric field '" + key + "'");
  return j.at(key).get<double>();
}

int cmd_summarize(const std::string& pattern, const std::string& out_path, std::ostream& out) {
  glob_t matches{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &matches);
  std::vector<std::string> files;
  if (rc == 0) {
    for (std::size_t i = 0; i < matches.gl_pathc; ++i) files.emplace_back(matches.gl_pathv[i]);
  }
  globfree(&matches);
  if (files.empty()) throw UsageError("summarize: no files match '" + pattern + "'");
  std::sort(files.begin(), files.end());
  require_parent_dir(out_path);

  struct Group {
    std::string agent;
    std::string env;
    std::vector<double> regret, revisits, samples;
  };
  std::vector<Group> groups;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& file : files) {
    json j;
    try {
      j = json::parse(read_file(file));
    } catch (const json::parse_error& e) {
      throw ParseError(file + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("agent") || !j.contains("env")) {
      throw ParseError(file + ": not a run summary");
    }
    const auto& e = j.at("env");
    std::ostringstream env;
    env << e.value("kind", "?") << " H=" << e.value("H", 0) << " S=" << e.value("S", 0) << " A=" << e.value("A", 0)
        << " d=" << e.value("d", 0) << " seed=" << e.value("seed", std::uint64_t{0});
    const auto key = std::make_pair(j.at("agent").get<std::string>(), env.str());
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) groups.push_back({key.first, key.second, {}, {}, {}});
    Group& g = groups[it->second];
    g.regret.push_back(number_field(j, "average_episode_regret", file));
    g.revisits.push_back(number_field(j, "revisits", file));
    g.samples.push_back(number_field(j, "samples", file));
  }

  std::ostringstream csv;
  csv << "agent,env,runs";
  for (const char* metric : {"avg_regret", "revisits", "samples"}) {
    for (const char* stat : {"mean", "median", "min", "max"}) csv << ',' << metric << '_' << stat;
  }
  csv << '\n';
  for (const auto& g : groups) {
    csv << g.agent << ",\"" << g.env << "\"," << g.regret.size();
    for (const auto* series : {&g.regret, &g.revisits, &g.samples}) {
      const Stats s = stats_of(*series);
      csv << ',' << format_double(s.mean) << ',' << format_double(s.median) << ',' << format_double(s.min) << ','
          << format_double(s.max);
    }
    csv << '\n';
  }
  write_file(out_path, csv.str());
  out << "summarized " << files.size() << " file(s) into " << groups.size() << " group(s): " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear-Q RL with state revisiting: environments, experiments and verification", "linqrl"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a certified environment");
  std::string gen_spec, gen_kind, gen_out;
  EnvSpec gen_params;
  gen->add_option("--spec", gen_spec, "Env spec JSON (file or inline)");
  auto* kind_opt = gen->add_option("--kind", gen_kind, "linear_mdp | tabular_onehot | deterministic_chain");
  gen->add_option("--H", gen_params.horizon, "Horizon");
  gen->add_option("--S", gen_params.num_states, "Number of states");
  gen->add_option("--A", gen_params.num_actions, "Number of actions");
  gen->add_option("--d", gen_params.dim, "Feature dimension");
  gen->add_option("--gap-min", gen_params.gap_min, "Minimum certified gap")->capture_default_str();
  gen->add_option("--seed", gen_params.seed, "Generator seed")->capture_default_str();
  gen->add_option("--max-rejections", gen_params.max_rejections, "Redraw budget")->capture_default_str();
  gen->add_option("--out", gen_out, "Output environment file")->required();
  gen->get_option("--spec")->excludes(kind_opt);

  // run
  auto* run = app.add_subcommand("run", "Run one experiment");
  RunFlags run_flags;
  add_run_flags(run, run_flags, false);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per seed in parallel");
  RunFlags sweep_flags;
  int sweep_seeds = 1;
  std::uint64_t seed_base = 0;
  unsigned threads = 0;
  add_run_flags(sweep, sweep_flags, true);
  sweep->add_option("--seeds", sweep_seeds, "Number of seeds M")->capture_default_str();
  sweep->add_option("--seed-base", seed_base, "First seed")->capture_default_str();
  sweep->add_option("--threads", threads, "Worker threads (0 = hardware)")->capture_default_str();

  // verify
  auto* verify = app.add_subcommand("verify", "Run the verification suites");
  std::string suite = "all", verify_env;
  int verify_seeds = 50;
  verify->add_option("--suite", suite, "lemmas | regret | all")->capture_default_str();
  verify->add_option("--seeds", verify_seeds, "Seeds for statistical checks")->capture_default_str();
  verify->add_option("--env", verify_env, "Environment file or env spec JSON");

  // summarize
  auto* summarize = app.add_subcommand("summarize", "Aggregate run summaries into CSV");
  std::string inputs, summary_out;
  summarize->add_option("--inputs", inputs, "Glob of *.summary.json files")->required();
  summarize->add_option("--out", summary_out, "Output CSV")->required();

  std::vector<std::string> argv_storage{"linqrl"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto* active = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << active->help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_spec, gen_params, gen_kind, !gen_kind.empty(), gen_out, out);
    if (run->parsed()) return cmd_run(run_flags, out);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_seeds, seed_base, threads, out, err);
    if (verify->parsed()) return cmd_verify(suite, verify_seeds, verify_env, out);
    if (summarize->parsed()) return cmd_summarize(inputs, summary_out, out);
  } catch (const GenerationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitGeneration;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace linqrl::cli
