#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "linqrl/errors.hpp"
#include "linqrl/harness.hpp"
#include "linqrl/linalg.hpp"
#include "linqrl/rng.hpp"

namespace linqrl::cli {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void add(std::vector<VerifyCheck>& out, std::string name, bool pass, std::string measured) {
  out.push_back({std::move(name), pass, std::move(measured)});
}

void linalg_checks(std::vector<VerifyCheck>& out) {
  double worst = 0.0;
  for (int d : {1, 2, 4, 8}) {
    CovarianceState cov(d);
    Rng rng(derive_seed(0x5EED, static_cast<std::uint64_t>(d)));
    for (int i = 0; i < 10000; ++i) {
      Vector phi(d);
      for (int j = 0; j < d; ++j) phi[j] = rng.uniform() - 0.5;
      phi /= phi.norm();
      cov.rank_one_update(phi);
    }
    const Matrix direct = cov.lambda().llt().solve(Matrix::Identity(d, d));
    worst = std::max(worst, (cov.lambda_inv() - direct).cwiseAbs().maxCoeff());
  }
  add(out, "incremental inverse vs direct (10k updates, d=1,2,4,8)", worst <= 1e-8, "max err " + fmt(worst));
}

void environment_checks(const Environment& env, std::vector<VerifyCheck>& out) {
  const auto& fit = env.fit();
  const double theta_bound = 2.0 * env.horizon() * std::sqrt(static_cast<double>(env.dim()));
  const double worst_norm = *std::max_element(fit.theta_norms.begin(), fit.theta_norms.end());
  add(out, "realizability residual <= 1e-9", fit.max_residual <= 1e-9, fmt(fit.max_residual));
  add(out, "theta norm <= 2H sqrt(d)", worst_norm <= theta_bound, fmt(worst_norm) + " / " + fmt(theta_bound));
}

void lemma_checks(const Environment& env, std::vector<VerifyCheck>& out) {
  ExperimentConfig cfg;
  cfg.agent = AgentKind::kLinQ;
  cfg.episodes = 200;
  cfg.delta = 0.1;
  cfg.c_beta = 8.0;
  cfg.monitors = MonitorFlags{};
  const RegretLog log = run_experiment(env, cfg);
  const auto k = std::to_string(log.paths);
  const auto n = std::to_string(log.episodes);
  add(out, "index sets nested after every path", log.nesting.pass, std::to_string(log.nesting.violations) + " violations");
  add(out, "|I_1| = N", log.index_set_sizes.front() == log.episodes,
      std::to_string(log.index_set_sizes.front()) + " vs " + n);
  add(out, "|I_H| = K", log.index_set_sizes.back() == log.paths,
      std::to_string(log.index_set_sizes.back()) + " vs " + k);
  add(out, "per-step revisit bound", log.bounds.per_step_revisits.pass,
      fmt(log.bounds.per_step_revisits.measured) + " <= " + fmt(log.bounds.per_step_revisits.bound));
  add(out, "total revisit bound", log.bounds.revisits.pass,
      fmt(log.bounds.revisits.measured) + " <= " + fmt(log.bounds.revisits.bound));
  add(out, "elliptical potential", log.potential.pass, "max ratio " + fmt(log.potential.measured));
  add(out, "regression identity <= 1e-8", log.regression.pass, fmt(log.regression.measured));
  add(out, "episode/path regret consistency", log.consistency.pass, fmt(log.consistency.measured));
}

void regret_checks(const Environment& env, int seeds, std::vector<VerifyCheck>& out) {
  constexpr double kDelta = 0.2;
  std::vector<SweepJob> jobs;
  auto shared = std::make_shared<const Environment>(env);
  for (int i = 0; i < seeds; ++i) {
    ExperimentConfig cfg;
    cfg.episodes = 200;
    cfg.delta = kDelta;
    cfg.c_beta = 8.0;
    cfg.seed = static_cast<std::uint64_t>(i);
    cfg.monitors = MonitorFlags::all();
    jobs.push_back({shared, cfg, {}});
  }
  int optimism_ok = 0;
  int martingale_ok = 0;
  int errors = 0;
  for (const auto& r : parallel_sweep(jobs)) {
    if (!r.log) {
      ++errors;
      continue;
    }
    optimism_ok += r.log->optimism.pass ? 1 : 0;
    martingale_ok += r.log->martingale.pass ? 1 : 0;
  }
  const double freq = seeds > 0 ? static_cast<double>(optimism_ok) / seeds : 0.0;
  add(out, "optimism event frequency >= 1 - delta - 0.10", errors == 0 && freq >= 1.0 - kDelta - 0.10,
      std::to_string(optimism_ok) + "/" + std::to_string(seeds));
  const double mfreq = seeds > 0 ? static_cast<double>(martingale_ok) / seeds : 0.0;
  add(out, "martingale term within Azuma bound (frequency)", errors == 0 && mfreq >= 1.0 - kDelta - 0.10,
      std::to_string(martingale_ok) + "/" + std::to_string(seeds));

  // Envelope on a precondition-satisfying instance at c_beta = 1.
  auto bandit = std::make_shared<const Environment>(envelope_environment());
  std::vector<SweepJob> env_jobs;
  for (int i = 0; i < seeds; ++i) {
    ExperimentConfig cfg;
    cfg.episodes = 2000;
    cfg.delta = 0.1;
    cfg.c_beta = 1.0;
    cfg.seed = static_cast<std::uint64_t>(i);
    cfg.initial_state.kind = InitialStateMode::Kind::kRandom;
    env_jobs.push_back({bandit, cfg, {}});
  }
  int within = 0;
  int precondition = 0;
  for (const auto& r : parallel_sweep(env_jobs)) {
    if (!r.log) continue;
    within += r.log->bounds.average_regret.pass ? 1 : 0;
    precondition += r.log->bounds.precondition_met ? 1 : 0;
  }
  add(out, "regret envelope in >= 95% of seeds (c_beta = 1)",
      seeds > 0 && precondition == seeds && within >= 0.95 * seeds,
      std::to_string(within) + "/" + std::to_string(seeds) + ", precondition " + std::to_string(precondition));

  ExperimentConfig small;
  small.episodes = 200;
  small.c_beta = 1.0;
  small.initial_state.kind = InitialStateMode::Kind::kRandom;
  ExperimentConfig large = small;
  large.episodes = 2000;
  const double r_small = run_experiment(*bandit, small).average_episode_regret();
  const double r_large = run_experiment(*bandit, large).average_episode_regret();
  add(out, "sublinearity: avg regret(2000) <= 0.55 avg regret(200)", r_large <= 0.55 * r_small,
      fmt(r_large) + " vs " + fmt(r_small));
}

}  // namespace

Environment default_verify_environment() {
  EnvSpec spec;
  spec.kind = EnvKind::kDeterministicChain;
  spec.horizon = 2;
  spec.num_states = 3;
  spec.num_actions = 2;
  spec.dim = 2;
  spec.gap_min = 0.3;
  spec.seed = 1;
  return generate(spec);
}

Environment envelope_environment() {
  // Q⋆ = ⟨φ, (1, 0)⟩: action 0 is optimal in state 0, action 1 in state 1.
  const std::vector<double> phi = {1, 0, 0, 1, 0, 1, 1, 0};
  const std::vector<double> reward = {1, 0, 0, 1};
  const std::vector<double> transition = {1, 0, 1, 0, 0, 1, 0, 1};
  return Environment(EnvKind::kLinearMdp, 0, FiniteMdp(1, 2, 2, transition, reward),
                     FeatureMap(1, 2, 2, 2, phi));
}

std::vector<VerifyCheck> run_verify(const VerifyOptions& options) {
  if (options.suite != "lemmas" && options.suite != "regret" && options.suite != "all") {
    throw UsageError("unknown suite '" + options.suite + "' (expected lemmas, regret or all)");
  }
  if (options.seeds < 1) throw UsageError("--seeds must be at least 1");
  const Environment env = options.env ? *options.env : default_verify_environment();
  std::vector<VerifyCheck> out;
  if (options.suite == "lemmas" || options.suite == "all") {
    linalg_checks(out);
    environment_checks(env, out);
    lemma_checks(env, out);
  }
  if (options.suite == "regret" || options.suite == "all") regret_checks(env, options.seeds, out);
  return out;
}

void print_checks(const std::vector<VerifyCheck>& checks, std::ostream& out) {
  std::size_t width = 0;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  for (const auto& c : checks) {
    out << (c.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width)) << c.name << "  "
        << c.measured << "\n";
  }
}

}  // namespace linqrl::cli
