#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "linqrl/mdp.hpp"

namespace linqrl {

enum class EnvKind { kLinearMdp, kTabularOneHot, kDeterministicChain };

std::string_view to_string(EnvKind kind);
// Accepts "linear_mdp", "tabular_onehot", "deterministic_chain".
EnvKind parse_env_kind(std::string_view name);

struct EnvSpec {
  EnvKind kind = EnvKind::kLinearMdp;
  int horizon = 1;
  int num_states = 1;
  int num_actions = 1;
  int dim = 1;
  double gap_min = 0.05;
  std::uint64_t seed = 0;
  int max_rejections = 200;
};

// Throws UsageError when the spec violates its invariants
// (d ≤ |S||A| for linear_mdp, d = |S||A| for tabular_onehot, d = 2 for
// deterministic_chain, gap_min > 0).
void validate_spec(const EnvSpec& spec);

// JSON object with keys kind, H, S, A, d, gap_min, seed and optional
// max_rejections. d may be omitted for tabular_onehot.
EnvSpec parse_env_spec(std::string_view json_text);

// An MDP, its features, and the exact solution, certified against the
// realizability and gap requirements. Immutable.
class Environment {
 public:
  // Solves the MDP and checks: fit residual ≤ kMaxFitResidual, ‖θ̂_h‖₂ ≤ 2H√d,
  // and a strictly positive global gap. Throws ValidationError otherwise.
  Environment(EnvKind kind, std::uint64_t seed, FiniteMdp mdp, FeatureMap features);

  static constexpr double kMaxFitResidual = 1e-9;

  EnvKind kind() const noexcept { return kind_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const FiniteMdp& mdp() const noexcept { return mdp_; }
  const FeatureMap& features() const noexcept { return features_; }
  const DpSolution& dp() const noexcept { return dp_; }
  const LinearFit& fit() const noexcept { return fit_; }
  // Equal to dp().gap_global; +inf when no state has a sub-optimal action.
  double certified_gap() const noexcept { return dp_.gap_global; }

  int horizon() const noexcept { return mdp_.horizon(); }
  int num_states() const noexcept { return mdp_.num_states(); }
  int num_actions() const noexcept { return mdp_.num_actions(); }
  int dim() const noexcept { return features_.dim(); }

 private:
  EnvKind kind_;
  std::uint64_t seed_;
  FiniteMdp mdp_;
  FeatureMap features_;
  DpSolution dp_;
  LinearFit fit_;
};

// Draws environments from the spec's family, redrawing with derived seeds
// until the certified gap reaches spec.gap_min. Deterministic in the spec.
// Throws GenerationError after 1 + max_rejections failed draws.
Environment generate(const EnvSpec& spec);

// Single JSON document {meta:{kind,H,S,A,d,seed,gap}, transition, reward, phi}
// with shortest round-trip floats. An infinite gap is written as null.
std::string environment_to_json(const Environment& env);
// Throws ParseError on malformed text (with line/column or field path) and
// ValidationError when the decoded model breaks an invariant.
Environment environment_from_json(std::string_view text);

void save_environment(const Environment& env, const std::filesystem::path& path);
Environment load_environment(const std::filesystem::path& path);

}  // namespace linqrl
