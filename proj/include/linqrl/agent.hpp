#pragma once

#include <cstdint>
#include <vector>

#include "linqrl/index_set.hpp"
#include "linqrl/linalg.hpp"
#include "linqrl/mdp.hpp"
#include "linqrl/rng.hpp"

namespace linqrl {

// c_beta·sqrt(d·H⁴·ln(K_budget·H/delta)). Throws UsageError for nonpositive
// arguments, delta outside (0,1), or K_budget·H/delta ≤ 1. c_beta below 8 is
// accepted; callers flag it.
double compute_beta(int dim, int horizon, double k_budget, double delta, double c_beta);

// Right-hand side of the total revisit bound
// 4·c_beta²·d²·H⁵·ln²(K·H/delta)/gap². Zero for an infinite gap.
double revisit_bound(int dim, int horizon, double num_paths, double delta, double c_beta, double gap);
// Per-step counterpart: 4·c_beta²·d²·H⁴·ln²(K·H/delta)/gap².
double per_step_revisit_bound(int dim, int horizon, double num_paths, double delta, double c_beta,
                              double gap);

// Path budget used to size β before K is known:
// N·(1 + ceil(revisit_bound with K = N·H)).
double default_k_budget(std::int64_t episodes, int dim, int horizon, double delta, double c_beta,
                        double gap);

// One sampled trajectory. Arrays are indexed by step: states[1..H+1],
// actions[1..H], rewards[1..H]; index 0 is unused. states[H+1] is kTerminal.
struct PathBuffer {
  static constexpr State kTerminal = -1;

  std::int64_t index = 0;
  int start_step = 1;
  std::vector<State> states;
  std::vector<Action> actions;
  std::vector<double> rewards;
};

// Per-step regression state: Λ_h, u_h = Σφr, M_h = Σφφ'ᵀ, θ_h and I_h.
struct StepRegressor {
  explicit StepRegressor(int dim);

  CovarianceState covariance;
  Vector reward_sum;
  Matrix cross_sum;
  Vector theta;
  IndexSet index_set;
  // Σ over updates of φᵀΛ⁻¹φ taken before each update.
  double potential = 0.0;
};

struct LinQConfig {
  double beta = 1.0;
  // Threshold gap; a pass continues from step h while the previous bonus at
  // step h+1 is below gap_input/2. May be +inf.
  double gap_input = 1.0;
};

// LinQ-LSVI-UCB with state revisiting. Holds a reference to the feature map,
// which must outlive the agent. Single-threaded.
class LinQAgent {
 public:
  LinQAgent(const FeatureMap& features, LinQConfig config);

  int horizon() const noexcept { return horizon_; }
  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }
  int dim() const noexcept { return dim_; }
  double beta() const noexcept { return config_.beta; }
  double gap_input() const noexcept { return config_.gap_input; }

  // Paths sampled so far (K) and episodes completed (N).
  std::int64_t paths() const noexcept { return paths_; }
  std::int64_t episodes() const noexcept { return episodes_; }
  // Step the next path samples from; 1 starts a new episode.
  int resume_step() const noexcept { return resume_step_; }

  // Steps are 1..H; step H+1 is the virtual terminal step with zero bonus.
  double bonus(int h, State s, Action a) const;
  // b_h^{k-1}(s_h^k, a_h^k) for the most recent path k: the bonus at that
  // path's step-h sample under the covariance as it was before path k's
  // backward pass.
  double previous_bonus(int h) const;
  double q_estimate(int h, State s, Action a) const;
  Action greedy_action(int h, State s) const;

  // Greedy policy with respect to the current estimates.
  const DeterministicPolicy& current_policy();

  // Copies steps below resume_step from the previous path and samples the
  // rest greedily, drawing one uniform per non-terminal transition.
  // initial_state is used only when a new episode starts.
  const PathBuffer& sample_path(const FiniteMdp& mdp, Rng& rng, State initial_state);

  // Backward bonus-thresholded update over the last sampled path. Returns
  // the step at which it stopped (0 when the episode completed).
  int backward_pass();

  const PathBuffer& last_path() const noexcept { return path_; }
  // Policy the last path was sampled with.
  const DeterministicPolicy& last_path_policy() const noexcept { return path_policy_; }
  // Steps updated by the last backward pass, in decreasing order.
  const std::vector<int>& last_updated_steps() const noexcept { return updated_; }
  // π^(n) for every completed episode n.
  const std::vector<DeterministicPolicy>& episode_policies() const noexcept { return episode_policies_; }

  const StepRegressor& regressor(int h) const { return regressors_[static_cast<std::size_t>(h - 1)]; }
  // θ_h; zero for h = H+1.
  const Vector& theta(int h) const;
  // ‖Λ_h·θ_h − (u_h + M_h·θ_{h+1})‖_∞ evaluated in extended precision.
  double regression_residual(int h) const;

 private:
  void refresh_policy_step(int h);

  const FeatureMap* features_;
  LinQConfig config_;
  int horizon_;
  int num_states_;
  int num_actions_;
  int dim_;

  std::vector<StepRegressor> regressors_;
  Vector zero_theta_;
  std::vector<double> prev_bonus_;  // [H+2], index by step
  std::vector<bool> updated_flag_;  // [H+2]
  std::vector<int> updated_;

  DeterministicPolicy policy_;
  std::vector<bool> policy_dirty_;  // [H+1]
  DeterministicPolicy path_policy_;
  std::vector<DeterministicPolicy> episode_policies_;

  PathBuffer path_;
  bool has_path_ = false;
  bool pass_pending_ = false;
  std::int64_t paths_ = 0;
  std::int64_t episodes_ = 0;
  int resume_step_ = 1;
};

// LSVI-UCB: one full trajectory per episode, then a backward least-squares
// pass over all samples so far with targets r + max_a Q_{h+1}(s', a), where
// Q_{h+1} includes its bonus and is clipped at H.
class BaselineAgent {
 public:
  BaselineAgent(const FeatureMap& features, double beta);

  int horizon() const noexcept { return horizon_; }
  double beta() const noexcept { return beta_; }
  std::int64_t episodes() const noexcept { return episodes_; }

  double bonus(int h, State s, Action a) const;
  double q_estimate(int h, State s, Action a) const;
  Action greedy_action(int h, State s) const;
  const DeterministicPolicy& current_policy();

  // Samples one trajectory with the current policy and then updates every
  // step. Returns the trajectory.
  const PathBuffer& run_episode(const FiniteMdp& mdp, Rng& rng, State initial_state);
  // Policy the last episode was sampled with.
  const DeterministicPolicy& last_episode_policy() const noexcept { return policy_; }

  const CovarianceState& covariance(int h) const { return steps_[static_cast<std::size_t>(h - 1)].covariance; }
  const Vector& theta(int h) const { return steps_[static_cast<std::size_t>(h - 1)].theta; }

 private:
  struct Sample {
    State state;
    Action action;
    double reward;
    State next_state;
  };
  struct Step {
    explicit Step(int dim) : covariance(dim), theta(Vector::Zero(dim)) {}
    CovarianceState covariance;
    Vector theta;
    std::vector<Sample> samples;
  };

  const FeatureMap* features_;
  double beta_;
  int horizon_;
  int num_states_;
  int num_actions_;
  int dim_;
  std::vector<Step> steps_;
  DeterministicPolicy policy_;
  PathBuffer path_;
  std::int64_t episodes_ = 0;
};

// Inverse-CDF draw from a probability row using one uniform in [0,1).
// Falls back to the last state with positive mass when rounding leaves u
// above the cumulative sum.
State sample_next_state(std::span<const double> row, double u);

}  // namespace linqrl
