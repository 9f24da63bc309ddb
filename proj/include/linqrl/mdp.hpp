#pragma once

#include <span>
#include <vector>

#include "linqrl/linalg.hpp"

// Tabular finite-horizon MDPs, their feature maps, and exact dynamic
// programming. Steps are numbered 1..H throughout the public API; states and
// actions are 0-based indices.
namespace linqrl {

using State = int;
using Action = int;

// Transition rows must sum to 1 within this slack.
inline constexpr double kRowSumSlack = 1e-12;
// Actions whose Q⋆ is within this of the maximum count as optimal.
inline constexpr double kTieTolerance = 1e-9;

class FiniteMdp {
 public:
  // transition is row-major [H][S][A][S], reward is [H][S][A].
  // Throws ValidationError if a row is not a probability vector or a reward
  // leaves [0, 1].
  FiniteMdp(int horizon, int num_states, int num_actions, std::vector<double> transition,
            std::vector<double> reward);

  int horizon() const noexcept { return horizon_; }
  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }

  double reward(int h, State s, Action a) const { return reward_[sa_index(h, s, a)]; }
  std::span<const double> transition_row(int h, State s, Action a) const {
    return {transition_.data() + sa_index(h, s, a) * static_cast<std::size_t>(num_states_),
            static_cast<std::size_t>(num_states_)};
  }
  // Σ_{s'} P_h(s'|s,a)·values[s'].
  double expected(int h, State s, Action a, std::span<const double> values) const;

  const std::vector<double>& transition_data() const noexcept { return transition_; }
  const std::vector<double>& reward_data() const noexcept { return reward_; }

  std::size_t sa_index(int h, State s, Action a) const {
    return (static_cast<std::size_t>(h - 1) * num_states_ + s) * num_actions_ + a;
  }

 private:
  int horizon_;
  int num_states_;
  int num_actions_;
  std::vector<double> transition_;
  std::vector<double> reward_;
};

class FeatureMap {
 public:
  // phi is row-major [H][S][A][d]. Throws ValidationError if any ‖φ‖₂ > 1.
  FeatureMap(int horizon, int num_states, int num_actions, int dim, const std::vector<double>& phi);

  int horizon() const noexcept { return horizon_; }
  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }
  int dim() const noexcept { return dim_; }

  const Vector& phi(int h, State s, Action a) const {
    return phi_[(static_cast<std::size_t>(h - 1) * num_states_ + s) * num_actions_ + a];
  }

  // Row-major flat copy, the inverse of the constructor.
  std::vector<double> flatten() const;

 private:
  int horizon_;
  int num_states_;
  int num_actions_;
  int dim_;
  std::vector<Vector> phi_;
};

class DeterministicPolicy {
 public:
  DeterministicPolicy(int horizon, int num_states, std::vector<Action> actions);
  DeterministicPolicy(int horizon, int num_states, Action fill = 0);

  int horizon() const noexcept { return horizon_; }
  int num_states() const noexcept { return num_states_; }
  Action action(int h, State s) const { return actions_[index(h, s)]; }
  void set_action(int h, State s, Action a) { actions_[index(h, s)] = a; }
  const std::vector<Action>& data() const noexcept { return actions_; }

  friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;

 private:
  std::size_t index(int h, State s) const {
    return static_cast<std::size_t>(h - 1) * num_states_ + s;
  }
  int horizon_;
  int num_states_;
  std::vector<Action> actions_;
};

// Values for steps 1..H+1; step H+1 is identically zero.
class ValueTable {
 public:
  ValueTable(int horizon, int num_states);

  int horizon() const noexcept { return horizon_; }
  int num_states() const noexcept { return num_states_; }
  double at(int h, State s) const { return values_[index(h, s)]; }
  double& at(int h, State s) { return values_[index(h, s)]; }
  std::span<const double> step(int h) const {
    return {values_.data() + index(h, 0), static_cast<std::size_t>(num_states_)};
  }

 private:
  std::size_t index(int h, State s) const {
    return static_cast<std::size_t>(h - 1) * num_states_ + s;
  }
  int horizon_;
  int num_states_;
  std::vector<double> values_;
};

struct DpSolution {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> q_star;  // [H][S][A]
  ValueTable v_star{1, 1};
  std::vector<std::vector<Action>> optimal_actions;  // [H][S]
  std::vector<double> gap_hs;                        // [H][S], +inf if every action is optimal
  double gap_global = 0.0;
  DeterministicPolicy greedy_policy{1, 1};

  double q(int h, State s, Action a) const {
    return q_star[(static_cast<std::size_t>(h - 1) * num_states + s) * num_actions + a];
  }
  double gap(int h, State s) const {
    return gap_hs[static_cast<std::size_t>(h - 1) * num_states + s];
  }
};

// Backward induction for Q⋆, V⋆, optimal-action sets and sub-optimality gaps.
DpSolution dp_solve(const FiniteMdp& mdp);

// Exact V^π by backward induction.
ValueTable policy_evaluate(const FiniteMdp& mdp, const DeterministicPolicy& policy);

struct LinearFit {
  std::vector<Vector> theta;           // one per step
  std::vector<double> theta_norms;     // ‖θ̂_h‖₂
  std::vector<bool> rank_deficient;    // normal equations singular at step h
  double max_residual = 0.0;
};

// Per-step least squares of Q⋆_h onto φ_h; minimum-norm when rank deficient.
LinearFit fit_linear_q(const FiniteMdp& mdp, const FeatureMap& features, const DpSolution& dp);

}  // namespace linqrl
