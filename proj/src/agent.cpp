#include "linqrl/agent.hpp"

#include <cmath>
#include <limits>

#include "linqrl/errors.hpp"

namespace linqrl {

namespace {

double log_term(int horizon, double num_paths, double delta) {
  return std::log(num_paths * horizon / delta);
}

void check_bound_args(int dim, int horizon, double num_paths, double delta, double c_beta) {
  if (dim <= 0 || horizon <= 0) throw UsageError("dimension and horizon must be positive");
  if (!(num_paths > 0.0)) throw UsageError("path count must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw UsageError("delta must lie in (0, 1)");
  if (!(c_beta > 0.0)) throw UsageError("c_beta must be positive");
}

}  // namespace

double compute_beta(int dim, int horizon, double k_budget, double delta, double c_beta) {
  check_bound_args(dim, horizon, k_budget, delta, c_beta);
  const double lg = log_term(horizon, k_budget, delta);
  if (!(lg > 0.0)) throw UsageError("compute_beta: K_budget·H/delta must exceed 1");
  const double h2 = static_cast<double>(horizon) * horizon;
  return c_beta * std::sqrt(dim * h2 * h2 * lg);
}

double per_step_revisit_bound(int dim, int horizon, double num_paths, double delta, double c_beta,
                              double gap) {
  check_bound_args(dim, horizon, num_paths, delta, c_beta);
  if (!(gap > 0.0)) throw UsageError("gap must be positive");
  if (std::isinf(gap)) return 0.0;
  const double lg = log_term(horizon, num_paths, delta);
  const double h2 = static_cast<double>(horizon) * horizon;
  return 4.0 * c_beta * c_beta * dim * dim * h2 * h2 * lg * lg / (gap * gap);
}

double revisit_bound(int dim, int horizon, double num_paths, double delta, double c_beta, double gap) {
  return horizon * per_step_revisit_bound(dim, horizon, num_paths, delta, c_beta, gap);
}

double default_k_budget(std::int64_t episodes, int dim, int horizon, double delta, double c_beta,
                        double gap) {
  if (episodes <= 0) throw UsageError("episode count must be positive");
  const double n = static_cast<double>(episodes);
  const double revisits = revisit_bound(dim, horizon, n * horizon, delta, c_beta, gap);
  return n * (1.0 + std::ceil(revisits));
}

State sample_next_state(std::span<const double> row, double u) {
  double cumulative = 0.0;
  State last_positive = 0;
  for (std::size_t t = 0; t < row.size(); ++t) {
    if (row[t] <= 0.0) continue;
    cumulative += row[t];
    last_positive = static_cast<State>(t);
    if (u < cumulative) return last_positive;
  }
  return last_positive;
}

StepRegressor::StepRegressor(int dim)
    : covariance(dim),
      reward_sum(Vector::Zero(dim)),
      cross_sum(Matrix::Zero(dim, dim)),
      theta(Vector::Zero(dim)) {}

LinQAgent::LinQAgent(const FeatureMap& features, LinQConfig config)
    : features_(&features),
      config_(config),
      horizon_(features.horizon()),
      num_states_(features.num_states()),
      num_actions_(features.num_actions()),
      dim_(features.dim()),
      zero_theta_(Vector::Zero(features.dim())),
      prev_bonus_(static_cast<std::size_t>(horizon_) + 2, 0.0),
      updated_flag_(static_cast<std::size_t>(horizon_) + 2, false),
      policy_(horizon_, num_states_),
      policy_dirty_(static_cast<std::size_t>(horizon_) + 1, true),
      path_policy_(horizon_, num_states_) {
  if (!(config_.beta >= 0.0) || !std::isfinite(config_.beta)) {
    throw UsageError("LinQAgent: beta must be finite and nonnegative");
  }
  if (!(config_.gap_input > 0.0)) throw UsageError("LinQAgent: gap_input must be positive");
  regressors_.reserve(static_cast<std::size_t>(horizon_));
  for (int h = 0; h < horizon_; ++h) regressors_.emplace_back(dim_);
  path_.states.assign(static_cast<std::size_t>(horizon_) + 2, PathBuffer::kTerminal);
  path_.actions.assign(static_cast<std::size_t>(horizon_) + 1, 0);
  path_.rewards.assign(static_cast<std::size_t>(horizon_) + 1, 0.0);
}

const Vector& LinQAgent::theta(int h) const {
  if (h == horizon_ + 1) return zero_theta_;
  return regressor(h).theta;
}

double LinQAgent::bonus(int h, State s, Action a) const {
  if (h == horizon_ + 1) return 0.0;
  return config_.beta * std::sqrt(regressor(h).covariance.quad_form(features_->phi(h, s, a)));
}

double LinQAgent::previous_bonus(int h) const {
  if (h == horizon_ + 1) return 0.0;
  if (!has_path_) throw UsageError("previous_bonus: no path has been sampled");
  if (updated_flag_[static_cast<std::size_t>(h)]) return prev_bonus_[static_cast<std::size_t>(h)];
  return bonus(h, path_.states[static_cast<std::size_t>(h)], path_.actions[static_cast<std::size_t>(h)]);
}

double LinQAgent::q_estimate(int h, State s, Action a) const {
  const double linear = features_->phi(h, s, a).dot(regressor(h).theta);
  return std::min(linear + bonus(h, s, a), static_cast<double>(horizon_));
}

Action LinQAgent::greedy_action(int h, State s) const {
  Action best = 0;
  double best_q = -std::numeric_limits<double>::infinity();
  for (Action a = 0; a < num_actions_; ++a) {
    const double q = q_estimate(h, s, a);
    if (q > best_q) {
      best_q = q;
      best = a;
    }
  }
  return best;
}

void LinQAgent::refresh_policy_step(int h) {
  for (State s = 0; s < num_states_; ++s) policy_.set_action(h, s, greedy_action(h, s));
  policy_dirty_[static_cast<std::size_t>(h)] = false;
}

const DeterministicPolicy& LinQAgent::current_policy() {
  for (int h = 1; h <= horizon_; ++h) {
    if (policy_dirty_[static_cast<std::size_t>(h)]) refresh_policy_step(h);
  }
  return policy_;
}

const PathBuffer& LinQAgent::sample_path(const FiniteMdp& mdp, Rng& rng, State initial_state) {
  if (pass_pending_) throw UsageError("sample_path: previous path has not been processed");
  if (mdp.horizon() != horizon_ || mdp.num_states() != num_states_ || mdp.num_actions() != num_actions_) {
    throw UsageError("sample_path: MDP shape does not match the feature map");
  }
  path_policy_ = current_policy();
  path_.index = ++paths_;
  path_.start_step = resume_step_;
  if (resume_step_ == 1) {
    if (initial_state < 0 || initial_state >= num_states_) {
      throw UsageError("sample_path: initial state out of range");
    }
    path_.states[1] = initial_state;
  }
  for (int h = resume_step_; h <= horizon_; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    const State s = path_.states[hi];
    const Action a = path_policy_.action(h, s);
    path_.actions[hi] = a;
    path_.rewards[hi] = mdp.reward(h, s, a);
    path_.states[hi + 1] =
        h < horizon_ ? sample_next_state(mdp.transition_row(h, s, a), rng.uniform()) : PathBuffer::kTerminal;
  }
  has_path_ = true;
  pass_pending_ = true;
  return path_;
}

int LinQAgent::backward_pass() {
  if (!pass_pending_) throw UsageError("backward_pass: no freshly sampled path");
  pass_pending_ = false;
  for (int h : updated_) updated_flag_[static_cast<std::size_t>(h)] = false;
  updated_.clear();

  const double threshold = config_.gap_input / 2.0;
  int h = horizon_;
  while (h > 0) {
    const double next_bonus = h == horizon_ ? 0.0 : prev_bonus_[static_cast<std::size_t>(h) + 1];
    if (!(next_bonus < threshold)) break;

    const auto hi = static_cast<std::size_t>(h);
    StepRegressor& reg = regressors_[hi - 1];
    const Vector& phi = features_->phi(h, path_.states[hi], path_.actions[hi]);
    const double q = reg.covariance.quad_form(phi);
    prev_bonus_[hi] = config_.beta * std::sqrt(q);
    updated_flag_[hi] = true;
    reg.potential += q;

    reg.index_set.push_back(path_.index);
    reg.covariance.rank_one_update(phi);
    reg.reward_sum.noalias() += phi * path_.rewards[hi];
    if (h < horizon_) {
      const Vector& phi_next = features_->phi(h + 1, path_.states[hi + 1], path_.actions[hi + 1]);
      reg.cross_sum.noalias() += phi * phi_next.transpose();
    }
    Vector target = reg.reward_sum;
    target.noalias() += reg.cross_sum * theta(h + 1);
    reg.theta = reg.covariance.solve(target);

    updated_.push_back(h);
    policy_dirty_[hi] = true;
    --h;
  }

  resume_step_ = h + 1;
  if (h == 0) {
    ++episodes_;
    episode_policies_.push_back(path_policy_);
  }
  return h;
}

double LinQAgent::regression_residual(int h) const {
  const StepRegressor& reg = regressor(h);
  const Vector& next = theta(h + 1);
  const Matrix& lambda = reg.covariance.lambda();
  double worst = 0.0;
  for (int i = 0; i < dim_; ++i) {
    long double acc = -static_cast<long double>(reg.reward_sum[i]);
    for (int j = 0; j < dim_; ++j) {
      acc += static_cast<long double>(lambda(i, j)) * reg.theta[j];
      acc -= static_cast<long double>(reg.cross_sum(i, j)) * next[j];
    }
    worst = std::max(worst, static_cast<double>(std::fabs(acc)));
  }
  return worst;
}

BaselineAgent::BaselineAgent(const FeatureMap& features, double beta)
    : features_(&features),
      beta_(beta),
      horizon_(features.horizon()),
      num_states_(features.num_states()),
      num_actions_(features.num_actions()),
      dim_(features.dim()),
      policy_(horizon_, num_states_) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw UsageError("BaselineAgent: beta must be finite and nonnegative");
  steps_.reserve(static_cast<std::size_t>(horizon_));
  for (int h = 0; h < horizon_; ++h) steps_.emplace_back(dim_);
  path_.states.assign(static_cast<std::size_t>(horizon_) + 2, PathBuffer::kTerminal);
  path_.actions.assign(static_cast<std::size_t>(horizon_) + 1, 0);
  path_.rewards.assign(static_cast<std::size_t>(horizon_) + 1, 0.0);
}

double BaselineAgent::bonus(int h, State s, Action a) const {
  if (h == horizon_ + 1) return 0.0;
  return beta_ * std::sqrt(covariance(h).quad_form(features_->phi(h, s, a)));
}

double BaselineAgent::q_estimate(int h, State s, Action a) const {
  if (h == horizon_ + 1) return 0.0;
  const double linear = features_->phi(h, s, a).dot(theta(h));
  return std::min(linear + bonus(h, s, a), static_cast<double>(horizon_));
}

Action BaselineAgent::greedy_action(int h, State s) const {
  Action best = 0;
  double best_q = -std::numeric_limits<double>::infinity();
  for (Action a = 0; a < num_actions_; ++a) {
    const double q = q_estimate(h, s, a);
    if (q > best_q) {
      best_q = q;
      best = a;
    }
  }
  return best;
}

const DeterministicPolicy& BaselineAgent::current_policy() {
  for (int h = 1; h <= horizon_; ++h) {
    for (State s = 0; s < num_states_; ++s) policy_.set_action(h, s, greedy_action(h, s));
  }
  return policy_;
}

const PathBuffer& BaselineAgent::run_episode(const FiniteMdp& mdp, Rng& rng, State initial_state) {
  if (mdp.horizon() != horizon_ || mdp.num_states() != num_states_ || mdp.num_actions() != num_actions_) {
    throw UsageError("run_episode: MDP shape does not match the feature map");
  }
  if (initial_state < 0 || initial_state >= num_states_) throw UsageError("run_episode: initial state out of range");
  const DeterministicPolicy& policy = current_policy();
  ++episodes_;
  path_.index = episodes_;
  path_.start_step = 1;
  path_.states[1] = initial_state;
  for (int h = 1; h <= horizon_; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    const State s = path_.states[hi];
    const Action a = policy.action(h, s);
    path_.actions[hi] = a;
    path_.rewards[hi] = mdp.reward(h, s, a);
    path_.states[hi + 1] =
        h < horizon_ ? sample_next_state(mdp.transition_row(h, s, a), rng.uniform()) : PathBuffer::kTerminal;
  }

  std::vector<double> next_values(static_cast<std::size_t>(num_states_), 0.0);
  for (int h = horizon_; h >= 1; --h) {
    const auto hi = static_cast<std::size_t>(h);
    Step& step = steps_[hi - 1];
    step.samples.push_back({path_.states[hi], path_.actions[hi], path_.rewards[hi], path_.states[hi + 1]});
    step.covariance.rank_one_update(features_->phi(h, path_.states[hi], path_.actions[hi]));
    if (h < horizon_) {
      for (State s = 0; s < num_states_; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (Action a = 0; a < num_actions_; ++a) best = std::max(best, q_estimate(h + 1, s, a));
        next_values[static_cast<std::size_t>(s)] = best;
      }
    }
    Vector target = Vector::Zero(dim_);
    for (const Sample& sample : step.samples) {
      const double continuation = h < horizon_ ? next_values[static_cast<std::size_t>(sample.next_state)] : 0.0;
      target.noalias() += features_->phi(h, sample.state, sample.action) * (sample.reward + continuation);
    }
    step.theta = step.covariance.solve(target);
  }
  return path_;
}

}  // namespace linqrl
