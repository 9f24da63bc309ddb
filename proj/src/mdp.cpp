#include "linqrl/mdp.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "linqrl/errors.hpp"

namespace linqrl {

namespace {

void require_positive(int value, const char* name) {
  if (value <= 0) throw ValidationError(std::string(name) + " must be positive");
}

std::string where(int h, State s, Action a) {
  std::ostringstream os;
  os << "[h=" << h << ", s=" << s << ", a=" << a << "]";
  return os.str();
}

}  // namespace

FiniteMdp::FiniteMdp(int horizon, int num_states, int num_actions, std::vector<double> transition,
                     std::vector<double> reward)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)) {
  require_positive(horizon, "horizon");
  require_positive(num_states, "num_states");
  require_positive(num_actions, "num_actions");
  const std::size_t cells = static_cast<std::size_t>(horizon) * num_states * num_actions;
  if (reward_.size() != cells) throw ValidationError("reward: wrong number of entries");
  if (transition_.size() != cells * num_states) {
    throw ValidationError("transition: wrong number of entries");
  }
  for (int h = 1; h <= horizon; ++h) {
    for (State s = 0; s < num_states; ++s) {
      for (Action a = 0; a < num_actions; ++a) {
        const double r = this->reward(h, s, a);
        if (!(r >= 0.0 && r <= 1.0)) {
          throw ValidationError("reward" + where(h, s, a) + " outside [0, 1]");
        }
        double total = 0.0;
        for (double p : transition_row(h, s, a)) {
          if (!(p >= 0.0) || !std::isfinite(p)) {
            throw ValidationError("transition" + where(h, s, a) + " has a negative or non-finite entry");
          }
          total += p;
        }
        if (std::abs(total - 1.0) > kRowSumSlack) {
          std::ostringstream os;
          os.precision(17);
          os << "transition" << where(h, s, a) << " sums to " << total << ", expected 1";
          throw ValidationError(os.str());
        }
      }
    }
  }
}

double FiniteMdp::expected(int h, State s, Action a, std::span<const double> values) const {
  const auto row = transition_row(h, s, a);
  double acc = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * values[i];
  return acc;
}

FeatureMap::FeatureMap(int horizon, int num_states, int num_actions, int dim,
                       const std::vector<double>& phi)
    : horizon_(horizon), num_states_(num_states), num_actions_(num_actions), dim_(dim) {
  require_positive(horizon, "horizon");
  require_positive(num_states, "num_states");
  require_positive(num_actions, "num_actions");
  require_positive(dim, "feature dimension");
  const std::size_t cells = static_cast<std::size_t>(horizon) * num_states * num_actions;
  if (phi.size() != cells * dim) throw ValidationError("phi: wrong number of entries");
  phi_.reserve(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    Vector v = Eigen::Map<const Vector>(phi.data() + c * dim, dim);
    const double norm = v.norm();
    if (!(norm <= 1.0 + kNormSlack)) {
      const int a = static_cast<int>(c % num_actions);
      const int s = static_cast<int>((c / num_actions) % num_states);
      const int h = static_cast<int>(c / (static_cast<std::size_t>(num_actions) * num_states)) + 1;
      std::ostringstream os;
      os.precision(17);
      os << "phi" << where(h, s, a) << " has norm " << norm << " > 1";
      throw ValidationError(os.str());
    }
    phi_.push_back(std::move(v));
  }
}

std::vector<double> FeatureMap::flatten() const {
  std::vector<double> out;
  out.reserve(phi_.size() * dim_);
  for (const auto& v : phi_) out.insert(out.end(), v.data(), v.data() + dim_);
  return out;
}

DeterministicPolicy::DeterministicPolicy(int horizon, int num_states, std::vector<Action> actions)
    : horizon_(horizon), num_states_(num_states), actions_(std::move(actions)) {
  if (actions_.size() != static_cast<std::size_t>(horizon) * num_states) {
    throw UsageError("DeterministicPolicy: wrong number of entries");
  }
}

DeterministicPolicy::DeterministicPolicy(int horizon, int num_states, Action fill)
    : horizon_(horizon),
      num_states_(num_states),
      actions_(static_cast<std::size_t>(horizon) * num_states, fill) {}

ValueTable::ValueTable(int horizon, int num_states)
    : horizon_(horizon),
      num_states_(num_states),
      values_(static_cast<std::size_t>(horizon + 1) * num_states, 0.0) {}

DpSolution dp_solve(const FiniteMdp& mdp) {
  const int H = mdp.horizon();
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const double inf = std::numeric_limits<double>::infinity();

  DpSolution dp;
  dp.horizon = H;
  dp.num_states = S;
  dp.num_actions = A;
  dp.q_star.assign(static_cast<std::size_t>(H) * S * A, 0.0);
  dp.v_star = ValueTable(H, S);
  dp.optimal_actions.assign(static_cast<std::size_t>(H) * S, {});
  dp.gap_hs.assign(static_cast<std::size_t>(H) * S, inf);
  dp.greedy_policy = DeterministicPolicy(H, S);
  dp.gap_global = inf;

  for (int h = H; h >= 1; --h) {
    const auto next = dp.v_star.step(h + 1);
    for (State s = 0; s < S; ++s) {
      double best = -inf;
      for (Action a = 0; a < A; ++a) {
        const double q = mdp.reward(h, s, a) + (h < H ? mdp.expected(h, s, a, next) : 0.0);
        dp.q_star[mdp.sa_index(h, s, a)] = q;
        best = std::max(best, q);
      }
      dp.v_star.at(h, s) = best;
      const std::size_t hs = static_cast<std::size_t>(h - 1) * S + s;
      auto& optimal = dp.optimal_actions[hs];
      double gap = inf;
      for (Action a = 0; a < A; ++a) {
        const double deficit = best - dp.q(h, s, a);
        if (deficit <= kTieTolerance) {
          optimal.push_back(a);
        } else {
          gap = std::min(gap, deficit);
        }
      }
      dp.greedy_policy.set_action(h, s, optimal.front());
      dp.gap_hs[hs] = gap;
      dp.gap_global = std::min(dp.gap_global, gap);
    }
  }
  return dp;
}

ValueTable policy_evaluate(const FiniteMdp& mdp, const DeterministicPolicy& policy) {
  const int H = mdp.horizon();
  const int S = mdp.num_states();
  if (policy.horizon() != H || policy.num_states() != S) {
    throw UsageError("policy_evaluate: policy shape does not match the MDP");
  }
  ValueTable values(H, S);
  for (int h = H; h >= 1; --h) {
    const auto next = values.step(h + 1);
    for (State s = 0; s < S; ++s) {
      const Action a = policy.action(h, s);
      if (a < 0 || a >= mdp.num_actions()) throw UsageError("policy_evaluate: action out of range");
      values.at(h, s) = mdp.reward(h, s, a) + (h < H ? mdp.expected(h, s, a, next) : 0.0);
    }
  }
  return values;
}

LinearFit fit_linear_q(const FiniteMdp& mdp, const FeatureMap& features, const DpSolution& dp) {
  const int H = mdp.horizon();
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int d = features.dim();
  if (features.horizon() != H || features.num_states() != S || features.num_actions() != A) {
    throw UsageError("fit_linear_q: feature map shape does not match the MDP");
  }

  LinearFit fit;
  for (int h = 1; h <= H; ++h) {
    Matrix design(S * A, d);
    Vector target(S * A);
    for (State s = 0; s < S; ++s) {
      for (Action a = 0; a < A; ++a) {
        design.row(s * A + a) = features.phi(h, s, a).transpose();
        target[s * A + a] = dp.q(h, s, a);
      }
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
    Vector theta = cod.solve(target);
    if (cod.rank() == 0) theta.setZero();
    const double residual = (design * theta - target).cwiseAbs().maxCoeff();
    fit.max_residual = std::max(fit.max_residual, residual);
    fit.theta_norms.push_back(theta.norm());
    fit.rank_deficient.push_back(cod.rank() < d);
    fit.theta.push_back(std::move(theta));
  }
  return fit;
}

}  // namespace linqrl
