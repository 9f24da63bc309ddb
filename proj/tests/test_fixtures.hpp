#pragma once

// Shared builders and independent oracles for the unit tests.

#include <vector>

#include "linqrl/mdp.hpp"
#include "linqrl/rng.hpp"

namespace linqrl::testing_fixtures {

// H=2, S={s0,s1}, A={a0,a1}. Step 1: s0 -a0-> s0, s0 -a1-> s1, s1 -> s1;
// r_1(s0,·) = (0, 0.2), r_1(s1,·) = (0, 0). Step 2: r_2(s0,·) = (0.1, 0.3),
// r_2(s1,·) = (0.9, 0.4).
inline FiniteMdp hand_mdp() {
  std::vector<double> transition = {
      1, 0, 0, 1,  // h=1, s0: a0 -> s0, a1 -> s1
      0, 1, 0, 1,  // h=1, s1: stays
      1, 0, 1, 0,  // h=2, s0 (unused)
      0, 1, 0, 1,  // h=2, s1 (unused)
  };
  std::vector<double> reward = {0, 0.2, 0, 0, 0.1, 0.3, 0.9, 0.4};
  return FiniteMdp(2, 2, 2, std::move(transition), std::move(reward));
}

inline FeatureMap one_hot(int H, int S, int A) {
  const int d = S * A;
  std::vector<double> phi(static_cast<std::size_t>(H) * S * A * d, 0.0);
  for (int h = 0; h < H; ++h) {
    for (int c = 0; c < d; ++c) phi[(static_cast<std::size_t>(h) * d + c) * d + c] = 1.0;
  }
  return FeatureMap(H, S, A, d, phi);
}

inline FiniteMdp random_mdp(Rng& rng, int H, int S, int A) {
  std::vector<double> transition;
  std::vector<double> reward;
  for (int c = 0; c < H * S * A; ++c) {
    reward.push_back(rng.uniform());
    std::vector<double> row(static_cast<std::size_t>(S));
    double total = 0.0;
    for (auto& p : row) total += (p = rng.uniform() < 0.3 ? 0.0 : rng.uniform());
    if (total == 0.0) row[0] = total = 1.0;
    for (auto& p : row) transition.push_back(p / total);
  }
  return FiniteMdp(H, S, A, transition, reward);
}

// Expected return of a policy from s1 by propagating the state distribution
// forward; independent of the backward recursions under test.
inline double forward_return(const FiniteMdp& mdp, const DeterministicPolicy& pi, State s1) {
  const int S = mdp.num_states();
  std::vector<double> dist(static_cast<std::size_t>(S), 0.0);
  dist[static_cast<std::size_t>(s1)] = 1.0;
  double total = 0.0;
  for (int h = 1; h <= mdp.horizon(); ++h) {
    std::vector<double> next(static_cast<std::size_t>(S), 0.0);
    for (State s = 0; s < S; ++s) {
      const double p = dist[static_cast<std::size_t>(s)];
      if (p == 0.0) continue;
      const Action a = pi.action(h, s);
      total += p * mdp.reward(h, s, a);
      const auto row = mdp.transition_row(h, s, a);
      for (State t = 0; t < S; ++t) next[static_cast<std::size_t>(t)] += p * row[static_cast<std::size_t>(t)];
    }
    dist = std::move(next);
  }
  return total;
}

}  // namespace linqrl::testing_fixtures
