#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include <mic/moments.hpp>
#include <mic/rng.hpp>
#include <mic/state.hpp>
#include <mic/types.hpp>

// Deterministic toy models shared across test files.
namespace mic::test {

struct Toy {
  UserGraph graph;
  ModelParams params;
};

inline Toy make_toy(int n_users, int n_cascades, MixingKind kind, double beta,
                    std::uint64_t seed, double edge_prob = 0.6,
                    double tau = 1.5) {
  Rng rng(seed);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_users, n_users);
  for (int v = 0; v < n_users; ++v) {
    for (int u = 0; u < n_users; ++u) {
      if (u != v && rng.uniform() < edge_prob) w(v, u) = rng.uniform(0.1, 0.9);
    }
  }
  // Keep every toy comfortably subcritical so simulated logs stay small.
  const double rho_tau = spectral_radius(w) * tau;
  if (rho_tau > 0.7) w *= 0.7 / rho_tau;
  Toy toy{UserGraph(w), {}};
  toy.params.baselines = Eigen::MatrixXd::NullaryExpr(
      n_users, n_cascades, [&rng](Eigen::Index, Eigen::Index) {
        return rng.uniform(0.05, 0.3);
      });
  toy.params.sigma = Eigen::MatrixXd::NullaryExpr(
      n_cascades, n_cascades,
      [&rng](Eigen::Index, Eigen::Index) { return rng.uniform(0.05, 1.0); });
  for (int s = 0; s < n_cascades; ++s) {
    toy.params.sigma.row(s) /= toy.params.sigma.row(s).sum();
  }
  toy.params.kernel.tau = tau;
  toy.params.mixing.kind = kind;
  toy.params.mixing.beta = beta;
  return toy;
}

/// Random, time-sorted event sequence on [0, t_max); not drawn from the model,
/// just structurally valid history for exercising state updates.
inline std::vector<Event> random_history(int n_users, int n_cascades,
                                         int n_events, double t_max,
                                         std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Event> events;
  events.reserve(static_cast<std::size_t>(n_events));
  for (int i = 0; i < n_events; ++i) {
    events.push_back({rng.uniform_int(n_users), rng.uniform_int(n_cascades),
                      rng.uniform(0.0, t_max)});
  }
  std::sort(events.begin(), events.end(), event_less);
  return events;
}

}  // namespace mic::test
