#pragma once

#include <cstdint>
#include <vector>

#include "mic/rng.hpp"
#include "mic/types.hpp"

namespace mic {

/// Random scenario: Erdos-Renyi influence graph with uniform weights and
/// uniform baselines. Defaults give a moderately coupled, stable system.
struct ScenarioConfig {
  int n_users = 50;
  int n_cascades = 3;
  double edge_prob = 0.01;    ///< independent directed edges, no self-loops
  double max_weight = 1.0;    ///< edge weights ~ U(0, max_weight)
  double max_baseline = 0.2;  ///< baselines ~ U(0, max_baseline)
  double tau = 3.0;
  MixingSpec mixing{MixingKind::boltzmann, 33.37};
  Eigen::MatrixXd sigma;  ///< empty => identity

  /// If positive, redraw the graph until spectral_radius(W) * tau is at most
  /// this bound (a value < 1 guarantees stationarity). Each attempt uses an
  /// independent child stream of the seed, so accepted scenarios stay
  /// reproducible. 0 disables the check.
  double max_spectral_radius = 0.0;
  int max_redraws = 64;
};

struct Scenario {
  UserGraph graph;
  ModelParams params;
};

/// Deterministic in (config, seed). Draw order per attempt: edge indicators
/// and weights row by row (influencer major), then baselines row by row.
[[nodiscard]] Scenario generate_scenario(const ScenarioConfig& config,
                                         std::uint64_t seed);

struct SimulateOptions {
  double t_begin = 0.0;
  double t_end = 0.0;
  /// Events at times <= t_begin that warm-start the excitation state.
  std::vector<Event> context;
  /// Guard against runaway (supercritical) regimes.
  std::size_t max_events = 10'000'000;
};

/// Samples one realisation on (t_begin, t_end] by Ogata thinning. The global
/// intensity never exceeds its value just after the previous event (the
/// kernel only decays between events), which provides the dominating rate;
/// the implementation re-tightens the bound at every candidate and verifies
/// it. Returned log has horizon t_end and contains only the new events.
[[nodiscard]] EventLog simulate(const ModelParams& params, const UserGraph& graph,
                                const SimulateOptions& options, Rng& rng);

/// Realisation on [0, horizon] starting from an empty history.
[[nodiscard]] EventLog simulate(const ModelParams& params, const UserGraph& graph,
                                double horizon, Rng& rng);

/// Histogram estimate of per-user event rates: counts in each of n_bins equal
/// bins of [0, horizon], divided by the bin width. Rows are bins, columns are
/// users. If cascade >= 0, only that cascade's events are counted.
[[nodiscard]] Eigen::MatrixXd empirical_intensity(const EventLog& log, int n_users,
                                                  int n_bins, int cascade = -1);

}  // namespace mic
