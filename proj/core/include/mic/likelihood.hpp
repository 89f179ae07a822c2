#pragma once

#include <cstddef>
#include <vector>

#include "mic/types.hpp"

namespace mic {

/// Observation window (t_begin, t_end] with optional warm-start history.
/// Context events (times <= t_begin) shape the excitation seen inside the
/// window but contribute no event terms of their own.
struct LikelihoodWindow {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<Event> context;
};

/// Log-likelihood split into its three ingredients:
///   total = event_terms + partition_terms - compensator.
/// event_terms collects log lambda_u(t_i) plus the unnormalised log mark
/// weight (log nu* for linear mixing, beta nu* for boltzmann);
/// partition_terms collects the -log normaliser of the mark density;
/// compensator is the integral of the total intensity over the window.
struct LikelihoodBreakdown {
  double total = 0.0;
  double event_terms = 0.0;
  double partition_terms = 0.0;
  double compensator = 0.0;
  /// Per-user totals; sums to `total`.
  Eigen::VectorXd per_user;
  /// Indices (into the sorted log) of events the model gives zero density:
  /// the user's global intensity vanished, or linear mixing assigned zero
  /// weight to the observed cascade. Each contributes -infinity to the total.
  std::vector<std::size_t> impossible_events;
};

/// Log-likelihood of the log under the model over [0, log.horizon()].
[[nodiscard]] LikelihoodBreakdown log_likelihood(const ModelParams& params,
                                                 const UserGraph& graph,
                                                 const EventLog& log);

/// Windowed variant: all events of `log` must lie in [t_begin, t_end].
[[nodiscard]] LikelihoodBreakdown log_likelihood(const ModelParams& params,
                                                 const UserGraph& graph,
                                                 const EventLog& log,
                                                 const LikelihoodWindow& window);

/// Integral of each user's global intensity over the window (closed form).
/// Sums to LikelihoodBreakdown::compensator for the same inputs.
[[nodiscard]] Eigen::VectorXd compensator(const ModelParams& params,
                                          const UserGraph& graph,
                                          const EventLog& log,
                                          const LikelihoodWindow& window);

/// One user's slice of the log-likelihood. Equals per_user(user) of the full
/// breakdown; depends on other users' events only through their excitation.
[[nodiscard]] double partial_log_likelihood(const ModelParams& params,
                                            const UserGraph& graph,
                                            const EventLog& log, int user);

/// Gradient of the log-likelihood (ascent direction) in all parameters.
struct LikelihoodGradients {
  double total = 0.0;         ///< the log-likelihood value itself
  Eigen::MatrixXd baselines;  ///< n_users x n_cascades
  /// n_users x n_users; nonzero only on the support of the graph (absent
  /// edges are fixed at zero weight, not free coordinates).
  Eigen::MatrixXd weights;
  /// n_cascades x n_cascades, unconstrained coordinates: project onto
  /// zero-row-sum directions before using it on the simplex.
  Eigen::MatrixXd sigma;
};

[[nodiscard]] LikelihoodGradients log_likelihood_gradients(
    const ModelParams& params, const UserGraph& graph, const EventLog& log);

[[nodiscard]] LikelihoodGradients log_likelihood_gradients(
    const ModelParams& params, const UserGraph& graph, const EventLog& log,
    const LikelihoodWindow& window);

/// Hessian of the negative log-likelihood in the sigma coordinates, indexed
/// by flat(s, c) = s * n_cascades + c. For boltzmann mixing this is positive
/// semidefinite everywhere; for linear mixing it is positive semidefinite
/// along zero-row-sum (simplex-feasible) directions.
[[nodiscard]] Eigen::MatrixXd sigma_hessian(const ModelParams& params,
                                            const UserGraph& graph,
                                            const EventLog& log);

}  // namespace mic
