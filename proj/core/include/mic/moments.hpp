#pragma once

#include <Eigen/Dense>

#include <vector>

#include "mic/types.hpp"

namespace mic {

/// Largest |eigenvalue| of a square matrix.
[[nodiscard]] double spectral_radius(const Eigen::MatrixXd& m);

struct StabilityReport {
  double spectral_radius = 0.0;  ///< rho(W)
  double tau = 0.0;
  bool stable = false;  ///< rho(W) * tau < 1
  /// 1 - rho(W) * tau; positive iff stable, and how far from criticality.
  double margin = 0.0;
};

/// Stationarity check: the expected event counts stay finite iff the spectral
/// radius of the weighted adjacency is below 1 / tau.
[[nodiscard]] StabilityReport stability(const UserGraph& graph,
                                        const KernelSpec& kernel);

/// Expected global intensity per user at time t, for a process started empty
/// at 0:  E[lambda(t)] = [B + (I - B) exp(-B^{-1} t / tau)] mu,
/// with mu the total baselines and B = (I - tau W^T)^{-1}.
/// Valid on finite horizons even in unstable regimes; throws NumericalError
/// only when I - tau W^T is singular (names the offending eigenvalue).
[[nodiscard]] Eigen::VectorXd expected_intensity(const ModelParams& params,
                                                 const UserGraph& graph,
                                                 double t);

/// Expected cumulative event counts per user on [0, t]:
///   E[n(t)] = [B t + (I - B) B tau (I - exp(-B^{-1} t / tau))] mu.
/// The time derivative of this expression is expected_intensity.
[[nodiscard]] Eigen::VectorXd expected_counts(const ModelParams& params,
                                              const UserGraph& graph, double t);

/// Stationary global intensity B mu (the t -> infinity limit).
[[nodiscard]] Eigen::VectorXd stationary_intensity(const ModelParams& params,
                                                   const UserGraph& graph);

/// Stationary marked intensity approximation: each user's stationary rate
/// split across cascades by the mixing density evaluated at the stationary
/// contextual intensities (rows of B * baselines * sigma).
[[nodiscard]] Eigen::MatrixXd stationary_cascade_intensity(
    const ModelParams& params, const UserGraph& graph);

/// Deterministic first-moment closure for the marked intensities. Integrates
///   dg/dt = -g / tau + W^T diag(lambda(t)) pi(t)    (g(0) = 0)
/// where g is the expected excitation per (user, cascade), lambda the global
/// intensity implied by g, and pi the mixing density at the contextual
/// intensities implied by g. Summed over cascades this reduces exactly to the
/// closed-form global dynamics; per cascade it is the moment-closure
/// approximation. Returns lambda_u^(c)(t) = lambda_u(t) pi_u(c, t) at each
/// requested time (ascending, non-negative).
[[nodiscard]] std::vector<Eigen::MatrixXd> first_moment_ode(
    const ModelParams& params, const UserGraph& graph,
    const std::vector<double>& times);

/// Everything the analytic layer knows about one parameter set on one time
/// grid, bundled for serialisation.
struct MomentCurves {
  std::vector<double> times;
  Eigen::MatrixXd expected_intensity;  ///< n_users x n_times
  Eigen::MatrixXd expected_counts;     ///< n_users x n_times
  /// Per-cascade first-moment closure, one n_users x n_cascades matrix per
  /// grid time.
  std::vector<Eigen::MatrixXd> per_cascade_intensity;
  Eigen::VectorXd stationary_intensity;  ///< B mu; empty when unstable
  bool stable = false;
};

[[nodiscard]] MomentCurves moment_curves(const ModelParams& params,
                                         const UserGraph& graph,
                                         const std::vector<double>& times);

}  // namespace mic
