#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "mic/likelihood.hpp"
#include "mic/types.hpp"

// Internal training-time views of an event log. Built once per fit (or per
// gradient evaluation): afterwards every objective evaluation streams plain
// arrays and never touches the log again.
namespace mic::detail {

/// Row-major so that one event's packed data is contiguous and mappable.
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One user's events with the influencer kernel sums at each event time
/// (strict past). Row i of g_flat stores, for event i of this user, the
/// values g_v(s) packed as [v0 s0, v0 s1, ..., v1 s0, ...] where v runs over
/// `influencers` and s over cascades.
struct UserEvents {
  std::vector<int> influencers;
  std::vector<int> cascades;
  std::vector<std::size_t> log_indices;
  RowMajorMatrix g_flat;

  [[nodiscard]] int n_events() const { return static_cast<int>(g_flat.rows()); }
};

struct EventCache {
  int n_users = 0;
  int n_cascades = 0;
  double window_length = 0.0;
  /// Per source v: sum over v's events (context included) of the kernel mass
  /// that falls inside the window. The compensator of user u is then
  /// window_length * sum_c mu_u(c) + sum_v w(v, u) * source_integrals(v).
  Eigen::VectorXd source_integrals;
  std::vector<UserEvents> users;
};

[[nodiscard]] EventCache build_event_cache(const UserGraph& graph,
                                           const KernelSpec& kernel,
                                           const EventLog& log,
                                           const LikelihoodWindow& window,
                                           int n_cascades);

/// Negative log-likelihood slice of one user plus its gradient in that user's
/// free coordinates (baseline row `mu`, influencer weights `w`). Compensator
/// terms included. Returns +infinity when an observed event has zero density
/// (gradients are then unusable). Null gradient pointers skip that work.
[[nodiscard]] double user_negative_log_likelihood(
    const UserEvents& ue, const EventCache& cache, const MixingSpec& mixing,
    const Eigen::MatrixXd& sigma, const Eigen::VectorXd& mu,
    const Eigen::VectorXd& w, Eigen::VectorXd* grad_mu, Eigen::VectorXd* grad_w);

/// Flattened per-event data for the sigma subproblem at fixed baselines and
/// weights: E_i(s) = sum_v w(v, u_i) g_v(s), one row per event.
struct SigmaCache {
  Eigen::MatrixXd e_rows;   ///< n_events x n_cascades
  Eigen::MatrixXd mu_rows;  ///< n_events x n_cascades
  std::vector<int> cascades;
};

[[nodiscard]] SigmaCache build_sigma_cache(const EventCache& cache,
                                           const Eigen::MatrixXd& baselines,
                                           const Eigen::MatrixXd& weights);

/// Sigma-dependent part of the negative log-likelihood (the mark terms), with
/// optional gradient and Hessian in the flattened coordinates
/// flat(s, c) = s * n_cascades + c.
[[nodiscard]] double sigma_negative_log_likelihood(const SigmaCache& cache,
                                                   const MixingSpec& mixing,
                                                   const Eigen::MatrixXd& sigma,
                                                   Eigen::MatrixXd* grad,
                                                   Eigen::MatrixXd* hessian);

}  // namespace mic::detail
