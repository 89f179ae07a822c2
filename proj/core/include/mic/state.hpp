#pragma once

#include <Eigen/Dense>

#include "mic/types.hpp"

namespace mic {

/// Running excitation of the exponential kernel, per (user, cascade):
///   excitation(u, c) = sum over past events (v, c, t_j) with v influencing u
///                      of weight(v, u) * exp(-(t_last - t_j) / tau).
/// The exponential kernel makes this a sufficient statistic: intensities at
/// any t >= t_last follow from it without revisiting history.
struct IntensityState {
  double t_last = 0.0;
  Eigen::MatrixXd excitation;  ///< n_users x n_cascades, entries >= 0.

  [[nodiscard]] static IntensityState zero(int n_users, int n_cascades,
                                           double t0 = 0.0);
};

/// Decays the excitation from state.t_last to t (t >= t_last, else throws).
void advance(IntensityState& state, double t, const KernelSpec& kernel);

/// Adds the jump of event e to every follower of e.user. The state must
/// already sit exactly at e.time (advance first); otherwise throws.
void apply_event(IntensityState& state, const Event& e, const UserGraph& graph);

/// Replays `events` (already time-sorted) into the state, decaying between
/// distinct times. Ends at max(last event time, t_end).
void apply_events(IntensityState& state, const std::vector<Event>& events,
                  const UserGraph& graph, const KernelSpec& kernel,
                  double t_end);

/// nu_u^(c): baseline plus excitation accumulated on cascade c itself.
[[nodiscard]] double independent_intensity(const ModelParams& params,
                                           const IntensityState& state, int u,
                                           int c);

/// nu*_u^(c): baseline plus sigma-blended excitation,
///   nu*_u^(c) = baselines(u, c) + sum_s sigma(s, c) * excitation(u, s).
[[nodiscard]] double contextual_intensity(const ModelParams& params,
                                          const IntensityState& state, int u,
                                          int c);

/// All contextual intensities of user u as a vector over cascades.
[[nodiscard]] Eigen::VectorXd contextual_intensities(const ModelParams& params,
                                                     const IntensityState& state,
                                                     int u);

/// lambda_u: total event rate of user u, sum_c independent_intensity(u, c).
/// With row-stochastic sigma it also equals sum_c contextual_intensity(u, c).
[[nodiscard]] double global_intensity(const ModelParams& params,
                                      const IntensityState& state, int u);

/// f_u(c | t): probability that u's next event lands in cascade c.
/// Linear mixing normalises nu* itself; boltzmann normalises exp(beta nu*).
/// If every contextual intensity is zero under linear mixing the density is
/// undefined; we return the uniform distribution and warn once.
[[nodiscard]] Eigen::VectorXd mixing_density(const ModelParams& params,
                                             const IntensityState& state, int u);

/// Mixing density computed directly from a vector of contextual intensities.
[[nodiscard]] Eigen::VectorXd mixing_density(const MixingSpec& mixing,
                                             const Eigen::VectorXd& contextual);

/// lambda_u^(c) = lambda_u * f_u(c | t) for one cascade.
[[nodiscard]] double marked_intensity(const ModelParams& params,
                                      const IntensityState& state, int u, int c);

/// All marked intensities of user u; sums to global_intensity(u).
[[nodiscard]] Eigen::VectorXd marked_intensities(const ModelParams& params,
                                                 const IntensityState& state,
                                                 int u);

}  // namespace mic
