#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mic/types.hpp"

namespace mic {

/// Index-based split of an event log. `boundary` is the time of the last
/// training event; the held-out window is (boundary, horizon].
struct TrainTestSplit {
  EventLog train;  ///< horizon set to `boundary`
  EventLog test;   ///< horizon kept from the original log
  double boundary = 0.0;
};

/// Splits by event index: train keeps the first floor(fraction * N) events
/// (clamped to [1, N-1]), then grows until no tie group of simultaneous
/// events straddles the boundary. Concatenating train and test restores the
/// original log.
[[nodiscard]] TrainTestSplit split_train_test(const EventLog& log,
                                              double fraction = 0.8);

/// Log-likelihood of the test events over (train.horizon, test.horizon] with
/// the training history as excitation context. `context_fraction` keeps only
/// the last floor(fraction * N_train) training events as context (1 = all).
[[nodiscard]] double test_log_likelihood(const ModelParams& params,
                                         const UserGraph& graph,
                                         const EventLog& train,
                                         const EventLog& test,
                                         double context_fraction = 1.0);

/// Test log-likelihood restricted (per-user) to the ceil(top_fraction * N_u)
/// users with the most training events; ties broken by user id.
[[nodiscard]] double quantile_log_likelihood(const ModelParams& params,
                                             const UserGraph& graph,
                                             const EventLog& train,
                                             const EventLog& test,
                                             double top_fraction);

/// 1 / (1 + mean absolute bin difference): in (0, 1], 1 iff the series are
/// identical, symmetric in its arguments.
[[nodiscard]] double inverse_l1(const Eigen::VectorXd& real_series,
                                const Eigen::VectorXd& sim_series);

/// Product-moment correlation; empty when either series has zero variance
/// (reported as missing rather than 0).
[[nodiscard]] std::optional<double> pearson(const Eigen::VectorXd& real_series,
                                            const Eigen::VectorXd& sim_series);

enum class RankBy { user, cascade };

/// Per-entity event counts sorted descending: the observed log as one series,
/// simulated replications reduced to a per-rank mean and (population) standard
/// deviation.
struct RankedActivity {
  Eigen::VectorXd real;
  Eigen::VectorXd sim_mean;
  Eigen::VectorXd sim_std;
};

[[nodiscard]] RankedActivity ranked_activity(const EventLog& real,
                                             const std::vector<EventLog>& sims,
                                             RankBy by, int n_entities);

/// Compensator increments between consecutive distinct event times inside the
/// window (first increment from window start). Under the generating model
/// these are iid Exp(1) -- the time-rescaling goodness-of-fit transform.
[[nodiscard]] std::vector<double> rescaled_interevent_times(
    const ModelParams& params, const UserGraph& graph, const EventLog& log);
[[nodiscard]] std::vector<double> rescaled_interevent_times(
    const ModelParams& params, const UserGraph& graph, const EventLog& log,
    double t_begin, double t_end, const std::vector<Event>& context);

struct EvaluateOptions {
  double train_fraction = 0.8;
  int n_bins = 100;
  int replications = 10;
  std::uint64_t seed = 1;
  /// Context restrictions for the goodness-of-fit-vs-history curve.
  std::vector<double> context_fractions{0.25, 0.5, 0.75, 1.0};
  /// Top-active-user fractions for the per-quantile test log-likelihood.
  std::vector<double> quantiles{0.05, 0.10, 0.25};
  int threads = 0;  ///< 0: hardware concurrency
};

/// Full goodness-of-fit and activity-replication report for one fitted model
/// against one observed log. Simulated comparisons are warm-started over the
/// test window with the training history as context.
struct MetricReport {
  double test_loglik = 0.0;
  std::vector<double> context_fractions;
  std::vector<double> loglik_vs_train_fraction;
  std::vector<double> inverse_l1_per_cascade;
  double inverse_l1_overall = 0.0;
  std::vector<std::optional<double>> pearson_per_cascade;
  RankedActivity ranked_users;
  RankedActivity ranked_cascades;
  std::map<double, double> quantile_loglik;
};

[[nodiscard]] MetricReport evaluate(const ModelParams& params,
                                    const UserGraph& graph, const EventLog& log,
                                    const EvaluateOptions& options = {});

}  // namespace mic
