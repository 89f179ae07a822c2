#pragma once

#include <string>
#include <vector>

#include "mic/solvers.hpp"
#include "mic/types.hpp"

namespace mic {

/// Model family ladder. All variants share the Hawkes backbone and differ in
/// the mark layer: whether the cascade interaction matrix is learned or
/// pinned to the identity, and how the mixing density normalises.
enum class ModelVariant {
  ic,       ///< independent cascades: sigma = I, linear mixing
  lin_mic,  ///< interacting cascades, linear mixing, sigma learned
  cc,       ///< competing cascades: sigma = I, Boltzmann mixing
  mic,      ///< interacting + competing: sigma learned, Boltzmann mixing
};

[[nodiscard]] const char* to_string(ModelVariant variant);
[[nodiscard]] ModelVariant model_variant_from_string(const std::string& name);
[[nodiscard]] MixingKind variant_mixing(ModelVariant variant);
[[nodiscard]] bool variant_learns_sigma(ModelVariant variant);

struct FitConfig {
  ModelVariant variant = ModelVariant::mic;
  double beta = 1.0;   ///< inverse temperature (Boltzmann variants only)
  double tau = 1.0;    ///< kernel decay time, fixed during the fit
  int n_cascades = 0;  ///< 0: infer as max cascade id in the log + 1

  /// Outer loop stops once the train log-likelihood improves by less than
  /// epsilon * (1 + |L|) between consecutive iterations (relative, so the
  /// same default works for logs of any size).
  double epsilon = 1e-4;
  int max_outer_iters = 50;
  /// Inner solves run once per outer iteration. They are kept deliberately
  /// loose: the outer alternation revisits both blocks anyway, so precision
  /// beyond the outer epsilon is wasted work.
  SolverOptions sigma_solver{.max_iterations = 8,
                             .gradient_tolerance = 1e-6,
                             .value_tolerance = 1e-8};
  SolverOptions user_solver{.max_iterations = 40,
                            .gradient_tolerance = 1e-6,
                            .value_tolerance = 1e-8};

  double min_baseline = 1e-4;   ///< initialisation floor for baseline rates
  double initial_weight = 0.1;  ///< starting weight on every existing edge
  bool parallel_users = true;
  int threads = 0;  ///< 0: hardware concurrency

  void validate() const;
};

struct FitResult {
  /// Fitted baselines, sigma, kernel and mixing.
  ModelParams params;
  /// Same support as the input graph, weights re-estimated.
  UserGraph graph;
  /// Train log-likelihood at initialisation, then after each outer iteration.
  std::vector<double> trajectory;
  int iterations = 0;
  bool converged = false;

  [[nodiscard]] double log_likelihood() const { return trajectory.back(); }
};

/// Strictly feasible starting point: uniform sigma rows (identity for the
/// fixed-sigma variants), per-user per-cascade empirical rates floored at
/// cfg.min_baseline, and cfg.initial_weight on every edge of the graph.
[[nodiscard]] ModelParams initialize(const EventLog& log, const UserGraph& graph,
                                     const FitConfig& cfg);

/// Alternating maximum-likelihood estimation. Each outer iteration first
/// re-solves the cascade interaction rows over the product of simplices
/// (damped Newton with row-wise projection; skipped for fixed-sigma
/// variants), then every user's baselines and incoming edge weights over the
/// nonnegative orthant (projected quasi-Newton; users are independent given
/// sigma and run in parallel). The train log-likelihood is monotone along the
/// trajectory up to solver tolerance, and the result is deterministic in
/// (log, graph, cfg).
[[nodiscard]] FitResult fit(const EventLog& log, const UserGraph& graph,
                            const FitConfig& cfg);

struct CrossValidationCell {
  double beta = 0.0;
  double tau = 0.0;
  double test_log_likelihood = 0.0;  ///< NaN when the fit or scoring failed
  bool ok = false;
  std::string error;
};

struct CrossValidationResult {
  double best_beta = 0.0;
  double best_tau = 0.0;
  std::vector<CrossValidationCell> table;  ///< beta-major grid order
};

/// Grid search over (beta, tau): fits each pair on the first `split` fraction
/// of events and scores the held-out remainder with the train history as
/// excitation context. Failed cells are recorded with their error and
/// excluded from the argmax; throws NumericalError if every cell fails.
[[nodiscard]] CrossValidationResult cross_validate(
    const EventLog& log, const UserGraph& graph, const FitConfig& cfg,
    const std::vector<double>& beta_grid, const std::vector<double>& tau_grid,
    double split = 0.8);

}  // namespace mic
