#pragma once

#include <Eigen/Dense>

#include <functional>

namespace mic {

/// Euclidean projection onto the probability simplex {x >= 0, sum x = 1}
/// (exact sort-based algorithm).
[[nodiscard]] Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

struct SolverOptions {
  int max_iterations = 200;
  /// First-order stop: infinity norm of the projected-gradient residual
  /// ||P(x - grad) - x||.
  double gradient_tolerance = 1e-8;
  /// Stop once an accepted step improves the objective by less than
  /// value_tolerance * (1 + |f|); relative, so large-scale objectives do not
  /// grind against floating-point noise.
  double value_tolerance = 1e-12;
  double armijo_slope = 1e-4;
  double backtrack_factor = 0.5;
  int max_line_search_steps = 60;
};

struct SolverReport {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Objective callback: returns f(x) and fills *grad when non-null. May return
/// +infinity outside the implicit domain; line searches treat that as a
/// rejected step.
using VectorObjective =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

/// Minimises f over the box x >= 0: projected BFGS with Armijo backtracking
/// along the projection arc. Never accepts a step that increases f. `x` holds
/// the starting point on entry and the solution on exit.
SolverReport minimize_nonnegative(const VectorObjective& f, Eigen::VectorXd& x,
                                  const SolverOptions& options = {});

/// Objective callback over a matrix iterate: returns f(x), fills the
/// same-shape gradient when `grad` is non-null, and the Hessian in flattened
/// coordinates flat(r, c) = r * n_cols + c when `hessian` is non-null.
using MatrixObjective = std::function<double(const Eigen::MatrixXd&,
                                             Eigen::MatrixXd*, Eigen::MatrixXd*)>;

/// Minimises f over matrices whose rows lie on the probability simplex:
/// ridge-damped Newton directions, a row-wise projection arc with Armijo
/// backtracking, and a projected-gradient fallback when the Newton direction
/// is unusable. Monotone in f.
SolverReport minimize_row_stochastic(const MatrixObjective& f, Eigen::MatrixXd& x,
                                     const SolverOptions& options = {});

}  // namespace mic
