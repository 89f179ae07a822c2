#include "mic/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mic/errors.hpp"

namespace mic {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sufficient-decrease test along a projection arc. The linear model
/// grad . (candidate - x) can lose its sign when the projection clips
/// coordinates, so the decrease requirement is capped at zero: accepted steps
/// never increase the objective.
bool armijo_accept(double f_old, double f_new, double model_decrease,
                   double slope) {
  if (!std::isfinite(f_new)) return false;
  return f_new <= f_old + slope * std::min(model_decrease, 0.0) && f_new <= f_old;
}

Eigen::MatrixXd project_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out.row(r) = project_to_simplex(m.row(r).transpose()).transpose();
  }
  return out;
}

}  // namespace

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw std::invalid_argument("cannot project an empty vector onto the simplex");
  if (!v.allFinite()) throw std::invalid_argument("simplex projection needs finite input");
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double running = 0.0;
  double threshold = sorted.front() - 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    running += sorted[static_cast<std::size_t>(k)];
    const double candidate = (running - 1.0) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] > candidate) threshold = candidate;
  }
  return (v.array() - threshold).cwiseMax(0.0);
}

SolverReport minimize_nonnegative(const VectorObjective& f, Eigen::VectorXd& x,
                                  const SolverOptions& options) {
  const Eigen::Index n = x.size();
  SolverReport report;
  if (n == 0) {
    report.value = f(x, nullptr);
    report.converged = true;
    return report;
  }
  x = x.cwiseMax(0.0);
  Eigen::VectorXd grad(n);
  double value = f(x, &grad);
  if (!std::isfinite(value)) {
    throw NumericalError("solver started at a point with non-finite objective");
  }
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  report.value = value;
  bool scaled_h_inv = false;

  Eigen::VectorXd candidate(n), grad_candidate(n);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double residual =
        ((x - grad).cwiseMax(0.0) - x).lpNorm<Eigen::Infinity>();
    if (residual <= options.gradient_tolerance) {
      report.converged = true;
      break;
    }
    report.iterations = iter + 1;

    auto masked = [&](Eigen::VectorXd d) {
      // Coordinates pinned at the bound with the gradient pushing outward
      // stay put; freeing them would immediately be undone by the projection.
      for (Eigen::Index i = 0; i < n; ++i) {
        if (x[i] <= 0.0 && grad[i] > 0.0) d[i] = 0.0;
      }
      return d;
    };
    Eigen::VectorXd direction = masked(-(h_inv * grad));
    if (!direction.allFinite() || direction.dot(grad) >= 0.0) {
      h_inv.setIdentity();
      scaled_h_inv = false;
      direction = masked(-grad);
    }

    // A raw gradient step far from the optimum can dwarf the iterate; start
    // the backtracking at a trial length comparable to the iterate's own
    // scale instead of burning line-search evaluations on wild overshoots.
    const double direction_scale = direction.lpNorm<Eigen::Infinity>();
    const double iterate_scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
    double step = 1.0;
    if (direction_scale > 16.0 * iterate_scale) {
      step = 16.0 * iterate_scale / direction_scale;
    }
    bool accepted = false;
    double value_candidate = kInf;
    for (int ls = 0; ls < options.max_line_search_steps; ++ls) {
      candidate = (x + step * direction).cwiseMax(0.0);
      value_candidate = f(candidate, &grad_candidate);
      const double model = grad.dot(candidate - x);
      if (armijo_accept(value, value_candidate, model, options.armijo_slope)) {
        accepted = true;
        break;
      }
      step *= options.backtrack_factor;
    }
    if (!accepted) break;  // no acceptable step: numerically stationary

    const Eigen::VectorXd s = candidate - x;
    const Eigen::VectorXd y = grad_candidate - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled_h_inv) {
        // Seed the metric with the Shanno-Phua curvature estimate before the
        // first update; the bare identity is usually orders of magnitude off.
        h_inv *= sy / y.squaredNorm();
        scaled_h_inv = true;
      }
      const Eigen::VectorXd hy = h_inv * y;
      const double yhy = y.dot(hy);
      h_inv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
               (hy * s.transpose() + s * hy.transpose()) / sy;
    }
    const double improvement = value - value_candidate;
    x = candidate;
    grad = grad_candidate;
    value = value_candidate;
    report.value = value;
    if (improvement < options.value_tolerance * (1.0 + std::abs(value))) {
      report.converged = true;
      break;
    }
  }
  report.value = value;
  return report;
}

SolverReport minimize_row_stochastic(const MatrixObjective& f, Eigen::MatrixXd& x,
                                     const SolverOptions& options) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  const Eigen::Index n = rows * cols;
  if (n == 0) throw std::invalid_argument("row-stochastic solver needs a nonempty iterate");
  x = project_rows(x);

  SolverReport report;
  Eigen::MatrixXd grad(rows, cols);
  Eigen::MatrixXd hessian(n, n);
  double value = f(x, &grad, &hessian);
  if (!std::isfinite(value)) {
    throw NumericalError("solver started at a point with non-finite objective");
  }
  report.value = value;
  // Accepted step lengths change slowly from one iteration to the next; in
  // badly conditioned stretches restarting every search at 1 costs a dozen
  // backtracks per iteration, so remember the scale (with room to grow).
  double step_memory = 1.0;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double residual =
        (project_rows(x - grad) - x).cwiseAbs().maxCoeff();
    if (residual <= options.gradient_tolerance) {
      report.converged = true;
      break;
    }
    report.iterations = iter + 1;

    // Damped Newton direction restricted to the affine hull of the feasible
    // set (per-row zero-sum), via the bordered KKT system in the flattened
    // coordinates flat(r, c) = r * cols + c. The simplex projection then only
    // has to clip negative coordinates. The ridge escalates until the
    // direction descends; steepest descent is the last resort.
    Eigen::VectorXd grad_rowmajor(n);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) grad_rowmajor[r * cols + c] = grad(r, c);
    }
    Eigen::VectorXd direction_flat = -grad_rowmajor;
    const double scale = std::max(1.0, hessian.cwiseAbs().maxCoeff());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + rows, n + rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        kkt(n + r, r * cols + c) = 1.0;
        kkt(r * cols + c, n + r) = 1.0;
      }
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + rows);
    rhs.head(n) = -grad_rowmajor;
    for (double ridge = 1e-10 * scale; ridge <= 1e6 * scale; ridge *= 100.0) {
      kkt.topLeftCorner(n, n) =
          hessian + ridge * Eigen::MatrixXd::Identity(n, n);
      const Eigen::VectorXd solution = kkt.partialPivLu().solve(rhs);
      const Eigen::VectorXd newton = solution.head(n);
      if (newton.allFinite() && newton.dot(grad_rowmajor) < 0.0) {
        direction_flat = newton;
        break;
      }
    }
    Eigen::MatrixXd direction(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) direction(r, c) = direction_flat[r * cols + c];
    }

    // Try the Newton arc first; if it stalls (no acceptable step, or an
    // accepted step that barely moves), give the projected-gradient arc a
    // chance before concluding anything. Newton steps can crawl when a
    // coordinate is pinned at the boundary with exploding curvature, while
    // the raw gradient pulls it back inside in one move.
    bool accepted = false;
    Eigen::MatrixXd best_candidate;
    double best_value = kInf;
    double accepted_step = 1.0;
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (attempt == 1) direction = -grad;
      // Simplex rows live in [0, 1]; start huge directions at a sane length.
      const double direction_scale = direction.cwiseAbs().maxCoeff();
      double step = direction_scale > 16.0 ? 16.0 / direction_scale : 1.0;
      step = std::min(step, 4.0 * step_memory);
      Eigen::MatrixXd candidate;
      for (int ls = 0; ls < options.max_line_search_steps; ++ls) {
        candidate = project_rows(x + step * direction);
        const double value_candidate = f(candidate, nullptr, nullptr);
        const double model = (grad.array() * (candidate - x).array()).sum();
        if (armijo_accept(value, value_candidate, model, options.armijo_slope)) {
          if (value_candidate < best_value) {
            best_value = value_candidate;
            best_candidate = candidate;
            accepted = true;
            accepted_step = step;
          }
          break;
        }
        step *= options.backtrack_factor;
      }
      if (accepted &&
          value - best_value >=
              options.value_tolerance * (1.0 + std::abs(value))) {
        break;
      }
    }
    if (!accepted) break;
    step_memory = accepted_step;

    const double improvement = value - best_value;
    x = best_candidate;
    value = f(x, &grad, &hessian);
    report.value = value;
    if (improvement < options.value_tolerance * (1.0 + std::abs(value))) {
      report.converged = true;
      break;
    }
  }
  report.value = value;
  return report;
}

}  // namespace mic
