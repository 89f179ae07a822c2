#include "mic/moments.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mic/errors.hpp"
#include "mic/state.hpp"

namespace mic {

namespace {

// (I - tau W^T)^{-1}; only meaningful in the stable regime, so callers go
// through require_stable first.
Eigen::MatrixXd branching_inverse(const UserGraph& graph, const KernelSpec& kernel) {
  const int n = graph.n_users();
  const Eigen::MatrixXd a =
      Eigen::MatrixXd::Identity(n, n) - kernel.tau * graph.weights().transpose();
  return a.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
}

StabilityReport require_stable(const UserGraph& graph, const KernelSpec& kernel,
                               const char* op) {
  const StabilityReport report = stability(graph, kernel);
  if (!report.stable) {
    std::ostringstream msg;
    msg << op << ": undefined in the non-stationary regime: spectral radius "
        << report.spectral_radius << " * tau " << report.tau << " = "
        << report.spectral_radius * report.tau << " >= 1";
    throw NumericalError(msg.str());
  }
  return report;
}

// The transient closed forms stay valid in unstable regimes as long as
// I - tau W^T is invertible; refuse only when some eigenvalue of W hits the
// critical value 1 / tau.
void require_invertible(const UserGraph& graph, const KernelSpec& kernel,
                        const char* op) {
  if (graph.n_users() == 0) return;
  const Eigen::VectorXcd eigenvalues =
      Eigen::EigenSolver<Eigen::MatrixXd>(graph.weights(), false).eigenvalues();
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const std::complex<double> scaled = 1.0 - kernel.tau * eigenvalues[i];
    if (std::abs(scaled) < 1e-12 * std::max(1.0, kernel.tau * eigenvalues.cwiseAbs().maxCoeff())) {
      std::ostringstream msg;
      msg << op << ": I - tau W^T is singular: eigenvalue " << eigenvalues[i].real();
      if (eigenvalues[i].imag() != 0.0) msg << " + " << eigenvalues[i].imag() << "i";
      msg << " of W equals 1 / tau = " << 1.0 / kernel.tau;
      throw NumericalError(msg.str());
    }
  }
}

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("moment formulas need a finite time t >= 0");
  }
}

// exp(-B^{-1} t / tau) = exp(-(t / tau) (I - tau W^T)).
Eigen::MatrixXd decay_semigroup(const UserGraph& graph, const KernelSpec& kernel,
                                double t) {
  const int n = graph.n_users();
  const Eigen::MatrixXd a =
      (-t / kernel.tau) *
      (Eigen::MatrixXd::Identity(n, n) - kernel.tau * graph.weights().transpose());
  return a.exp();
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("spectral_radius: matrix must be square");
  }
  return Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

StabilityReport stability(const UserGraph& graph, const KernelSpec& kernel) {
  kernel.validate();
  StabilityReport report;
  report.spectral_radius = spectral_radius(graph.weights());
  report.tau = kernel.tau;
  report.margin = 1.0 - report.spectral_radius * kernel.tau;
  report.stable = report.margin > 0.0;
  return report;
}

Eigen::VectorXd expected_intensity(const ModelParams& params,
                                   const UserGraph& graph, double t) {
  params.validate(graph);
  check_time(t);
  require_invertible(graph, params.kernel, "expected_intensity");
  const int n = graph.n_users();
  const Eigen::MatrixXd b = branching_inverse(graph, params.kernel);
  const Eigen::MatrixXd decay = decay_semigroup(graph, params.kernel, t);
  const Eigen::VectorXd mu = params.total_baselines();
  return (b + (Eigen::MatrixXd::Identity(n, n) - b) * decay) * mu;
}

Eigen::VectorXd expected_counts(const ModelParams& params,
                                const UserGraph& graph, double t) {
  params.validate(graph);
  check_time(t);
  require_invertible(graph, params.kernel, "expected_counts");
  const int n = graph.n_users();
  const Eigen::MatrixXd b = branching_inverse(graph, params.kernel);
  const Eigen::MatrixXd decay = decay_semigroup(graph, params.kernel, t);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd mu = params.total_baselines();
  return (b * t + (identity - b) * b * params.kernel.tau * (identity - decay)) * mu;
}

Eigen::VectorXd stationary_intensity(const ModelParams& params,
                                     const UserGraph& graph) {
  params.validate(graph);
  require_stable(graph, params.kernel, "stationary_intensity");
  return branching_inverse(graph, params.kernel) * params.total_baselines();
}

Eigen::MatrixXd stationary_cascade_intensity(const ModelParams& params,
                                             const UserGraph& graph) {
  params.validate(graph);
  require_stable(graph, params.kernel, "stationary_cascade_intensity");
  const Eigen::MatrixXd b = branching_inverse(graph, params.kernel);
  // Stationary contextual intensities, cascade by cascade, then blended.
  const Eigen::MatrixXd contextual = b * params.baselines * params.sigma;
  const Eigen::VectorXd lambda = b * params.total_baselines();
  Eigen::MatrixXd out(graph.n_users(), params.n_cascades());
  for (int u = 0; u < graph.n_users(); ++u) {
    const Eigen::VectorXd f =
        mixing_density(params.mixing, contextual.row(u).transpose());
    out.row(u) = lambda(u) * f.transpose();
  }
  return out;
}

std::vector<Eigen::MatrixXd> first_moment_ode(const ModelParams& params,
                                              const UserGraph& graph,
                                              const std::vector<double>& times) {
  params.validate(graph);
  if (times.empty()) return {};
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i])) {
      throw std::invalid_argument("first_moment_ode: times must be finite and >= 0");
    }
    if (i > 0 && times[i] <= times[i - 1]) {
      throw std::invalid_argument("first_moment_ode: times must be strictly increasing");
    }
  }

  const int n_u = graph.n_users();
  const int n_c = params.n_cascades();
  const Eigen::MatrixXd w_t = graph.weights().transpose();

  // Marked rates lambda_u(t) pi_u(c, t) implied by the excitation matrix g.
  const auto rates = [&](const Eigen::MatrixXd& g) {
    Eigen::MatrixXd r(n_u, n_c);
    for (int u = 0; u < n_u; ++u) {
      const double lambda = params.baselines.row(u).sum() + g.row(u).sum();
      Eigen::VectorXd contextual = params.baselines.row(u).transpose();
      contextual.noalias() += params.sigma.transpose() * g.row(u).transpose();
      r.row(u) = lambda * mixing_density(params.mixing, contextual).transpose();
    }
    return r;
  };

  using State = std::vector<double>;
  const auto unpack = [&](const State& s) {
    return Eigen::Map<const Eigen::MatrixXd>(s.data(), n_u, n_c);
  };

  const auto rhs = [&](const State& s, State& dsdt, double /*t*/) {
    const Eigen::MatrixXd g = unpack(s);
    const Eigen::MatrixXd d = -g / params.kernel.tau + w_t * rates(g);
    Eigen::Map<Eigen::MatrixXd>(dsdt.data(), n_u, n_c) = d;
  };

  std::vector<Eigen::MatrixXd> out;
  out.reserve(times.size());
  const auto observer = [&](const State& s, double /*t*/) {
    out.push_back(rates(unpack(s)));
  };

  State state(static_cast<std::size_t>(n_u) * static_cast<std::size_t>(n_c), 0.0);
  std::vector<double> grid = times;
  bool drop_first = false;
  if (grid.front() > 0.0) {
    // integrate_times observes at every grid point; prepend the start.
    grid.insert(grid.begin(), 0.0);
    drop_first = true;
  }

  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(1e-10, 1e-10, ode::runge_kutta_dopri5<State>());
  if (grid.size() == 1) {
    observer(state, grid.front());
  } else {
    ode::integrate_times(stepper, rhs, state, grid.begin(), grid.end(), 0.05,
                         observer);
  }
  if (drop_first) out.erase(out.begin());
  return out;
}

MomentCurves moment_curves(const ModelParams& params, const UserGraph& graph,
                           const std::vector<double>& times) {
  MomentCurves curves;
  curves.times = times;
  const auto n_times = static_cast<Eigen::Index>(times.size());
  curves.expected_intensity.resize(graph.n_users(), n_times);
  curves.expected_counts.resize(graph.n_users(), n_times);
  for (Eigen::Index k = 0; k < n_times; ++k) {
    const double t = times[static_cast<std::size_t>(k)];
    curves.expected_intensity.col(k) = expected_intensity(params, graph, t);
    curves.expected_counts.col(k) = expected_counts(params, graph, t);
  }
  curves.per_cascade_intensity = first_moment_ode(params, graph, times);
  curves.stable = stability(graph, params.kernel).stable;
  if (curves.stable) {
    curves.stationary_intensity = stationary_intensity(params, graph);
  }
  return curves;
}

}  // namespace mic
