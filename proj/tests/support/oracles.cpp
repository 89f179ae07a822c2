#include "support/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace mic::test {

Eigen::MatrixXd brute_force_excitation(const std::vector<Event>& history,
                                       const UserGraph& graph,
                                       const KernelSpec& kernel, int n_cascades,
                                       double t) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(graph.n_users(), n_cascades);
  for (const Event& e : history) {
    if (e.time > t) throw std::invalid_argument("history event after t");
    for (int u = 0; u < graph.n_users(); ++u) {
      const double w = graph.weight(e.user, u);
      if (w > 0.0) out(u, e.cascade) += w * std::exp(-(t - e.time) / kernel.tau);
    }
  }
  return out;
}

double brute_force_marked_intensity(const ModelParams& params,
                                    const UserGraph& graph,
                                    const std::vector<Event>& history, double t,
                                    int u, int c) {
  const int n_c = params.n_cascades();
  // Strict past: kappa(0) = 0, so events at exactly t drop out.
  std::vector<double> excitation(static_cast<std::size_t>(n_c), 0.0);
  for (const Event& e : history) {
    if (e.time >= t) continue;
    excitation[static_cast<std::size_t>(e.cascade)] +=
        graph.weight(e.user, u) * params.kernel.value(t - e.time);
  }
  double lambda = 0.0;
  std::vector<double> contextual(static_cast<std::size_t>(n_c), 0.0);
  for (int k = 0; k < n_c; ++k) {
    lambda += params.baselines(u, k) + excitation[static_cast<std::size_t>(k)];
    double blended = params.baselines(u, k);
    for (int s = 0; s < n_c; ++s) {
      blended += params.sigma(s, k) * excitation[static_cast<std::size_t>(s)];
    }
    contextual[static_cast<std::size_t>(k)] = blended;
  }
  double density;
  if (params.mixing.kind == MixingKind::linear) {
    double total = 0.0;
    for (double x : contextual) total += x;
    density = total > 0.0 ? contextual[static_cast<std::size_t>(c)] / total
                          : 1.0 / static_cast<double>(n_c);
  } else {
    double norm = 0.0;
    for (double x : contextual) norm += std::exp(params.mixing.beta * x);
    density = std::exp(params.mixing.beta * contextual[static_cast<std::size_t>(c)]) / norm;
  }
  return lambda * density;
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa,
               double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)>& f, double a, double fa,
                double b, double fb, double m, double fm, double whole,
                double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, lm, flm);
  const double right = simpson(f, m, fm, b, fb, rm, frm);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  if (b <= a) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  return adaptive(f, a, fa, b, fb, m, fm, simpson(f, a, fa, b, fb, m, fm), tol,
                  48);
}

double central_difference(const std::function<double(double)>& f, double x,
                          double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace mic::test
