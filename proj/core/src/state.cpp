#include "mic/state.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "mic/errors.hpp"

namespace mic {

namespace {

void check_user(const IntensityState& state, int u) {
  if (u < 0 || u >= state.excitation.rows()) {
    throw std::invalid_argument("user id out of range");
  }
}

void check_cascade(const IntensityState& state, int c) {
  if (c < 0 || c >= state.excitation.cols()) {
    throw std::invalid_argument("cascade id out of range");
  }
}

// Explicit accumulation loops: marked_intensity relies on the independent and
// contextual reductions using the same term order, so that with sigma = I the
// marked path reproduces independent_intensity bit for bit.
double sum_independent(const ModelParams& params, const IntensityState& state,
                       int u) {
  double total = 0.0;
  for (int c = 0; c < params.n_cascades(); ++c) {
    total += params.baselines(u, c) + state.excitation(u, c);
  }
  return total;
}

}  // namespace

IntensityState IntensityState::zero(int n_users, int n_cascades, double t0) {
  IntensityState state;
  state.t_last = t0;
  state.excitation = Eigen::MatrixXd::Zero(n_users, n_cascades);
  return state;
}

void advance(IntensityState& state, double t, const KernelSpec& kernel) {
  if (!std::isfinite(t)) throw std::invalid_argument("advance: time must be finite");
  if (t < state.t_last) {
    throw std::invalid_argument("advance: cannot move the state backwards in time");
  }
  if (t > state.t_last) {
    state.excitation *= std::exp(-(t - state.t_last) / kernel.tau);
    state.t_last = t;
  }
}

void apply_event(IntensityState& state, const Event& e, const UserGraph& graph) {
  if (e.time != state.t_last) {
    throw std::invalid_argument("apply_event: state not advanced to the event time");
  }
  if (e.user < 0 || e.user >= graph.n_users()) {
    throw std::invalid_argument("apply_event: user id out of range");
  }
  check_user(state, e.user);
  check_cascade(state, e.cascade);
  for (int u : graph.followers(e.user)) {
    state.excitation(u, e.cascade) += graph.weight(e.user, u);
  }
}

void apply_events(IntensityState& state, const std::vector<Event>& events,
                  const UserGraph& graph, const KernelSpec& kernel,
                  double t_end) {
  std::size_t i = 0;
  while (i < events.size()) {
    advance(state, events[i].time, kernel);
    // Simultaneous events all land on the state decayed to their common time;
    // jumps only add, so the order within the group is immaterial.
    std::size_t j = i;
    while (j < events.size() && events[j].time == events[i].time) {
      apply_event(state, events[j], graph);
      ++j;
    }
    i = j;
  }
  if (t_end > state.t_last) advance(state, t_end, kernel);
}

double independent_intensity(const ModelParams& params,
                             const IntensityState& state, int u, int c) {
  check_user(state, u);
  check_cascade(state, c);
  return params.baselines(u, c) + state.excitation(u, c);
}

double contextual_intensity(const ModelParams& params,
                            const IntensityState& state, int u, int c) {
  check_user(state, u);
  check_cascade(state, c);
  double blended = 0.0;
  for (int s = 0; s < params.n_cascades(); ++s) {
    blended += params.sigma(s, c) * state.excitation(u, s);
  }
  return params.baselines(u, c) + blended;
}

Eigen::VectorXd contextual_intensities(const ModelParams& params,
                                       const IntensityState& state, int u) {
  Eigen::VectorXd out(params.n_cascades());
  for (int c = 0; c < params.n_cascades(); ++c) {
    out(c) = contextual_intensity(params, state, u, c);
  }
  return out;
}

double global_intensity(const ModelParams& params, const IntensityState& state,
                        int u) {
  check_user(state, u);
  return sum_independent(params, state, u);
}

Eigen::VectorXd mixing_density(const MixingSpec& mixing,
                               const Eigen::VectorXd& contextual) {
  const Eigen::Index n = contextual.size();
  Eigen::VectorXd f(n);
  if (mixing.kind == MixingKind::linear) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) total += contextual(c);
    if (total <= 0.0) {
      static std::once_flag warned;
      std::call_once(warned, [] {
        warn("mixing_density: all contextual intensities are zero; "
             "falling back to the uniform distribution");
      });
      f.setConstant(1.0 / static_cast<double>(n));
      return f;
    }
    for (Eigen::Index c = 0; c < n; ++c) f(c) = contextual(c) / total;
    return f;
  }
  // Boltzmann: softmax(beta * nu*), shifted by the max for stability at
  // large beta.
  const double shift = mixing.beta * contextual.maxCoeff();
  double norm = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    f(c) = std::exp(mixing.beta * contextual(c) - shift);
    norm += f(c);
  }
  f /= norm;
  return f;
}

Eigen::VectorXd mixing_density(const ModelParams& params,
                               const IntensityState& state, int u) {
  return mixing_density(params.mixing, contextual_intensities(params, state, u));
}

double marked_intensity(const ModelParams& params, const IntensityState& state,
                        int u, int c) {
  check_cascade(state, c);
  return marked_intensities(params, state, u)(c);
}

Eigen::VectorXd marked_intensities(const ModelParams& params,
                                   const IntensityState& state, int u) {
  const Eigen::VectorXd contextual = contextual_intensities(params, state, u);
  const double lambda = global_intensity(params, state, u);
  if (params.mixing.kind == MixingKind::linear) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < contextual.size(); ++c) total += contextual(c);
    if (total <= 0.0) {
      return Eigen::VectorXd::Constant(contextual.size(),
                                       lambda / static_cast<double>(contextual.size()));
    }
    // With sigma = I, `total` accumulates the same terms in the same order as
    // global_intensity, so the ratio is exactly 1 and the marked intensity
    // reduces bitwise to the independent one.
    return contextual * (lambda / total);
  }
  return mixing_density(params.mixing, contextual) * lambda;
}

}  // namespace mic
