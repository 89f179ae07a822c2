#include "mic/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "event_cache.hpp"
#include "mic/state.hpp"

namespace mic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) sum += std::exp(x(i) - m);
  return m + std::log(sum);
}

struct MergedStream {
  // Context first, then window events; both sorted, so the concatenation is
  // time-sorted (context <= t_begin <= events).
  std::vector<Event> context;  // sorted copy
  const std::vector<Event>* events = nullptr;

  [[nodiscard]] std::size_t size() const { return context.size() + events->size(); }
  [[nodiscard]] const Event& at(std::size_t i) const {
    return i < context.size() ? context[i] : (*events)[i - context.size()];
  }
  /// Index into the window log, or npos for context events.
  [[nodiscard]] std::size_t log_index(std::size_t i) const {
    return i < context.size() ? npos : i - context.size();
  }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

MergedStream make_stream(const EventLog& log, const LikelihoodWindow& window) {
  if (!(window.t_end >= window.t_begin) || !std::isfinite(window.t_begin) ||
      !std::isfinite(window.t_end)) {
    throw std::invalid_argument("likelihood window: need t_begin <= t_end, finite");
  }
  for (const Event& e : log.events()) {
    if (e.time < window.t_begin || e.time > window.t_end) {
      throw std::invalid_argument("likelihood window: log event outside the window");
    }
  }
  MergedStream stream;
  stream.context = window.context;
  std::sort(stream.context.begin(), stream.context.end(), event_less);
  for (const Event& e : stream.context) {
    if (e.time > window.t_begin) {
      throw std::invalid_argument("likelihood window: context event after t_begin");
    }
  }
  stream.events = &log.events();
  return stream;
}

void check_inputs(const ModelParams& params, const UserGraph& graph,
                  const EventLog& log, const LikelihoodWindow& window) {
  params.validate(graph);
  log.check_ids(graph.n_users(), params.n_cascades());
  for (const Event& e : window.context) {
    if (e.user < 0 || e.user >= graph.n_users() || e.cascade < 0 ||
        e.cascade >= params.n_cascades()) {
      throw std::invalid_argument("likelihood window: context id out of range");
    }
  }
}

}  // namespace

LikelihoodBreakdown log_likelihood(const ModelParams& params,
                                   const UserGraph& graph, const EventLog& log,
                                   const LikelihoodWindow& window) {
  check_inputs(params, graph, log, window);
  const MergedStream stream = make_stream(log, window);
  const int n_u = graph.n_users();
  const double span = window.t_end - window.t_begin;

  LikelihoodBreakdown out;
  Eigen::VectorXd event_u = Eigen::VectorXd::Zero(n_u);
  Eigen::VectorXd partition_u = Eigen::VectorXd::Zero(n_u);
  Eigen::VectorXd comp_u = params.total_baselines() * span;

  auto state = IntensityState::zero(n_u, params.n_cascades(),
                                    stream.size() ? stream.at(0).time : 0.0);
  const double beta = params.mixing.beta;
  const bool boltzmann = params.mixing.kind == MixingKind::boltzmann;

  std::size_t i = 0;
  while (i < stream.size()) {
    const double t = stream.at(i).time;
    std::size_t j = i;
    while (j < stream.size() && stream.at(j).time == t) ++j;

    advance(state, t, params.kernel);
    // Evaluate every window event in the tie group against the pre-jump
    // state, then apply the whole group: simultaneous events never see each
    // other's excitation.
    for (std::size_t k = i; k < j; ++k) {
      const std::size_t idx = stream.log_index(k);
      if (idx == MergedStream::npos) continue;
      const Event& e = stream.at(k);
      const double lambda = global_intensity(params, state, e.user);
      const Eigen::VectorXd nu = contextual_intensities(params, state, e.user);
      if (boltzmann) {
        if (lambda <= 0.0) {
          out.impossible_events.push_back(idx);
          event_u(e.user) = -kInf;
          continue;
        }
        event_u(e.user) += std::log(lambda) + beta * nu(e.cascade);
        partition_u(e.user) -= log_sum_exp(beta * nu);
      } else {
        if (lambda <= 0.0 || nu(e.cascade) <= 0.0) {
          out.impossible_events.push_back(idx);
          event_u(e.user) = -kInf;
          continue;
        }
        event_u(e.user) += std::log(lambda) + std::log(nu(e.cascade));
        partition_u(e.user) -= std::log(nu.sum());
      }
    }
    for (std::size_t k = i; k < j; ++k) {
      const Event& e = stream.at(k);
      apply_event(state, e, graph);
      // This event's kernel mass inside the window, routed to each follower.
      const double lo = window.t_begin - e.time;
      const double hi = window.t_end - e.time;
      if (hi > 0.0) {
        const double mass = params.kernel.integral(lo, hi);
        for (int f : graph.followers(e.user)) {
          comp_u(f) += graph.weight(e.user, f) * mass;
        }
      }
    }
    i = j;
  }

  out.event_terms = event_u.sum();
  out.partition_terms = partition_u.sum();
  out.compensator = comp_u.sum();
  out.per_user = event_u + partition_u - comp_u;
  out.total = out.event_terms + out.partition_terms - out.compensator;
  return out;
}

LikelihoodBreakdown log_likelihood(const ModelParams& params,
                                   const UserGraph& graph, const EventLog& log) {
  return log_likelihood(params, graph, log, {0.0, log.horizon(), {}});
}

Eigen::VectorXd compensator(const ModelParams& params, const UserGraph& graph,
                            const EventLog& log, const LikelihoodWindow& window) {
  check_inputs(params, graph, log, window);
  const MergedStream stream = make_stream(log, window);
  Eigen::VectorXd comp_u =
      params.total_baselines() * (window.t_end - window.t_begin);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const Event& e = stream.at(i);
    const double hi = window.t_end - e.time;
    if (hi <= 0.0) continue;
    const double mass = params.kernel.integral(window.t_begin - e.time, hi);
    for (int f : graph.followers(e.user)) {
      comp_u(f) += graph.weight(e.user, f) * mass;
    }
  }
  return comp_u;
}

double partial_log_likelihood(const ModelParams& params, const UserGraph& graph,
                              const EventLog& log, int user) {
  if (user < 0 || user >= graph.n_users()) {
    throw std::invalid_argument("partial_log_likelihood: user out of range");
  }
  return log_likelihood(params, graph, log).per_user(user);
}

// ---------------------------------------------------------------------------
// Cached views and the assembled gradients.

namespace detail {

EventCache build_event_cache(const UserGraph& graph, const KernelSpec& kernel,
                             const EventLog& log, const LikelihoodWindow& window,
                             int n_cascades) {
  const MergedStream stream = make_stream(log, window);
  const int n_u = graph.n_users();

  EventCache cache;
  cache.n_users = n_u;
  cache.n_cascades = n_cascades;
  cache.window_length = window.t_end - window.t_begin;
  cache.source_integrals = Eigen::VectorXd::Zero(n_u);
  cache.users.resize(static_cast<std::size_t>(n_u));

  std::vector<int> counts(static_cast<std::size_t>(n_u), 0);
  for (const Event& e : log.events()) ++counts[static_cast<std::size_t>(e.user)];
  for (int u = 0; u < n_u; ++u) {
    UserEvents& ue = cache.users[static_cast<std::size_t>(u)];
    ue.influencers = graph.influencers(u);
    const int d = static_cast<int>(ue.influencers.size());
    ue.g_flat.setZero(counts[static_cast<std::size_t>(u)], d * n_cascades);
    ue.cascades.reserve(static_cast<std::size_t>(counts[static_cast<std::size_t>(u)]));
  }

  // Source-indexed kernel sums: g(v, s) = sum of decays of v's past events
  // on cascade s. Shared by every follower of v.
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_u, n_cascades);
  double t_last = stream.size() ? stream.at(0).time : 0.0;

  std::size_t i = 0;
  while (i < stream.size()) {
    const double t = stream.at(i).time;
    std::size_t j = i;
    while (j < stream.size() && stream.at(j).time == t) ++j;

    if (t > t_last) {
      g *= std::exp(-(t - t_last) / kernel.tau);
      t_last = t;
    }
    for (std::size_t k = i; k < j; ++k) {
      const std::size_t idx = stream.log_index(k);
      if (idx == MergedStream::npos) continue;
      const Event& e = stream.at(k);
      UserEvents& ue = cache.users[static_cast<std::size_t>(e.user)];
      const auto row = static_cast<Eigen::Index>(ue.cascades.size());
      for (std::size_t v_idx = 0; v_idx < ue.influencers.size(); ++v_idx) {
        ue.g_flat.row(row).segment(
            static_cast<Eigen::Index>(v_idx) * n_cascades, n_cascades) =
            g.row(ue.influencers[v_idx]);
      }
      ue.cascades.push_back(e.cascade);
      ue.log_indices.push_back(idx);
    }
    for (std::size_t k = i; k < j; ++k) {
      const Event& e = stream.at(k);
      g(e.user, e.cascade) += 1.0;
      const double hi = window.t_end - e.time;
      if (hi > 0.0) {
        cache.source_integrals(e.user) +=
            kernel.integral(window.t_begin - e.time, hi);
      }
    }
    i = j;
  }
  return cache;
}

double user_negative_log_likelihood(const UserEvents& ue, const EventCache& cache,
                                    const MixingSpec& mixing,
                                    const Eigen::MatrixXd& sigma,
                                    const Eigen::VectorXd& mu,
                                    const Eigen::VectorXd& w,
                                    Eigen::VectorXd* grad_mu,
                                    Eigen::VectorXd* grad_w) {
  const int n_c = cache.n_cascades;
  const int d = static_cast<int>(ue.influencers.size());
  const bool boltzmann = mixing.kind == MixingKind::boltzmann;
  const double beta = mixing.beta;

  // Compensator: exact, linear in the parameters.
  double value = cache.window_length * mu.sum();
  if (grad_mu) grad_mu->setConstant(n_c, cache.window_length);
  if (grad_w) grad_w->setZero(d);
  for (int v_idx = 0; v_idx < d; ++v_idx) {
    const double integral = cache.source_integrals(ue.influencers[static_cast<std::size_t>(v_idx)]);
    value += w(v_idx) * integral;
    if (grad_w) (*grad_w)(v_idx) += integral;
  }

  const double mu_total = mu.sum();
  Eigen::VectorXd e_s(n_c), nu(n_c), f(n_c), sigma_f(n_c);
  for (int i = 0; i < ue.n_events(); ++i) {
    // g packed as (s, v) column-major: map(s, v) = flat[v * n_c + s].
    const Eigen::Map<const Eigen::MatrixXd> g(ue.g_flat.row(i).data(), n_c, d);
    e_s.noalias() = g * w;
    const double lambda = mu_total + e_s.sum();
    nu = mu;
    nu.noalias() += sigma.transpose() * e_s;
    const int c_i = ue.cascades[static_cast<std::size_t>(i)];

    if (boltzmann) {
      if (lambda <= 0.0) return kInf;
      const double lse = log_sum_exp(beta * nu);
      value -= std::log(lambda) + beta * nu(c_i) - lse;
      if (grad_mu || grad_w) {
        for (int c = 0; c < n_c; ++c) f(c) = std::exp(beta * nu(c) - lse);
        if (grad_mu) {
          grad_mu->array() -= 1.0 / lambda;
          (*grad_mu)(c_i) -= beta;
          grad_mu->noalias() += beta * f;
        }
        if (grad_w && d > 0) {
          sigma_f.noalias() = sigma * f;  // sum_k sigma(s, k) f(k)
          // d(-L)/dw = -gbar/lambda - beta g sigma(:, c_i) + beta g sigma f
          grad_w->noalias() -=
              g.colwise().sum().transpose() / lambda;
          grad_w->noalias() -= beta * (g.transpose() * sigma.col(c_i));
          grad_w->noalias() += beta * (g.transpose() * sigma_f);
        }
      }
    } else {
      if (lambda <= 0.0 || nu(c_i) <= 0.0) return kInf;
      const double total = nu.sum();
      value -= std::log(lambda) + std::log(nu(c_i)) - std::log(total);
      if (grad_mu) {
        grad_mu->array() += 1.0 / total - 1.0 / lambda;
        (*grad_mu)(c_i) -= 1.0 / nu(c_i);
      }
      if (grad_w && d > 0) {
        grad_w->noalias() -= g.colwise().sum().transpose() / lambda;
        grad_w->noalias() -= g.transpose() * sigma.col(c_i) / nu(c_i);
        grad_w->noalias() += g.transpose() * sigma.rowwise().sum() / total;
      }
    }
  }
  return value;
}

SigmaCache build_sigma_cache(const EventCache& cache,
                             const Eigen::MatrixXd& baselines,
                             const Eigen::MatrixXd& weights) {
  const int n_c = cache.n_cascades;
  Eigen::Index total_events = 0;
  for (const UserEvents& ue : cache.users) total_events += ue.n_events();

  SigmaCache out;
  out.e_rows.setZero(total_events, n_c);
  out.mu_rows.setZero(total_events, n_c);
  out.cascades.reserve(static_cast<std::size_t>(total_events));

  Eigen::Index row = 0;
  for (int u = 0; u < cache.n_users; ++u) {
    const UserEvents& ue = cache.users[static_cast<std::size_t>(u)];
    const int d = static_cast<int>(ue.influencers.size());
    Eigen::VectorXd w(d);
    for (int v_idx = 0; v_idx < d; ++v_idx) {
      w(v_idx) = weights(ue.influencers[static_cast<std::size_t>(v_idx)], u);
    }
    for (int i = 0; i < ue.n_events(); ++i, ++row) {
      const Eigen::Map<const Eigen::MatrixXd> g(ue.g_flat.row(i).data(), n_c, d);
      out.e_rows.row(row) = (g * w).transpose();
      out.mu_rows.row(row) = baselines.row(u);
      out.cascades.push_back(ue.cascades[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

double sigma_negative_log_likelihood(const SigmaCache& cache,
                                     const MixingSpec& mixing,
                                     const Eigen::MatrixXd& sigma,
                                     Eigen::MatrixXd* grad,
                                     Eigen::MatrixXd* hessian) {
  const int n_c = static_cast<int>(sigma.rows());
  const bool boltzmann = mixing.kind == MixingKind::boltzmann;
  const double beta = mixing.beta;
  if (grad) grad->setZero(n_c, n_c);
  if (hessian) hessian->setZero(n_c * n_c, n_c * n_c);

  double value = 0.0;
  Eigen::VectorXd nu(n_c), f(n_c);
  for (Eigen::Index i = 0; i < cache.e_rows.rows(); ++i) {
    const Eigen::VectorXd e = cache.e_rows.row(i).transpose();
    nu = cache.mu_rows.row(i).transpose();
    nu.noalias() += sigma.transpose() * e;
    const int c_i = cache.cascades[static_cast<std::size_t>(i)];

    if (boltzmann) {
      const double lse = log_sum_exp(beta * nu);
      value += lse - beta * nu(c_i);
      if (grad || hessian) {
        for (int c = 0; c < n_c; ++c) f(c) = std::exp(beta * nu(c) - lse);
        if (grad) {
          grad->noalias() += beta * (e * f.transpose());
          grad->col(c_i).noalias() -= beta * e;
        }
        if (hessian) {
          for (int s = 0; s < n_c; ++s) {
            for (int c = 0; c < n_c; ++c) {
              for (int s2 = 0; s2 < n_c; ++s2) {
                for (int c2 = 0; c2 < n_c; ++c2) {
                  const double curve =
                      f(c) * ((c == c2 ? 1.0 : 0.0) - f(c2));
                  (*hessian)(s * n_c + c, s2 * n_c + c2) +=
                      beta * beta * e(s) * e(s2) * curve;
                }
              }
            }
          }
        }
      }
    } else {
      if (nu(c_i) <= 0.0) return kInf;
      const double total = nu.sum();
      value += std::log(total) - std::log(nu(c_i));
      if (grad) {
        grad->noalias() += e * Eigen::RowVectorXd::Constant(n_c, 1.0 / total);
        grad->col(c_i).noalias() -= e / nu(c_i);
      }
      if (hessian) {
        for (int s = 0; s < n_c; ++s) {
          for (int s2 = 0; s2 < n_c; ++s2) {
            const double ee = e(s) * e(s2);
            for (int c = 0; c < n_c; ++c) {
              for (int c2 = 0; c2 < n_c; ++c2) {
                double curve = -ee / (total * total);
                if (c == c_i && c2 == c_i) curve += ee / (nu(c_i) * nu(c_i));
                (*hessian)(s * n_c + c, s2 * n_c + c2) += curve;
              }
            }
          }
        }
      }
    }
  }
  return value;
}

}  // namespace detail

LikelihoodGradients log_likelihood_gradients(const ModelParams& params,
                                             const UserGraph& graph,
                                             const EventLog& log,
                                             const LikelihoodWindow& window) {
  check_inputs(params, graph, log, window);
  const detail::EventCache cache = detail::build_event_cache(
      graph, params.kernel, log, window, params.n_cascades());

  LikelihoodGradients out;
  out.baselines.setZero(params.n_users(), params.n_cascades());
  out.weights.setZero(graph.n_users(), graph.n_users());
  out.sigma.setZero(params.n_cascades(), params.n_cascades());

  double neg_total = 0.0;
  Eigen::VectorXd grad_mu, grad_w;
  for (int u = 0; u < graph.n_users(); ++u) {
    const detail::UserEvents& ue = cache.users[static_cast<std::size_t>(u)];
    Eigen::VectorXd w(static_cast<Eigen::Index>(ue.influencers.size()));
    for (std::size_t v_idx = 0; v_idx < ue.influencers.size(); ++v_idx) {
      w(static_cast<Eigen::Index>(v_idx)) = graph.weight(ue.influencers[v_idx], u);
    }
    neg_total += detail::user_negative_log_likelihood(
        ue, cache, params.mixing, params.sigma, params.baselines.row(u).transpose(),
        w, &grad_mu, &grad_w);
    out.baselines.row(u) = -grad_mu.transpose();
    for (std::size_t v_idx = 0; v_idx < ue.influencers.size(); ++v_idx) {
      out.weights(ue.influencers[v_idx], u) =
          -grad_w(static_cast<Eigen::Index>(v_idx));
    }
  }
  out.total = -neg_total;

  const detail::SigmaCache sigma_cache =
      detail::build_sigma_cache(cache, params.baselines, graph.weights());
  Eigen::MatrixXd sigma_grad;
  (void)detail::sigma_negative_log_likelihood(sigma_cache, params.mixing,
                                              params.sigma, &sigma_grad, nullptr);
  out.sigma = -sigma_grad;
  return out;
}

LikelihoodGradients log_likelihood_gradients(const ModelParams& params,
                                             const UserGraph& graph,
                                             const EventLog& log) {
  return log_likelihood_gradients(params, graph, log, {0.0, log.horizon(), {}});
}

Eigen::MatrixXd sigma_hessian(const ModelParams& params, const UserGraph& graph,
                              const EventLog& log) {
  check_inputs(params, graph, log, {0.0, log.horizon(), {}});
  const detail::EventCache cache = detail::build_event_cache(
      graph, params.kernel, log, {0.0, log.horizon(), {}}, params.n_cascades());
  const detail::SigmaCache sigma_cache =
      detail::build_sigma_cache(cache, params.baselines, graph.weights());
  Eigen::MatrixXd hessian;
  (void)detail::sigma_negative_log_likelihood(sigma_cache, params.mixing,
                                              params.sigma, nullptr, &hessian);
  return hessian;
}

}  // namespace mic
