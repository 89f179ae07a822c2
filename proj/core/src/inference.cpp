#include "mic/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "event_cache.hpp"
#include "mic/errors.hpp"
#include "mic/evaluation.hpp"
#include "mic/likelihood.hpp"

namespace mic {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

int infer_n_cascades(const EventLog& log) {
  int max_id = -1;
  for (const Event& e : log.events()) max_id = std::max(max_id, e.cascade);
  return max_id + 1;
}

void run_users(int n_users, bool parallel, int threads,
               const std::function<void(int)>& job) {
  int hardware = static_cast<int>(std::thread::hardware_concurrency());
  if (hardware <= 0) hardware = 1;
  const int n_threads =
      parallel ? std::max(1, std::min(threads > 0 ? threads : hardware, n_users))
               : 1;
  if (n_threads == 1) {
    for (int u = 0; u < n_users; ++u) job(u);
    return;
  }
  std::mutex mutex;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      for (int u = t; u < n_users; u += n_threads) {
        try {
          job(u);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (failure) std::rethrow_exception(failure);
}

ModelParams make_initial_params(const EventLog& log, const UserGraph& graph,
                                const FitConfig& cfg, int n_cascades) {
  const int n_users = graph.n_users();
  const double horizon = log.horizon();
  if (!(horizon > 0.0)) throw DataError("cannot fit on a log with zero horizon");

  ModelParams params;
  params.baselines = Eigen::MatrixXd::Zero(n_users, n_cascades);
  for (const Event& e : log.events()) params.baselines(e.user, e.cascade) += 1.0;
  params.baselines =
      (params.baselines / horizon).cwiseMax(cfg.min_baseline);
  if (variant_learns_sigma(cfg.variant)) {
    params.sigma =
        Eigen::MatrixXd::Constant(n_cascades, n_cascades, 1.0 / n_cascades);
  } else {
    params.sigma = Eigen::MatrixXd::Identity(n_cascades, n_cascades);
  }
  params.kernel = KernelSpec{cfg.tau};
  params.mixing = MixingSpec{variant_mixing(cfg.variant), cfg.beta};
  return params;
}

}  // namespace

const char* to_string(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::ic: return "ic";
    case ModelVariant::lin_mic: return "lin_mic";
    case ModelVariant::cc: return "cc";
    case ModelVariant::mic: return "mic";
  }
  throw std::invalid_argument("unknown model variant");
}

ModelVariant model_variant_from_string(const std::string& name) {
  if (name == "ic") return ModelVariant::ic;
  if (name == "lin_mic") return ModelVariant::lin_mic;
  if (name == "cc") return ModelVariant::cc;
  if (name == "mic") return ModelVariant::mic;
  throw std::invalid_argument("unknown model variant: " + name);
}

MixingKind variant_mixing(ModelVariant variant) {
  return variant == ModelVariant::ic || variant == ModelVariant::lin_mic
             ? MixingKind::linear
             : MixingKind::boltzmann;
}

bool variant_learns_sigma(ModelVariant variant) {
  return variant == ModelVariant::lin_mic || variant == ModelVariant::mic;
}

void FitConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (max_outer_iters < 1) throw std::invalid_argument("need at least one outer iteration");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be nonnegative");
  if (!(min_baseline > 0.0)) throw std::invalid_argument("baseline floor must be positive");
  if (!(initial_weight > 0.0)) throw std::invalid_argument("initial weight must be positive");
  if (n_cascades < 0) throw std::invalid_argument("cascade count must be nonnegative");
}

ModelParams initialize(const EventLog& log, const UserGraph& graph,
                       const FitConfig& cfg) {
  cfg.validate();
  const int n_cascades =
      cfg.n_cascades > 0 ? cfg.n_cascades : infer_n_cascades(log);
  if (n_cascades <= 0) throw DataError("cannot infer the cascade count from an empty log");
  log.check_ids(graph.n_users(), n_cascades);
  return make_initial_params(log, graph, cfg, n_cascades);
}

FitResult fit(const EventLog& log, const UserGraph& graph, const FitConfig& cfg) {
  cfg.validate();
  if (log.empty()) throw DataError("cannot fit on an empty event log");
  const int n_users = graph.n_users();
  const int n_cascades =
      cfg.n_cascades > 0 ? cfg.n_cascades : infer_n_cascades(log);
  log.check_ids(n_users, n_cascades);

  ModelParams params = make_initial_params(log, graph, cfg, n_cascades);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n_users, n_users);
  for (int u = 0; u < n_users; ++u) {
    for (const int v : graph.influencers(u)) weights(v, u) = cfg.initial_weight;
  }

  const LikelihoodWindow window{0.0, log.horizon(), {}};
  const detail::EventCache cache =
      detail::build_event_cache(graph, params.kernel, log, window, n_cascades);

  // Per-user free coordinates, gathered once: weight(v, u) for v in the same
  // influencer order as the cache rows.
  std::vector<Eigen::VectorXd> user_weights(static_cast<std::size_t>(n_users));
  for (int u = 0; u < n_users; ++u) {
    const auto& influencers = cache.users[static_cast<std::size_t>(u)].influencers;
    Eigen::VectorXd w(static_cast<Eigen::Index>(influencers.size()));
    for (std::size_t k = 0; k < influencers.size(); ++k) {
      w[static_cast<Eigen::Index>(k)] =
          weights(influencers[k], u);
    }
    user_weights[static_cast<std::size_t>(u)] = std::move(w);
  }
  auto scatter_weights = [&]() {
    for (int u = 0; u < n_users; ++u) {
      const auto& influencers = cache.users[static_cast<std::size_t>(u)].influencers;
      const Eigen::VectorXd& w = user_weights[static_cast<std::size_t>(u)];
      for (std::size_t k = 0; k < influencers.size(); ++k) {
        weights(influencers[k], u) = w[static_cast<Eigen::Index>(k)];
      }
    }
  };

  auto train_log_likelihood = [&]() {
    double total = 0.0;
    for (int u = 0; u < n_users; ++u) {
      const Eigen::VectorXd mu = params.baselines.row(u).transpose();
      total -= detail::user_negative_log_likelihood(
          cache.users[static_cast<std::size_t>(u)], cache, params.mixing,
          params.sigma, mu, user_weights[static_cast<std::size_t>(u)], nullptr,
          nullptr);
    }
    return total;
  };

  FitResult result;
  double current = train_log_likelihood();
  if (!std::isfinite(current)) {
    throw NumericalError("log-likelihood is not finite at the initial parameters");
  }
  result.trajectory.push_back(current);

  const bool learn_sigma = variant_learns_sigma(cfg.variant) && n_cascades > 1;
  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    result.iterations = outer + 1;

    if (learn_sigma) {
      const detail::SigmaCache sigma_cache =
          detail::build_sigma_cache(cache, params.baselines, weights);
      const auto objective = [&](const Eigen::MatrixXd& sigma,
                                 Eigen::MatrixXd* grad, Eigen::MatrixXd* hess) {
        return detail::sigma_negative_log_likelihood(sigma_cache, params.mixing,
                                                     sigma, grad, hess);
      };
      Eigen::MatrixXd sigma = params.sigma;
      (void)minimize_row_stochastic(objective, sigma, cfg.sigma_solver);
      params.sigma = sigma;
    }

    run_users(n_users, cfg.parallel_users, cfg.threads, [&](int u) {
      const auto& ue = cache.users[static_cast<std::size_t>(u)];
      const auto d = static_cast<Eigen::Index>(ue.influencers.size());
      Eigen::VectorXd x(n_cascades + d);
      x.head(n_cascades) = params.baselines.row(u).transpose();
      x.tail(d) = user_weights[static_cast<std::size_t>(u)];
      const auto objective = [&](const Eigen::VectorXd& point,
                                 Eigen::VectorXd* grad) {
        Eigen::VectorXd grad_mu(n_cascades), grad_w(d);
        const double value = detail::user_negative_log_likelihood(
            ue, cache, params.mixing, params.sigma, point.head(n_cascades),
            point.tail(d), grad ? &grad_mu : nullptr, grad ? &grad_w : nullptr);
        if (grad) {
          grad->head(n_cascades) = grad_mu;
          grad->tail(d) = grad_w;
        }
        return value;
      };
      (void)minimize_nonnegative(objective, x, cfg.user_solver);
      params.baselines.row(u) = x.head(n_cascades).transpose();
      user_weights[static_cast<std::size_t>(u)] = x.tail(d);
    });
    scatter_weights();

    const double updated = train_log_likelihood();
    result.trajectory.push_back(updated);
    const double improvement = updated - current;
    current = updated;
    if (std::abs(improvement) < cfg.epsilon * (1.0 + std::abs(updated))) {
      result.converged = true;
      break;
    }
  }

  result.params = std::move(params);
  result.graph = UserGraph(weights);
  return result;
}

CrossValidationResult cross_validate(const EventLog& log, const UserGraph& graph,
                                     const FitConfig& cfg,
                                     const std::vector<double>& beta_grid,
                                     const std::vector<double>& tau_grid,
                                     double split) {
  if (beta_grid.empty() || tau_grid.empty()) {
    throw std::invalid_argument("hyperparameter grids must be nonempty");
  }
  const TrainTestSplit parts = split_train_test(log, split);

  CrossValidationResult result;
  bool any_ok = false;
  double best = -std::numeric_limits<double>::infinity();
  for (const double beta : beta_grid) {
    for (const double tau : tau_grid) {
      CrossValidationCell cell;
      cell.beta = beta;
      cell.tau = tau;
      cell.test_log_likelihood = kNan;
      try {
        FitConfig cell_cfg = cfg;
        cell_cfg.beta = beta;
        cell_cfg.tau = tau;
        const FitResult fitted = fit(parts.train, graph, cell_cfg);
        const double score = test_log_likelihood(fitted.params, fitted.graph,
                                                 parts.train, parts.test);
        if (!std::isfinite(score)) {
          throw NumericalError("held-out log-likelihood is not finite");
        }
        cell.test_log_likelihood = score;
        cell.ok = true;
        if (!any_ok || score > best) {
          best = score;
          result.best_beta = beta;
          result.best_tau = tau;
        }
        any_ok = true;
      } catch (const std::exception& error) {
        cell.error = error.what();
      }
      result.table.push_back(std::move(cell));
    }
  }
  if (!any_ok) {
    throw NumericalError("every cross-validation cell failed to fit or score");
  }
  return result;
}

}  // namespace mic
