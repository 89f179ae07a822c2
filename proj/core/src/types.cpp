#include "mic/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mic/errors.hpp"

namespace mic {

bool event_less(const Event& a, const Event& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.user != b.user) return a.user < b.user;
  return a.cascade < b.cascade;
}

EventLog::EventLog(std::vector<Event> events, double horizon)
    : events_(std::move(events)), horizon_(horizon) {
  if (!(horizon_ >= 0.0) || !std::isfinite(horizon_)) {
    throw std::invalid_argument("EventLog: horizon must be finite and >= 0");
  }
  for (const Event& e : events_) {
    if (!std::isfinite(e.time) || e.time < 0.0 || e.time > horizon_) {
      throw std::invalid_argument("EventLog: event time outside [0, horizon]");
    }
    if (e.user < 0 || e.cascade < 0) {
      throw std::invalid_argument("EventLog: negative user or cascade id");
    }
  }
  std::stable_sort(events_.begin(), events_.end(), event_less);
}

void EventLog::check_ids(int n_users, int n_cascades) const {
  for (const Event& e : events_) {
    if (e.user >= n_users || e.cascade >= n_cascades) {
      throw std::invalid_argument("EventLog: event id out of range");
    }
  }
}

UserGraph::UserGraph(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols()) {
    throw std::invalid_argument("UserGraph: weight matrix must be square");
  }
  const int n = n_users();
  influencers_.assign(static_cast<std::size_t>(n), {});
  followers_.assign(static_cast<std::size_t>(n), {});
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      const double w = weights_(v, u);
      if (!std::isfinite(w) || w < 0.0) {
        throw std::invalid_argument("UserGraph: weights must be finite and >= 0");
      }
      if (w > 0.0) {
        influencers_[static_cast<std::size_t>(u)].push_back(v);
        followers_[static_cast<std::size_t>(v)].push_back(u);
        ++n_edges_;
      }
    }
  }
}

double KernelSpec::value(double dt) const {
  return dt > 0.0 ? std::exp(-dt / tau) : 0.0;
}

double KernelSpec::integral(double lo, double hi) const {
  lo = std::max(lo, 0.0);
  if (hi <= lo) return 0.0;
  // tau * (exp(-lo/tau) - exp(-hi/tau)), written to stay accurate when the
  // window is short relative to tau.
  return tau * std::exp(-lo / tau) * -std::expm1(-(hi - lo) / tau);
}

void KernelSpec::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("KernelSpec: tau must be finite and > 0");
  }
}

void MixingSpec::validate() const {
  if (kind == MixingKind::boltzmann && (!std::isfinite(beta) || beta < 0.0)) {
    throw std::invalid_argument("MixingSpec: beta must be finite and >= 0");
  }
}

const char* to_string(MixingKind kind) {
  return kind == MixingKind::linear ? "linear" : "boltzmann";
}

MixingKind mixing_kind_from_string(const std::string& name) {
  if (name == "linear") return MixingKind::linear;
  if (name == "boltzmann") return MixingKind::boltzmann;
  throw std::invalid_argument("unknown mixing kind: " + name);
}

Eigen::VectorXd ModelParams::total_baselines() const {
  return baselines.rowwise().sum();
}

bool is_row_stochastic(const Eigen::MatrixXd& m, double tol) {
  for (Eigen::Index s = 0; s < m.rows(); ++s) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double x = m(s, c);
      if (!std::isfinite(x) || x < -tol || x > 1.0 + tol) return false;
      sum += x;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

void ModelParams::validate(const UserGraph& graph) const {
  kernel.validate();
  mixing.validate();
  if (baselines.rows() != graph.n_users()) {
    throw std::invalid_argument("ModelParams: baselines rows != graph users");
  }
  if (n_cascades() < 1) {
    throw std::invalid_argument("ModelParams: need at least one cascade");
  }
  if ((baselines.array() < 0.0).any() || !baselines.allFinite()) {
    throw std::invalid_argument("ModelParams: baselines must be finite and >= 0");
  }
  if (sigma.rows() != n_cascades() || sigma.cols() != n_cascades()) {
    throw std::invalid_argument("ModelParams: sigma must be n_cascades x n_cascades");
  }
  if (!is_row_stochastic(sigma)) {
    throw std::invalid_argument("ModelParams: sigma rows must lie on the simplex");
  }
}

}  // namespace mic
