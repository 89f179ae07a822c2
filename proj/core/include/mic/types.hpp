#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace mic {

/// A single marked event: user `user` posts to cascade `cascade` at `time`.
struct Event {
  int user = 0;
  int cascade = 0;
  double time = 0.0;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Canonical ordering: time, then user, then cascade. Events with equal
/// timestamps are legal; every consumer treats them as simultaneous (none of
/// them excites another in the same tie group).
[[nodiscard]] bool event_less(const Event& a, const Event& b);

/// An immutable, time-sorted sequence of events observed on [0, horizon].
class EventLog {
 public:
  EventLog() = default;

  /// Sorts the events canonically and validates them: times must be finite,
  /// non-negative and at most `horizon`; ids must be non-negative.
  EventLog(std::vector<Event> events, double horizon);

  [[nodiscard]] const std::vector<Event>& events() const { return events_; }
  [[nodiscard]] double horizon() const { return horizon_; }
  [[nodiscard]] std::size_t size() const { return events_.size(); }
  [[nodiscard]] bool empty() const { return events_.empty(); }

  /// Throws if any event references a user >= n_users or cascade >= n_cascades.
  void check_ids(int n_users, int n_cascades) const;

 private:
  std::vector<Event> events_;
  double horizon_ = 0.0;
};

/// Directed influence graph. weight(v, u) > 0 means v's events excite u;
/// the excitation jump is exactly weight(v, u). Self-loops are allowed.
class UserGraph {
 public:
  UserGraph() = default;

  /// Takes a square non-negative matrix; entry (v, u) is the weight from
  /// influencer v to follower u.
  explicit UserGraph(Eigen::MatrixXd weights);

  [[nodiscard]] int n_users() const { return static_cast<int>(weights_.rows()); }
  [[nodiscard]] const Eigen::MatrixXd& weights() const { return weights_; }
  [[nodiscard]] double weight(int v, int u) const { return weights_(v, u); }

  /// Users whose events excite u (the in-neighbourhood of u).
  [[nodiscard]] const std::vector<int>& influencers(int u) const {
    return influencers_[static_cast<std::size_t>(u)];
  }
  /// Users excited by v's events (the out-neighbourhood of v).
  [[nodiscard]] const std::vector<int>& followers(int v) const {
    return followers_[static_cast<std::size_t>(v)];
  }

  [[nodiscard]] std::size_t n_edges() const { return n_edges_; }

 private:
  Eigen::MatrixXd weights_;
  std::vector<std::vector<int>> influencers_;
  std::vector<std::vector<int>> followers_;
  std::size_t n_edges_ = 0;
};

/// Memoryless excitation kernel kappa(t) = 1{t > 0} exp(-t / tau).
struct KernelSpec {
  double tau = 1.0;

  /// kappa evaluated at lag dt (0 for dt <= 0).
  [[nodiscard]] double value(double dt) const;

  /// Integral of kappa over lags [lo, hi], clamped below at 0.
  [[nodiscard]] double integral(double lo, double hi) const;

  void validate() const;
};

enum class MixingKind {
  linear,     ///< f(c) proportional to the contextual intensity itself.
  boltzmann,  ///< f(c) proportional to exp(beta * contextual intensity).
};

struct MixingSpec {
  MixingKind kind = MixingKind::linear;
  double beta = 1.0;  ///< Inverse temperature; only used by boltzmann mixing.

  void validate() const;
};

[[nodiscard]] const char* to_string(MixingKind kind);
[[nodiscard]] MixingKind mixing_kind_from_string(const std::string& name);

/// Full parameter set of the mixture-of-interacting-cascades model.
struct ModelParams {
  Eigen::MatrixXd baselines;  ///< n_users x n_cascades, entries >= 0.
  Eigen::MatrixXd sigma;      ///< n_cascades x n_cascades, rows on the simplex.
  KernelSpec kernel;
  MixingSpec mixing;

  [[nodiscard]] int n_users() const { return static_cast<int>(baselines.rows()); }
  [[nodiscard]] int n_cascades() const { return static_cast<int>(baselines.cols()); }

  /// Total baseline rate of each user (row sums of `baselines`).
  [[nodiscard]] Eigen::VectorXd total_baselines() const;

  /// Shape, finiteness, sign and simplex checks; throws std::invalid_argument.
  void validate(const UserGraph& graph) const;
};

/// Row-stochasticity check used by ModelParams::validate and the fitters.
[[nodiscard]] bool is_row_stochastic(const Eigen::MatrixXd& m, double tol = 1e-9);

}  // namespace mic
