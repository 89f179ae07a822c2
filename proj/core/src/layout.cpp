#include "mic/layout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mic/errors.hpp"
#include "mic/rng.hpp"
#include "mic/state.hpp"

namespace mic {
namespace {

constexpr double kPi = 3.14159265358979323846;

/// Nearest-rank percentile of an unsorted sample (empty => 0).
double nearest_rank(std::vector<double> values, double percentile) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(percentile * n)) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0, values.size() - 1);
  return values[static_cast<std::size_t>(idx)];
}

/// Off-diagonal entries of `m` at or above the layer's percentile threshold.
std::vector<LayoutEdge> threshold_edges(const Eigen::MatrixXd& m,
                                        double percentile) {
  std::vector<double> nonzero;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (r != c && m(r, c) != 0.0) nonzero.push_back(m(r, c));
    }
  }
  const double cut = nearest_rank(nonzero, percentile);
  std::vector<LayoutEdge> edges;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (r != c && m(r, c) != 0.0 && m(r, c) >= cut) {
        edges.push_back({static_cast<int>(r), static_cast<int>(c), m(r, c)});
      }
    }
  }
  return edges;
}

Eigen::MatrixXd circular_positions(int n) {
  Eigen::MatrixXd pos(n, 2);
  for (int i = 0; i < n; ++i) {
    const double angle = 2.0 * kPi * i / n;
    pos(i, 0) = std::cos(angle);
    pos(i, 1) = std::sin(angle);
  }
  if (n == 1) pos.setZero();
  return pos;
}

/// Fruchterman-Reingold with a fixed iteration budget and a linear cooldown.
/// Edge attraction is scaled by the edge weight; repulsion acts on all pairs.
Eigen::MatrixXd spring_positions(int n, const std::vector<LayoutEdge>& edges,
                                 const LayoutOptions& options) {
  Rng rng(options.seed);
  Eigen::MatrixXd pos(n, 2);
  for (int i = 0; i < n; ++i) {
    pos(i, 0) = rng.uniform(-0.5, 0.5);
    pos(i, 1) = rng.uniform(-0.5, 0.5);
  }
  if (n < 2) return pos;
  const double k = std::sqrt(1.0 / n);
  for (int step = 0; step < options.iterations; ++step) {
    Eigen::MatrixXd disp = Eigen::MatrixXd::Zero(n, 2);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        Eigen::RowVector2d delta = pos.row(i) - pos.row(j);
        const double dist = std::max(delta.norm(), 1e-9);
        const Eigen::RowVector2d push = delta / dist * (k * k / dist);
        disp.row(i) += push;
        disp.row(j) -= push;
      }
    }
    for (const auto& e : edges) {
      Eigen::RowVector2d delta = pos.row(e.from) - pos.row(e.to);
      const double dist = std::max(delta.norm(), 1e-9);
      const Eigen::RowVector2d pull = delta / dist * (dist * dist / k * e.weight);
      disp.row(e.from) -= pull;
      disp.row(e.to) += pull;
    }
    const double temperature =
        0.1 * (1.0 - static_cast<double>(step) / options.iterations);
    for (int i = 0; i < n; ++i) {
      const double norm = std::max(disp.row(i).norm(), 1e-9);
      pos.row(i) += disp.row(i) / norm * std::min(norm, temperature);
    }
  }
  return pos;
}

/// Average of the mixing density over each user's own event times, evaluated
/// just before the event (simultaneous events see the same state). Users
/// without events get the uniform distribution.
Eigen::MatrixXd averaged_mixtures(const ModelParams& params,
                                  const UserGraph& graph, const EventLog& log) {
  const int n_users = params.n_users();
  const int n_cascades = params.n_cascades();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_users, n_cascades);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_users);
  IntensityState state = IntensityState::zero(n_users, n_cascades);
  const auto& events = log.events();
  for (std::size_t i = 0; i < events.size();) {
    std::size_t j = i;
    while (j < events.size() && events[j].time == events[i].time) ++j;
    advance(state, events[i].time, params.kernel);
    for (std::size_t e = i; e < j; ++e) {
      sums.row(events[e].user) += mixing_density(params, state, events[e].user);
      counts(events[e].user) += 1.0;
    }
    for (std::size_t e = i; e < j; ++e) apply_event(state, events[e], graph);
    i = j;
  }
  Eigen::MatrixXd mixtures(n_users, n_cascades);
  for (int u = 0; u < n_users; ++u) {
    if (counts(u) > 0.0) {
      mixtures.row(u) = sums.row(u) / counts(u);
    } else {
      mixtures.row(u).setConstant(1.0 / n_cascades);
    }
  }
  return mixtures;
}

}  // namespace

void LayoutOptions::validate() const {
  if (!(edge_percentile >= 0.0 && edge_percentile <= 1.0)) {
    throw std::invalid_argument("edge percentile must lie in [0, 1]");
  }
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (!std::isfinite(layer_offset)) {
    throw std::invalid_argument("layer offset must be finite");
  }
}

LayoutDocument layout(const ModelParams& params, const UserGraph& graph,
                      const EventLog& log, const LayoutOptions& options) {
  options.validate();
  params.validate(graph);
  log.check_ids(params.n_users(), params.n_cascades());
  const int n_users = params.n_users();
  const int n_cascades = params.n_cascades();

  LayoutDocument doc;
  doc.layer_offset = options.layer_offset;
  doc.cascade_edges = threshold_edges(params.sigma, options.edge_percentile);
  doc.user_edges = threshold_edges(graph.weights(), options.edge_percentile);

  const Eigen::MatrixXd cascade_pos =
      doc.cascade_edges.empty()
          ? circular_positions(n_cascades)
          : spring_positions(n_cascades, doc.cascade_edges, options);

  Eigen::VectorXd cascade_volume = Eigen::VectorXd::Zero(n_cascades);
  Eigen::VectorXd user_volume = Eigen::VectorXd::Zero(n_users);
  for (const auto& e : log.events()) {
    cascade_volume(e.cascade) += 1.0;
    user_volume(e.user) += 1.0;
  }

  doc.cascade_nodes.reserve(static_cast<std::size_t>(n_cascades));
  for (int c = 0; c < n_cascades; ++c) {
    doc.cascade_nodes.push_back(
        {c, cascade_pos(c, 0), cascade_pos(c, 1), cascade_volume(c)});
  }

  const Eigen::MatrixXd mixtures = averaged_mixtures(params, graph, log);
  doc.user_nodes.reserve(static_cast<std::size_t>(n_users));
  for (int u = 0; u < n_users; ++u) {
    const Eigen::RowVector2d at = mixtures.row(u) * cascade_pos;
    doc.user_nodes.push_back({u, at(0), at(1) + options.layer_offset,
                              user_volume(u), mixtures.row(u).transpose()});
  }

  doc.cross_edges.reserve(static_cast<std::size_t>(n_cascades));
  for (int c = 0; c < n_cascades; ++c) {
    Eigen::Index best = 0;
    params.baselines.col(c).maxCoeff(&best);
    doc.cross_edges.push_back(
        {c, static_cast<int>(best), params.baselines(best, c)});
  }
  return doc;
}

}  // namespace mic
