#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mic/types.hpp"

namespace mic {

struct LayoutOptions {
  /// Intra-layer edges are kept when their weight reaches the nearest-rank
  /// percentile of the nonzero off-diagonal weights of their layer.
  double edge_percentile = 0.95;
  int iterations = 200;  ///< spring-embedder iteration budget
  std::uint64_t seed = 1;
  /// Vertical distance between the cascade layer and the user layer.
  double layer_offset = 1.0;

  void validate() const;
};

struct CascadeNode {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double size = 0.0;  ///< event volume of the cascade
};

struct UserNode {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double size = 0.0;          ///< event volume of the user
  Eigen::VectorXd mixture;    ///< time-averaged f_u over the user's events
};

struct LayoutEdge {
  int from = 0;
  int to = 0;
  double weight = 0.0;
};

/// Strongest baseline per cascade: the user with the largest rate for it.
struct CrossEdge {
  int cascade = 0;
  int user = 0;
  double weight = 0.0;
};

/// Bi-layer drawing data: cascades on the lower layer positioned by a seeded
/// force-directed embedding of the thresholded interaction matrix, users on
/// the upper layer at the mixture-weighted convex combination of cascade
/// positions. Rendering is left to external tools.
struct LayoutDocument {
  std::vector<CascadeNode> cascade_nodes;
  std::vector<UserNode> user_nodes;
  std::vector<LayoutEdge> cascade_edges;  ///< thresholded sigma, no self-loops
  std::vector<LayoutEdge> user_edges;     ///< thresholded weights, no self-loops
  std::vector<CrossEdge> cross_edges;
  double layer_offset = 1.0;
};

/// Computes the bi-layer layout for fitted parameters and the log they were
/// fitted on. Deterministic in (inputs, options.seed). When no interaction
/// edge survives the threshold the cascades fall back to a circle.
[[nodiscard]] LayoutDocument layout(const ModelParams& params,
                                    const UserGraph& graph, const EventLog& log,
                                    const LayoutOptions& options = {});

}  // namespace mic
