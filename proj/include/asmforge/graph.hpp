#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "asmforge/geometry.hpp"
#include "asmforge/shape.hpp"

namespace asmforge {

using Feature = Eigen::VectorXd;

struct GraphEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
};

// Node/edge feature slots shared by the part graph and the joint graph.
struct FeatureGraph {
  std::vector<Feature> nodes;
  std::vector<GraphEdge> edges;
  std::vector<Feature> edge_features;
};

// Edge update: (src node, dst node, current edge) -> new edge feature.
using EdgeUpdate =
    std::function<Feature(const Feature&, const Feature&, const Feature&)>;
// Node update: (current node, mean of incident edge features) -> new node.
using NodeUpdate = std::function<Feature(const Feature&, const Feature&)>;

EdgeUpdate identity_edge_update();
NodeUpdate identity_node_update();

// Complete directed graph over the parts. Node feature = posed centroid (3),
// bounding-box extents (3), point count (1); edge feature = dst - src centroid.
struct PartGraph {
  FeatureGraph graph;
  std::vector<Pose> poses;
};

// Bipartite peg x hole graph. Node i < pegs.size() is a peg, the rest holes.
struct JointGraph {
  FeatureGraph graph;
  std::vector<std::size_t> pegs;   // joint ids
  std::vector<std::size_t> holes;  // joint ids
};

PartGraph build_part_graph(const ShapeInstance& shape,
                           const std::vector<Pose>& poses);
JointGraph build_joint_graph(const ShapeInstance& shape);

// `rounds` rounds of double-buffered message passing: all edges are updated
// from the previous round's nodes, then all nodes from the new edges. Throws
// NumericError naming the offending node or edge on non-finite output.
FeatureGraph message_pass(const FeatureGraph& graph, const EdgeUpdate& fn_edge,
                          const NodeUpdate& fn_node, std::size_t rounds);

// Peg x hole soft affinity; each row sums to one.
struct ConnectivityMatrix {
  std::vector<std::size_t> pegs;
  std::vector<std::size_t> holes;
  Eigen::MatrixXd weights;
};

inline constexpr double kDefaultConnectivityTemperature = 0.01;

// Row softmax over holes of -|posed peg centroid - posed hole centroid|^2 / T.
ConnectivityMatrix compute_connectivity(
    const std::vector<Joint>& joints, const std::vector<Pose>& poses,
    double temperature = kDefaultConnectivityTemperature);

// Element-wise max over each part's joint signals; jointless parts get zeros.
// `joint_signals[k]` belongs to shape.joints[k].
std::vector<Feature> aggregate_joint_to_part(
    const std::vector<Feature>& joint_signals, const ShapeInstance& shape);

}  // namespace asmforge
