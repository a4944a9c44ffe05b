#include "asmforge/graph.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "asmforge/errors.hpp"

namespace asmforge {

EdgeUpdate identity_edge_update() {
  return [](const Feature&, const Feature&, const Feature& edge) {
    return edge;
  };
}

NodeUpdate identity_node_update() {
  return [](const Feature& node, const Feature&) { return node; };
}

PartGraph build_part_graph(const ShapeInstance& shape,
                           const std::vector<Pose>& poses) {
  const std::size_t n = shape.num_parts();
  if (poses.size() != n) {
    throw InvalidInput("part graph: " + std::to_string(poses.size()) +
                       " poses for " + std::to_string(n) + " parts");
  }
  PartGraph pg;
  pg.poses = poses;
  std::vector<Vec3> centroids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PointCloud posed = apply_pose(poses[i], shape.parts[i]);
    Vec3 lo = posed[0], hi = posed[0];
    for (const auto& p : posed) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    centroids[i] = posed.centroid();
    Feature f(7);
    f << centroids[i], hi - lo, static_cast<double>(posed.size());
    pg.graph.nodes.push_back(std::move(f));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      pg.graph.edges.push_back({i, j});
      pg.graph.edge_features.emplace_back(centroids[j] - centroids[i]);
    }
  }
  return pg;
}

JointGraph build_joint_graph(const ShapeInstance& shape) {
  JointGraph jg;
  for (const auto& j : shape.joints) {
    if (j.sign == Sign::kNone) {
      throw InvalidState("joint graph: joint " + std::to_string(j.id) +
                         " carries no sign");
    }
    (j.sign == Sign::kPeg ? jg.pegs : jg.holes).push_back(j.id);
  }
  for (std::size_t id : jg.pegs) {
    jg.graph.nodes.emplace_back(shape.joints[id].centroid);
  }
  for (std::size_t id : jg.holes) {
    jg.graph.nodes.emplace_back(shape.joints[id].centroid);
  }
  const std::size_t np = jg.pegs.size();
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t h = 0; h < jg.holes.size(); ++h) {
      jg.graph.edges.push_back({p, np + h});
      jg.graph.edge_features.emplace_back(jg.graph.nodes[np + h] -
                                          jg.graph.nodes[p]);
    }
  }
  return jg;
}

FeatureGraph message_pass(const FeatureGraph& graph, const EdgeUpdate& fn_edge,
                          const NodeUpdate& fn_node, std::size_t rounds) {
  if (rounds < 1) throw InvalidInput("message passing needs at least 1 round");
  if (graph.edge_features.size() != graph.edges.size()) {
    throw InvalidInput("message passing: edge feature count mismatch");
  }
  const std::size_t n = graph.nodes.size();
  std::vector<std::vector<std::size_t>> incident(n);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    if (edge.src >= n || edge.dst >= n) {
      throw InvalidInput("message passing: edge " + std::to_string(e) +
                         " names an unknown node");
    }
    incident[edge.src].push_back(e);
    if (edge.dst != edge.src) incident[edge.dst].push_back(e);
  }

  FeatureGraph cur = graph;
  for (std::size_t round = 0; round < rounds; ++round) {
    FeatureGraph next = cur;
    for (std::size_t e = 0; e < cur.edges.size(); ++e) {
      const auto& edge = cur.edges[e];
      next.edge_features[e] = fn_edge(cur.nodes[edge.src], cur.nodes[edge.dst],
                                      cur.edge_features[e]);
      if (!next.edge_features[e].allFinite()) {
        throw NumericError("message passing: edge " + std::to_string(e) +
                           " produced a non-finite feature");
      }
    }
    const Eigen::Index edge_dim =
        next.edge_features.empty() ? 0 : next.edge_features.front().size();
    for (std::size_t v = 0; v < n; ++v) {
      Feature mean = Feature::Zero(edge_dim);
      if (!incident[v].empty()) {
        for (std::size_t e : incident[v]) mean += next.edge_features[e];
        mean /= static_cast<double>(incident[v].size());
      }
      next.nodes[v] = fn_node(cur.nodes[v], mean);
      if (!next.nodes[v].allFinite()) {
        throw NumericError("message passing: node " + std::to_string(v) +
                           " produced a non-finite feature");
      }
    }
    cur = std::move(next);
  }
  return cur;
}

ConnectivityMatrix compute_connectivity(const std::vector<Joint>& joints,
                                        const std::vector<Pose>& poses,
                                        double temperature) {
  if (!(temperature > 0.0)) {
    throw InvalidInput("connectivity temperature must be positive");
  }
  ConnectivityMatrix out;
  std::vector<Vec3> posed(joints.size());
  for (const auto& j : joints) {
    if (j.part >= poses.size()) {
      throw InvalidInput("connectivity: joint " + std::to_string(j.id) +
                         " has no pose for its part");
    }
    if (j.sign == Sign::kPeg) out.pegs.push_back(j.id);
    if (j.sign == Sign::kHole) out.holes.push_back(j.id);
  }
  if (out.holes.empty()) throw InvalidInput("connectivity: no holes");
  auto posed_centroid = [&](std::size_t id) {
    for (const auto& j : joints) {
      if (j.id == id) return poses[j.part].apply(j.centroid);
    }
    throw InvalidInput("connectivity: unknown joint " + std::to_string(id));
  };
  std::vector<Vec3> peg_c, hole_c;
  for (auto id : out.pegs) peg_c.push_back(posed_centroid(id));
  for (auto id : out.holes) hole_c.push_back(posed_centroid(id));

  const auto np = static_cast<Eigen::Index>(out.pegs.size());
  const auto nh = static_cast<Eigen::Index>(out.holes.size());
  out.weights.resize(np, nh);
  for (Eigen::Index p = 0; p < np; ++p) {
    Eigen::VectorXd logits(nh);
    for (Eigen::Index h = 0; h < nh; ++h) {
      logits[h] = -(peg_c[static_cast<std::size_t>(p)] -
                    hole_c[static_cast<std::size_t>(h)])
                       .squaredNorm() /
                  temperature;
    }
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    out.weights.row(p) = e.transpose() / e.sum();
  }
  return out;
}

std::vector<Feature> aggregate_joint_to_part(
    const std::vector<Feature>& joint_signals, const ShapeInstance& shape) {
  if (joint_signals.size() != shape.joints.size()) {
    throw InvalidInput("aggregate: one signal per joint expected");
  }
  const Eigen::Index dim =
      joint_signals.empty() ? 0 : joint_signals.front().size();
  for (const auto& s : joint_signals) {
    if (s.size() != dim) throw InvalidInput("aggregate: signal size mismatch");
  }
  std::vector<Feature> out(shape.num_parts(), Feature::Zero(dim));
  std::vector<char> touched(shape.num_parts(), 0);
  for (const auto& j : shape.joints) {
    if (j.part >= out.size()) {
      throw InvalidInput("aggregate: joint " + std::to_string(j.id) +
                         " names an unknown part");
    }
    const Feature& s = joint_signals[j.id];
    if (!touched[j.part]) {
      out[j.part] = s;
      touched[j.part] = 1;
    } else {
      out[j.part] = out[j.part].cwiseMax(s);
    }
  }
  return out;
}

}  // namespace asmforge
