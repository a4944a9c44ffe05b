#include "asmforge/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "asmforge/errors.hpp"

namespace asmforge {

PartConnectivityGraph::PartConnectivityGraph(std::size_t num_parts,
                                             std::vector<PartEdge> edges,
                                             std::vector<bool> congruent)
    : num_parts_(num_parts),
      adjacency_(num_parts),
      congruent_(std::move(congruent)) {
  if (congruent_.size() != num_parts) {
    throw InvalidInput("connectivity graph: congruence flags size mismatch");
  }
  for (auto& [a, b] : edges) {
    if (a == b) throw InvalidInput("connectivity graph: self-loop");
    if (a >= num_parts || b >= num_parts) {
      throw InvalidInput("connectivity graph: edge names unknown part");
    }
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
  for (const auto& [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
}

PartConnectivityGraph PartConnectivityGraph::from_shape(
    const ShapeInstance& shape) {
  std::vector<PartEdge> edges;
  for (const auto& j : shape.joints) {
    if (!j.mate) continue;
    const std::size_t other = shape.joints.at(*j.mate).part;
    edges.emplace_back(j.part, other);
  }
  std::vector<bool> congruent(shape.num_parts(), false);
  for (const auto& cls : shape.congruent_classes) {
    if (cls.size() < 2) continue;
    for (std::size_t p : cls) congruent[p] = true;
  }
  return PartConnectivityGraph(shape.num_parts(), std::move(edges),
                               std::move(congruent));
}

Sign SignAssignment::joint_sign(std::size_t part, std::size_t other) const {
  const PartEdge key{std::min(part, other), std::max(part, other)};
  for (const auto& e : edges) {
    if (e.a == key.first && e.b == key.second) {
      return part == e.a ? e.sign_a : e.sign_b;
    }
  }
  return Sign::kNone;
}

SignAssignment assign_joint_signs(const PartConnectivityGraph& graph) {
  const std::size_t n = graph.num_parts();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return graph.degree(a) > graph.degree(b);
                   });

  std::vector<Sign> sign(n, Sign::kNone);
  std::set<PartEdge> conflicts;
  // Traversal restarts at the highest-degree unassigned part.
  for (std::size_t target : order) {
    if (sign[target] != Sign::kNone) continue;
    sign[target] = Sign::kPeg;
    for (std::size_t nb : graph.neighbors(target)) {
      if (sign[nb] == Sign::kPeg) {
        conflicts.insert({std::min(target, nb), std::max(target, nb)});
      } else {
        sign[nb] = Sign::kHole;
      }
    }
  }
  for (const auto& [a, b] : graph.edges()) {
    if (sign[a] == sign[b]) conflicts.insert({a, b});
  }

  SignAssignment out;
  out.part_signs = sign;
  for (const auto& [a, b] : graph.edges()) {
    if (!conflicts.count({a, b})) {
      out.edges.push_back({a, b, sign[a], sign[b]});
      continue;
    }
    const bool ca = graph.congruent(a);
    const bool cb = graph.congruent(b);
    if (ca) {
      out.edges.push_back({a, b, Sign::kPeg, Sign::kHole});
    } else if (cb) {
      out.edges.push_back({a, b, Sign::kHole, Sign::kPeg});
    } else {
      out.removed_edges.emplace_back(a, b);
    }
  }
  return out;
}

void validate_class_permutation(const ShapeInstance& shape,
                                const std::vector<std::size_t>& part_perm) {
  const std::size_t n = shape.num_parts();
  if (part_perm.size() != n) {
    throw InvalidInput("part permutation has " +
                       std::to_string(part_perm.size()) + " entries for " +
                       std::to_string(n) + " parts");
  }
  std::vector<char> hit(n, 0);
  const auto cls = shape.class_of_part();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = part_perm[i];
    if (k >= n || hit[k]++) {
      throw InvalidInput("part permutation is not a permutation");
    }
    if (cls[i] != cls[k]) {
      throw InvalidInput("part permutation maps part " + std::to_string(i) +
                         " to slot " + std::to_string(k) +
                         " outside its congruent class");
    }
  }
}

JointPairing reassign_pairing(const ShapeInstance& shape,
                              const JointPairing& pairing,
                              const std::vector<std::size_t>& part_perm) {
  validate_class_permutation(shape, part_perm);
  const std::size_t n = shape.num_parts();
  std::vector<std::size_t> occupant(n);
  for (std::size_t i = 0; i < n; ++i) occupant[part_perm[i]] = i;

  std::vector<std::vector<std::size_t>> by_part(n);
  for (std::size_t p = 0; p < n; ++p) by_part[p] = shape.joints_of_part(p);

  // Slot joint -> the occupant's joint at the same position.
  std::vector<std::size_t> relabel(shape.joints.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& slot_joints = by_part[k];
    const auto& occ_joints = by_part[occupant[k]];
    if (slot_joints.size() != occ_joints.size()) {
      throw InvalidInput("congruent parts " + std::to_string(k) + " and " +
                         std::to_string(occupant[k]) +
                         " carry different joint counts");
    }
    for (std::size_t pos = 0; pos < slot_joints.size(); ++pos) {
      relabel[slot_joints[pos]] = occ_joints[pos];
    }
  }

  JointPairing out;
  for (const auto& pr : pairing.pairs) {
    if (pr.peg >= relabel.size() || pr.hole >= relabel.size()) {
      throw InvalidInput("pairing references an unknown joint");
    }
    const std::size_t u = relabel[pr.peg];
    const std::size_t v = relabel[pr.hole];
    const Sign su = shape.joints[u].sign;
    const Sign sv = shape.joints[v].sign;
    if (su == Sign::kPeg && sv == Sign::kHole) {
      out.pairs.push_back({u, v});
    } else if (su == Sign::kHole && sv == Sign::kPeg) {
      out.pairs.push_back({v, u});
    } else {
      throw InvalidState("reassigned pair (" + std::to_string(u) + ", " +
                         std::to_string(v) + ") does not join a peg and a hole");
    }
  }
  out.normalize();
  return out;
}

JointPairing reassign_gt_pairing(const ShapeInstance& shape,
                                 const std::vector<std::size_t>& part_perm) {
  return reassign_pairing(shape, shape.gt_pairing, part_perm);
}

JointPairing propose_pairing(const ConnectivityMatrix& r) {
  const Eigen::Index np = r.weights.rows();
  const Eigen::Index nh = r.weights.cols();
  if (static_cast<std::size_t>(np) != r.pegs.size() ||
      static_cast<std::size_t>(nh) != r.holes.size()) {
    throw InvalidInput("connectivity matrix shape does not match its joints");
  }
  if (nh == 0 && np > 0) throw InvalidInput("connectivity matrix has no holes");
  Eigen::MatrixXd cost(np, nh);
  const double floor = std::numeric_limits<double>::min();
  for (Eigen::Index p = 0; p < np; ++p) {
    if (!(r.weights.row(p).maxCoeff() > 0.0)) {
      throw InvalidInput("connectivity row for peg " +
                         std::to_string(r.pegs[static_cast<std::size_t>(p)]) +
                         " is all zero");
    }
    for (Eigen::Index h = 0; h < nh; ++h) {
      cost(p, h) = -std::log(std::max(r.weights(p, h), floor));
    }
  }
  const PartialAssignment a = hungarian_rectangular(cost);
  JointPairing out;
  for (std::size_t p = 0; p < a.col_of_row.size(); ++p) {
    if (a.col_of_row[p]) {
      out.pairs.push_back({r.pegs[p], r.holes[*a.col_of_row[p]]});
    }
  }
  out.normalize();
  return out;
}

}  // namespace asmforge
