#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "asmforge/graph.hpp"
#include "asmforge/hungarian.hpp"
#include "asmforge/shape.hpp"

namespace asmforge {

using PartEdge = std::pair<std::size_t, std::size_t>;  // first < second

// Undirected part-level contact graph used to decide joint signs.
class PartConnectivityGraph {
 public:
  // Edges are normalized to (low, high), deduplicated and sorted. Self-loops
  // are rejected. `congruent[i]` marks parts whose class has >= 2 members.
  PartConnectivityGraph(std::size_t num_parts, std::vector<PartEdge> edges,
                        std::vector<bool> congruent);

  static PartConnectivityGraph from_shape(const ShapeInstance& shape);

  std::size_t num_parts() const { return num_parts_; }
  const std::vector<PartEdge>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t part) const {
    return adjacency_[part];
  }
  std::size_t degree(std::size_t part) const {
    return adjacency_[part].size();
  }
  bool congruent(std::size_t part) const { return congruent_[part]; }

 private:
  std::size_t num_parts_;
  std::vector<PartEdge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<bool> congruent_;
};

// Joint signs on both ends of a retained contact edge.
struct SignedEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  Sign sign_a = Sign::kNone;
  Sign sign_b = Sign::kNone;
  friend bool operator==(const SignedEdge&, const SignedEdge&) = default;
};

struct SignAssignment {
  std::vector<Sign> part_signs;       // from the traversal pass
  std::vector<SignedEdge> edges;      // retained edges, sorted by (a, b)
  std::vector<PartEdge> removed_edges;

  // Sign of the joint that `part` contributes to edge (a, b); kNone if the
  // edge was removed or does not exist.
  Sign joint_sign(std::size_t part, std::size_t other) const;
};

// Order-invariant peg/hole sign assignment:
//  1. visit unassigned parts by descending degree (ties: lower id); the
//     visited part becomes a peg, unassigned-or-hole neighbors become holes,
//     peg neighbors go to the conflict cache;
//  2. every edge whose ends share a sign joins the cache;
//  3. each cached edge with a congruent end is kept with the congruent end as
//     peg (lower id when both are congruent) and the other end as hole; an
//     edge between two non-congruent parts is removed.
SignAssignment assign_joint_signs(const PartConnectivityGraph& graph);

// Relabels `pairing` for a within-class part permutation. `part_perm[i]` is
// the ground-truth slot occupied by part i; joints of congruent parts
// correspond by their order of id on each part. Throws InvalidInput if the
// permutation crosses congruent classes.
JointPairing reassign_pairing(const ShapeInstance& shape,
                              const JointPairing& pairing,
                              const std::vector<std::size_t>& part_perm);
JointPairing reassign_gt_pairing(const ShapeInstance& shape,
                                 const std::vector<std::size_t>& part_perm);

// Validates that `part_perm` is a permutation that stays inside classes.
void validate_class_permutation(const ShapeInstance& shape,
                                const std::vector<std::size_t>& part_perm);

// One-to-one peg -> hole pairing minimizing sum(-log r) via hungarian; the
// excess side stays unmatched.
JointPairing propose_pairing(const ConnectivityMatrix& r);

}  // namespace asmforge
