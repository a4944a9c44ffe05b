#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "asmforge/geometry.hpp"
#include "asmforge/matching.hpp"
#include "asmforge/shape.hpp"

namespace asmforge {

// A detected contact: joint_a lives on part_a, joint_b on part_b.
struct JointContact {
  std::size_t part_a = 0;
  std::size_t part_b = 0;
  std::size_t joint_a = 0;
  std::size_t joint_b = 0;
};

struct DetectedJoints {
  std::vector<Joint> joints;  // unsigned; mate links set
  std::vector<JointContact> contacts;
};

// For every part pair (i < j) whose minimum point distance is below `tau`,
// emits a joint on each side made of the k points closest to the other part
// (ties to the lower index). `posed_parts` are in the assembled frame;
// joint centroids are stored in that frame too.
DetectedJoints detect_joints(const std::vector<PointCloud>& posed_parts,
                             std::size_t k = kJointPoints,
                             double tau = kJointContactDistance);

// Per-point joint labels over one part: -1 peg, +1 hole, 0 none.
struct JointMask {
  std::vector<int> labels;
  std::vector<std::optional<std::size_t>> joint_ids;

  std::size_t count(int label) const;
};

// Points shared by several joints take the lowest joint id's label.
JointMask build_joint_mask(const PointCloud& part,
                           const std::vector<Joint>& joints);

inline constexpr double kDefaultCongruenceEps = 1e-3;

// Transitive closure of chamfer(p_i, p_j) < eps over canonicalized parts.
// Classes are ordered by their smallest member; members ascending.
CongruentClasses detect_congruent_classes(const std::vector<PointCloud>& parts,
                                          double eps = kDefaultCongruenceEps);

// Signs the detected joints with the order-invariant sign assignment, links
// mates for retained contacts and drops the mates of removed contacts.
// Joint centroids are recomputed in each part's own frame.
struct JointAnnotation {
  std::vector<Joint> joints;
  JointPairing pairing;
  SignAssignment signs;
};
JointAnnotation annotate_joints(const DetectedJoints& detected,
                                const std::vector<PointCloud>& canonical_parts,
                                const CongruentClasses& classes);

// Runs detection on the ground-truth assembly of `shape` and replaces its
// joints and pairing.
void annotate_shape(ShapeInstance& shape, std::size_t k = kJointPoints,
                    double tau = kJointContactDistance);

// Keeps exactly the shapes with at most `max_pairs` joint pairs.
std::vector<ShapeInstance> filter_shapes(std::vector<ShapeInstance> shapes,
                                         std::size_t max_pairs = kMaxJointPairs);

}  // namespace asmforge
