#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asmforge/geometry.hpp"

namespace asmforge {

// Joint-detection and filtering constants used across the dataset pipeline.
inline constexpr std::size_t kJointPoints = 50;
inline constexpr double kJointContactDistance = 0.05;
inline constexpr std::size_t kMaxJointPairs = 50;

enum class Sign { kNone, kPeg, kHole };

std::string_view to_string(Sign s);
Sign opposite(Sign s);

// A contact patch on one part: indices into the parent part's cloud.
struct Joint {
  std::size_t id = 0;
  std::size_t part = 0;
  Sign sign = Sign::kNone;
  std::vector<std::size_t> point_indices;  // ascending, distinct
  Vec3 centroid = Vec3::Zero();            // in the part's own frame
  std::optional<std::size_t> mate;         // ground-truth mating joint

  friend bool operator==(const Joint&, const Joint&) = default;
};

struct JointPair {
  std::size_t peg = 0;
  std::size_t hole = 0;
  friend auto operator<=>(const JointPair&, const JointPair&) = default;
};

// One-to-one peg -> hole assignment, kept sorted by peg id.
struct JointPairing {
  std::vector<JointPair> pairs;

  void normalize();
  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  friend bool operator==(const JointPairing&, const JointPairing&) = default;
};

// Partition of part ids into interchangeable (geometrically congruent) sets.
using CongruentClasses = std::vector<std::vector<std::size_t>>;

struct ShapeInstance {
  std::string shape_id;
  std::string category;
  std::vector<PointCloud> parts;  // canonicalized part clouds
  std::vector<Pose> gt_poses;     // canonical frame -> assembled shape
  std::vector<Joint> joints;      // joints[k].id == k
  JointPairing gt_pairing;
  CongruentClasses congruent_classes;

  std::size_t num_parts() const { return parts.size(); }
  std::size_t num_joint_pairs() const { return gt_pairing.size(); }

  // Class index of every part.
  std::vector<std::size_t> class_of_part() const;
  // Joint ids on `part`, ascending.
  std::vector<std::size_t> joints_of_part(std::size_t part) const;
  PointCloud joint_points(std::size_t joint_id) const;

  friend bool operator==(const ShapeInstance&, const ShapeInstance&) = default;
};

// Checks the structural invariants; throws InvalidInput / InvalidState with
// the first violation found. `joint_points` = 0 skips the per-joint size check.
void validate_shape(const ShapeInstance& shape,
                    std::size_t joint_points = kJointPoints);

// Pairing implied by the joints' mate links (peg side first).
JointPairing pairing_from_mates(const std::vector<Joint>& joints);

// Recomputes each joint's cached centroid from its parent part.
void refresh_joint_centroids(ShapeInstance& shape);

// Validates that `classes` is a partition of 0..num_parts-1.
void validate_partition(const CongruentClasses& classes, std::size_t num_parts);

}  // namespace asmforge
