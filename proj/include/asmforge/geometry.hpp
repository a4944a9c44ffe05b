#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace asmforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Ordered set of 3D points in shape units. Coordinates are always finite.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Vec3> view() const { return points_; }
  const std::vector<Vec3>& points() const { return points_; }

  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  Vec3 centroid() const;
  PointCloud subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Vec3> points_;
};

// Rigid transform x -> R x + t with R stored as a unit quaternion.
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  // Validates |q| = 1 within 1e-9 and applies the w >= 0 sign convention.
  static Pose from(const Quat& rotation, const Vec3& translation);

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Pose inverse() const;

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.rotation.coeffs() == b.rotation.coeffs() &&
           a.translation == b.translation;
  }
};

// Incremental update (rotation difference, translation difference).
struct PoseDelta {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  static PoseDelta identity() { return {}; }
};

inline constexpr double kUnitQuatTolerance = 1e-9;

// Flips q to -q when w < 0 (same rotation).
Quat canonical_sign(const Quat& q);
Quat quat_from_axis_angle(const Vec3& axis, double angle_rad);
bool is_unit(const Quat& q, double tol = kUnitQuatTolerance);

// Throws InvalidPose for a non-unit or non-finite quaternion.
void validate_pose(const Pose& pose);

PointCloud apply_pose(const Pose& pose, const PointCloud& cloud);

// Component-wise update: rotation = dR * R_prev (renormalized),
// translation = dt + t_prev.
Pose compose_pose(const PoseDelta& delta, const Pose& prev);

// Group composition: (outer * inner)(x) = outer(inner(x)).
Pose rigid_compose(const Pose& outer, const Pose& inner);

struct Neighbor {
  std::size_t index = 0;
  double sq_dist = 0.0;
};

// Exact nearest neighbor of every query among targets; ties resolved to the
// lowest target index. Uses a k-d tree for larger target sets; the result is
// identical to nearest_neighbors_brute.
std::vector<Neighbor> nearest_neighbors(std::span<const Vec3> queries,
                                        std::span<const Vec3> targets);
std::vector<Neighbor> nearest_neighbors_brute(std::span<const Vec3> queries,
                                              std::span<const Vec3> targets);

// Sum of squared nearest-neighbor distances, both directions.
double chamfer_distance(const PointCloud& a, const PointCloud& b);
double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b);
double chamfer_distance_brute(std::span<const Vec3> a,
                              std::span<const Vec3> b);

// Greedy furthest point sampling. The first index is drawn from `seed`; each
// later index maximizes the squared distance to the selected set, ties to the
// lowest index.
std::vector<std::size_t> furthest_point_sample(const PointCloud& cloud,
                                               std::size_t k,
                                               std::uint64_t seed);
std::vector<std::size_t> furthest_point_sample_from(const PointCloud& cloud,
                                                    std::size_t k,
                                                    std::size_t start);

struct Canonicalization {
  PointCloud cloud;  // zero-centered, principal axes along x, y, z
  Pose pose;         // maps the canonical cloud back onto the input
  bool degenerate = false;
  Vec3 eigenvalues = Vec3::Zero();  // descending
};

// Zero-centers the cloud and rotates it onto its principal axes (largest
// variance first). Each of the first two axes is signed so that the point
// with the largest absolute projection is positive; the third is their cross
// product. Repeated eigenvalues leave the frame ambiguous and fall back to
// the input axes (degenerate = true). Rank < 3 is flagged as degenerate too.
Canonicalization canonicalize(const PointCloud& cloud);

}  // namespace asmforge
