#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "asmforge/geometry.hpp"
#include "asmforge/shape.hpp"

namespace asmforge {

struct LossWeights {
  double translation = 1.0;  // L_t
  double rotation = 10.0;    // L_r
  double assembly = 1.0;     // L_a
  double flip = 1.0;         // L_flip
  double coarse = 5.0;       // L_coarse
  double fine = 1.0;         // L_fine
};

// Gradient with respect to one pose: quaternion (w, x, y, z) then
// translation. The quaternion block lies in the tangent space of the unit
// sphere at the current rotation.
using PoseGradient = Eigen::Matrix<double, 7, 1>;

struct LossReport {
  double l_t = 0.0;
  double l_r = 0.0;
  double l_a = 0.0;
  double l_flip = 0.0;
  double l_coarse = 0.0;
  double l_fine = 0.0;
  double shape_total = 0.0;  // weighted L_t + L_r + L_a
  double joint_total = 0.0;  // weighted L_flip + L_coarse + L_fine
  std::vector<PoseGradient> gradient;  // one per part, of the weighted total
  // Nearest-neighbor indices used by every Chamfer term, in evaluation
  // order. Two evaluations with equal `matches` used the same
  // correspondences.
  std::vector<std::size_t> matches;

  double total() const { return shape_total + joint_total; }
};

// Adds `other` into `into` (values, gradients, matches).
void accumulate(LossReport& into, const LossReport& other);

// Shape loss against `targets[i]`, the ground-truth pose assigned to part i.
// Terms with a zero weight are not evaluated and report 0.
LossReport shape_loss(const std::vector<Pose>& poses,
                      const std::vector<Pose>& targets,
                      const std::vector<PointCloud>& parts,
                      const LossWeights& weights);

struct OrderInvariantLoss {
  LossReport report;
  // part_perm[i] = ground-truth slot assigned to predicted part i.
  std::vector<std::size_t> part_perm;
};

// Per congruent class, assigns ground-truth slots by Hungarian matching on
// the per-part cost weights.translation * |t_i - t_k|^2 +
// weights.rotation * chamfer(R_i p_i, R_k p_i), then evaluates shape_loss
// under that assignment.
OrderInvariantLoss order_invariant_shape_loss(
    const std::vector<Pose>& poses, const std::vector<Pose>& gt_poses,
    const std::vector<PointCloud>& parts, const CongruentClasses& classes,
    const LossWeights& weights);

// Only the slot assignment of order_invariant_shape_loss.
std::vector<std::size_t> match_congruent_parts(
    const std::vector<Pose>& poses, const std::vector<Pose>& gt_poses,
    const std::vector<PointCloud>& parts, const CongruentClasses& classes,
    const LossWeights& weights);

// Targets for the flip term: gt_poses permuted by part_perm.
std::vector<Pose> permuted_targets(const std::vector<Pose>& gt_poses,
                                   std::span<const std::size_t> part_perm);

// Parts the flip term applies to. The default covers every part.
using FlipFilter = std::function<bool(std::size_t part)>;

// Joint loss; zero-weighted terms are skipped. `flip_targets[i]` is the ground-truth pose assigned to part i;
// pass an empty vector to drop L_flip (no supervision available).
LossReport joint_loss(const std::vector<Pose>& poses,
                      const ShapeInstance& shape, const JointPairing& pairing,
                      const std::vector<Pose>& flip_targets,
                      const LossWeights& weights,
                      const FlipFilter& flip_filter = {});

// Derivative of a scalar with respect to the pose of a point x (part frame)
// mapped to y = R x + t, given dL/dy. Adds into `grad`.
void add_point_gradient(const Quat& q, const Vec3& x, const Vec3& dl_dy,
                        bool with_translation, PoseGradient& grad);

// Projects the quaternion block onto the tangent space at q.
void project_to_tangent(const Quat& q, PoseGradient& grad);

}  // namespace asmforge
