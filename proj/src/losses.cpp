#include "asmforge/losses.hpp"

#include <limits>
#include <string>

#include "asmforge/errors.hpp"
#include "asmforge/hungarian.hpp"

namespace asmforge {

namespace {

constexpr std::size_t kFixed = std::numeric_limits<std::size_t>::max();

// Points of a Chamfer operand together with where they came from. Points
// owned by kFixed do not depend on any pose.
struct Tracked {
  std::vector<Vec3> world;
  std::vector<Vec3> local;
  std::vector<std::size_t> part;
  bool translate = true;

  void add(const Vec3& y, const Vec3& x, std::size_t owner) {
    world.push_back(y);
    local.push_back(x);
    part.push_back(owner);
  }
};

Tracked posed_part(const PointCloud& cloud, const Pose& pose, std::size_t owner,
                   bool translate = true) {
  Tracked t;
  t.translate = translate;
  t.world.reserve(cloud.size());
  const Mat3 r = pose.rotation_matrix();
  const Vec3 shift = translate ? pose.translation : Vec3::Zero();
  for (const auto& x : cloud) t.add(r * x + shift, x, owner);
  return t;
}

Tracked posed_subset(const PointCloud& cloud, const std::vector<std::size_t>& idx,
                     const Pose& pose, std::size_t owner) {
  Tracked t;
  const Mat3 r = pose.rotation_matrix();
  for (std::size_t i : idx) t.add(r * cloud[i] + pose.translation, cloud[i], owner);
  return t;
}

void push_gradient(const Tracked& c, std::size_t i, const Vec3& g,
                   const std::vector<Pose>& poses,
                   std::vector<PoseGradient>& grad) {
  const std::size_t owner = c.part[i];
  if (owner == kFixed) return;
  add_point_gradient(poses[owner].rotation, c.local[i], g, c.translate,
                     grad[owner]);
}

// Chamfer value of (a, b); with weight > 0, adds weight * dChamfer into grad
// under fixed correspondences.
double tracked_chamfer(const Tracked& a, const Tracked& b, double weight,
                       const std::vector<Pose>& poses,
                       std::vector<PoseGradient>& grad,
                       std::vector<std::size_t>& matches) {
  double value = 0.0;
  const auto one_way = [&](const Tracked& from, const Tracked& to) {
    const auto nn = nearest_neighbors(from.world, to.world);
    for (std::size_t i = 0; i < nn.size(); ++i) {
      value += nn[i].sq_dist;
      matches.push_back(nn[i].index);
      if (weight == 0.0) continue;
      const Vec3 g = 2.0 * weight * (from.world[i] - to.world[nn[i].index]);
      push_gradient(from, i, g, poses, grad);
      push_gradient(to, nn[i].index, -g, poses, grad);
    }
  };
  one_way(a, b);
  one_way(b, a);
  return value;
}

void check_counts(std::size_t poses, std::size_t parts, const char* what) {
  if (poses != parts) {
    throw InvalidInput(std::string(what) + ": " + std::to_string(poses) +
                       " poses for " + std::to_string(parts) + " parts");
  }
}

void finish(LossReport& r, const std::vector<Pose>& poses) {
  for (std::size_t i = 0; i < poses.size(); ++i) {
    project_to_tangent(poses[i].rotation, r.gradient[i]);
  }
}

}  // namespace

void add_point_gradient(const Quat& q, const Vec3& x, const Vec3& g,
                        bool with_translation, PoseGradient& grad) {
  // R(q) x = (w^2 - v.v) x + 2 (v.x) v + 2 w (v x x)
  const double w = q.w();
  const Vec3 v = q.vec();
  grad[0] += g.dot(2.0 * w * x + 2.0 * v.cross(x));
  grad.segment<3>(1) += -2.0 * v * x.dot(g) + 2.0 * x * v.dot(g) +
                        2.0 * v.dot(x) * g + 2.0 * w * x.cross(g);
  if (with_translation) grad.tail<3>() += g;
}

void project_to_tangent(const Quat& q, PoseGradient& grad) {
  const Eigen::Vector4d u(q.w(), q.x(), q.y(), q.z());
  grad.head<4>() -= u.dot(grad.head<4>()) * u;
}

void accumulate(LossReport& into, const LossReport& other) {
  into.l_t += other.l_t;
  into.l_r += other.l_r;
  into.l_a += other.l_a;
  into.l_flip += other.l_flip;
  into.l_coarse += other.l_coarse;
  into.l_fine += other.l_fine;
  into.shape_total += other.shape_total;
  into.joint_total += other.joint_total;
  if (into.gradient.empty()) {
    into.gradient = other.gradient;
  } else if (!other.gradient.empty()) {
    for (std::size_t i = 0; i < into.gradient.size(); ++i) {
      into.gradient[i] += other.gradient[i];
    }
  }
  into.matches.insert(into.matches.end(), other.matches.begin(),
                      other.matches.end());
}

LossReport shape_loss(const std::vector<Pose>& poses,
                      const std::vector<Pose>& targets,
                      const std::vector<PointCloud>& parts,
                      const LossWeights& w) {
  check_counts(poses.size(), parts.size(), "shape loss");
  check_counts(targets.size(), parts.size(), "shape loss targets");
  const std::size_t n = parts.size();
  LossReport r;
  r.gradient.assign(n, PoseGradient::Zero());

  for (std::size_t i = 0; i < n && w.translation != 0.0; ++i) {
    const Vec3 d = poses[i].translation - targets[i].translation;
    r.l_t += d.squaredNorm();
    r.gradient[i].tail<3>() += 2.0 * w.translation * d;
  }

  for (std::size_t i = 0; i < n && w.rotation != 0.0; ++i) {
    const Tracked a = posed_part(parts[i], poses[i], i, false);
    const Tracked b = posed_part(parts[i], targets[i], kFixed, false);
    r.l_r += tracked_chamfer(a, b, w.rotation, poses, r.gradient, r.matches);
  }

  Tracked pred, gt;
  for (std::size_t i = 0; i < n && w.assembly != 0.0; ++i) {
    const Mat3 rp = poses[i].rotation_matrix();
    const Mat3 rg = targets[i].rotation_matrix();
    for (const auto& x : parts[i]) {
      pred.add(rp * x + poses[i].translation, x, i);
      gt.add(rg * x + targets[i].translation, x, kFixed);
    }
  }
  if (w.assembly != 0.0) {
    r.l_a = tracked_chamfer(pred, gt, w.assembly, poses, r.gradient, r.matches);
  }

  r.shape_total = w.translation * r.l_t + w.rotation * r.l_r + w.assembly * r.l_a;
  finish(r, poses);
  return r;
}

std::vector<std::size_t> match_congruent_parts(
    const std::vector<Pose>& poses, const std::vector<Pose>& gt_poses,
    const std::vector<PointCloud>& parts, const CongruentClasses& classes,
    const LossWeights& w) {
  const std::size_t n = parts.size();
  check_counts(poses.size(), n, "congruent matching");
  check_counts(gt_poses.size(), n, "congruent matching targets");
  validate_partition(classes, n);

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (const auto& cls : classes) {
    if (cls.size() < 2) continue;
    const auto m = static_cast<Eigen::Index>(cls.size());
    Eigen::MatrixXd cost(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const std::size_t i = cls[static_cast<std::size_t>(a)];
      const PointCloud mine = apply_pose(Pose{poses[i].rotation, Vec3::Zero()},
                                         parts[i]);
      for (Eigen::Index b = 0; b < m; ++b) {
        const std::size_t k = cls[static_cast<std::size_t>(b)];
        const PointCloud theirs =
            apply_pose(Pose{gt_poses[k].rotation, Vec3::Zero()}, parts[i]);
        cost(a, b) = w.translation * (poses[i].translation -
                                      gt_poses[k].translation).squaredNorm() +
                     w.rotation * chamfer_distance(mine, theirs);
      }
    }
    const Assignment as = hungarian(cost);
    for (std::size_t a = 0; a < cls.size(); ++a) {
      perm[cls[a]] = cls[as.col_of_row[a]];
    }
  }
  return perm;
}

std::vector<Pose> permuted_targets(const std::vector<Pose>& gt_poses,
                                   std::span<const std::size_t> part_perm) {
  check_counts(part_perm.size(), gt_poses.size(), "part permutation");
  std::vector<Pose> out;
  out.reserve(gt_poses.size());
  for (std::size_t k : part_perm) out.push_back(gt_poses.at(k));
  return out;
}

OrderInvariantLoss order_invariant_shape_loss(
    const std::vector<Pose>& poses, const std::vector<Pose>& gt_poses,
    const std::vector<PointCloud>& parts, const CongruentClasses& classes,
    const LossWeights& weights) {
  OrderInvariantLoss out;
  out.part_perm = match_congruent_parts(poses, gt_poses, parts, classes, weights);
  out.report = shape_loss(poses, permuted_targets(gt_poses, out.part_perm),
                          parts, weights);
  return out;
}

LossReport joint_loss(const std::vector<Pose>& poses,
                      const ShapeInstance& shape, const JointPairing& pairing,
                      const std::vector<Pose>& flip_targets,
                      const LossWeights& w, const FlipFilter& flip_filter) {
  const std::size_t n = shape.num_parts();
  check_counts(poses.size(), n, "joint loss");
  if (!flip_targets.empty()) {
    check_counts(flip_targets.size(), n, "joint loss flip targets");
  }
  LossReport r;
  r.gradient.assign(n, PoseGradient::Zero());

  if (!flip_targets.empty() && w.flip != 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (flip_filter && !flip_filter(i)) continue;
      const Mat3 rp = poses[i].rotation_matrix();
      const Mat3 rg = flip_targets[i].rotation_matrix();
      for (const auto& x : shape.parts[i]) {
        const Vec3 d = (rp * x + poses[i].translation) -
                       (rg * x + flip_targets[i].translation);
        r.l_flip += d.squaredNorm();
        add_point_gradient(poses[i].rotation, x, 2.0 * w.flip * d, true,
                           r.gradient[i]);
      }
    }
  }

  for (const auto& pr : pairing.pairs) {
    if (pr.peg >= shape.joints.size() || pr.hole >= shape.joints.size()) {
      throw InvalidInput("joint loss: pairing (" + std::to_string(pr.peg) +
                         ", " + std::to_string(pr.hole) +
                         ") references an unknown joint");
    }
    const Joint& a = shape.joints[pr.peg];
    const Joint& b = shape.joints[pr.hole];
    if (w.coarse != 0.0) {
      const Vec3 d =
          poses[a.part].apply(a.centroid) - poses[b.part].apply(b.centroid);
      r.l_coarse += d.squaredNorm();
      const Vec3 g = 2.0 * w.coarse * d;
      add_point_gradient(poses[a.part].rotation, a.centroid, g, true,
                         r.gradient[a.part]);
      add_point_gradient(poses[b.part].rotation, b.centroid, -g, true,
                         r.gradient[b.part]);
    }
    if (w.fine == 0.0) continue;
    const Tracked ta =
        posed_subset(shape.parts[a.part], a.point_indices, poses[a.part], a.part);
    const Tracked tb =
        posed_subset(shape.parts[b.part], b.point_indices, poses[b.part], b.part);
    r.l_fine += tracked_chamfer(ta, tb, w.fine, poses, r.gradient, r.matches);
  }

  r.joint_total = w.flip * r.l_flip + w.coarse * r.l_coarse + w.fine * r.l_fine;
  finish(r, poses);
  return r;
}

}  // namespace asmforge
