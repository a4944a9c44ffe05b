#include "asmforge/geometry.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "asmforge/errors.hpp"
#include "asmforge/kdtree.hpp"

namespace asmforge {

namespace {

// Below this many targets a linear scan beats building a tree.
constexpr std::size_t kBruteForceLimit = 32;

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

PointCloud::PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!finite(points_[i])) {
      throw InvalidInput("point " + std::to_string(i) + " is not finite");
    }
  }
}

Vec3 PointCloud::centroid() const {
  if (points_.empty()) throw InvalidInput("centroid of an empty cloud");
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points_) sum += p;
  return sum / static_cast<double>(points_.size());
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  std::vector<Vec3> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= points_.size()) {
      throw InvalidInput("point index " + std::to_string(i) + " out of range");
    }
    out.push_back(points_[i]);
  }
  return PointCloud(std::move(out));
}

Quat canonical_sign(const Quat& q) {
  if (q.w() < 0.0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  return q;
}

Quat quat_from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (!(n > 0.0)) return Quat::Identity();
  return canonical_sign(Quat(Eigen::AngleAxisd(angle_rad, axis / n)));
}

bool is_unit(const Quat& q, double tol) {
  return q.coeffs().allFinite() && std::abs(q.norm() - 1.0) <= tol;
}

void validate_pose(const Pose& pose) {
  if (!is_unit(pose.rotation)) {
    throw InvalidPose("rotation quaternion is not unit length (|q| = " +
                      std::to_string(pose.rotation.norm()) + ")");
  }
  if (!pose.translation.allFinite()) {
    throw InvalidPose("translation is not finite");
  }
}

Pose Pose::from(const Quat& rotation, const Vec3& translation) {
  Pose p{canonical_sign(rotation), translation};
  validate_pose(p);
  return p;
}

Pose Pose::inverse() const {
  const Quat inv = rotation.conjugate();
  return Pose{canonical_sign(inv), -(inv * translation)};
}

PointCloud apply_pose(const Pose& pose, const PointCloud& cloud) {
  validate_pose(pose);
  const Mat3 r = pose.rotation_matrix();
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const auto& x : cloud) out.push_back(r * x + pose.translation);
  return PointCloud(std::move(out));
}

Pose compose_pose(const PoseDelta& delta, const Pose& prev) {
  if (!is_unit(delta.rotation)) {
    throw InvalidPose("pose delta rotation is not unit length");
  }
  validate_pose(prev);
  Quat q = delta.rotation * prev.rotation;
  q.normalize();
  return Pose{canonical_sign(q), delta.translation + prev.translation};
}

Pose rigid_compose(const Pose& outer, const Pose& inner) {
  Quat q = outer.rotation * inner.rotation;
  q.normalize();
  return Pose{canonical_sign(q),
              outer.rotation * inner.translation + outer.translation};
}

std::vector<Neighbor> nearest_neighbors_brute(std::span<const Vec3> queries,
                                              std::span<const Vec3> targets) {
  if (targets.empty()) throw InvalidInput("nearest neighbor: empty target set");
  std::vector<Neighbor> out(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    Neighbor best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const double d = (queries[q] - targets[t]).squaredNorm();
      if (d < best.sq_dist) best = {t, d};
    }
    out[q] = best;
  }
  return out;
}

std::vector<Neighbor> nearest_neighbors(std::span<const Vec3> queries,
                                        std::span<const Vec3> targets) {
  if (targets.empty()) throw InvalidInput("nearest neighbor: empty target set");
  if (targets.size() <= kBruteForceLimit) {
    return nearest_neighbors_brute(queries, targets);
  }
  const KdTree tree(targets);
  std::vector<Neighbor> out(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    out[q] = tree.nearest(queries[q]);
  }
  return out;
}

namespace {

double chamfer_from(const std::vector<Neighbor>& ab,
                    const std::vector<Neighbor>& ba) {
  double sum = 0.0;
  for (const auto& n : ab) sum += n.sq_dist;
  for (const auto& n : ba) sum += n.sq_dist;
  return sum;
}

void require_nonempty(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) {
    throw InvalidInput("chamfer distance of an empty cloud");
  }
}

}  // namespace

double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_nonempty(a, b);
  return chamfer_from(nearest_neighbors(a, b), nearest_neighbors(b, a));
}

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  return chamfer_distance(a.view(), b.view());
}

double chamfer_distance_brute(std::span<const Vec3> a,
                              std::span<const Vec3> b) {
  require_nonempty(a, b);
  return chamfer_from(nearest_neighbors_brute(a, b),
                      nearest_neighbors_brute(b, a));
}

std::vector<std::size_t> furthest_point_sample_from(const PointCloud& cloud,
                                                    std::size_t k,
                                                    std::size_t start) {
  const std::size_t n = cloud.size();
  if (k < 1 || k > n) {
    throw InvalidInput("furthest point sample: k = " + std::to_string(k) +
                       " not in [1, " + std::to_string(n) + "]");
  }
  if (start >= n) throw InvalidInput("furthest point sample: bad start index");

  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::size_t current = start;
  for (std::size_t s = 0; s < k; ++s) {
    picked.push_back(current);
    min_dist[current] = -1.0;  // never re-selected
    std::size_t next = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (min_dist[i] < 0.0) continue;
      const double d = (cloud[i] - cloud[current]).squaredNorm();
      if (d < min_dist[i]) min_dist[i] = d;
      if (min_dist[i] > best) {
        best = min_dist[i];
        next = i;
      }
    }
    current = next;
  }
  return picked;
}

std::vector<std::size_t> furthest_point_sample(const PointCloud& cloud,
                                               std::size_t k,
                                               std::uint64_t seed) {
  if (cloud.empty()) throw InvalidInput("furthest point sample: empty cloud");
  std::mt19937_64 rng(seed);
  const std::size_t start = static_cast<std::size_t>(rng() % cloud.size());
  return furthest_point_sample_from(cloud, k, start);
}

namespace {

// Flips `axis` so the point with the largest |projection| projects positive.
Vec3 orient_axis(const Vec3& axis, const PointCloud& cloud, const Vec3& c) {
  double best_abs = -1.0;
  double best_proj = 0.0;
  for (const auto& x : cloud) {
    const double s = axis.dot(x - c);
    if (std::abs(s) > best_abs) {
      best_abs = std::abs(s);
      best_proj = s;
    }
  }
  return best_proj < 0.0 ? Vec3(-axis) : axis;
}

}  // namespace

Canonicalization canonicalize(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidInput("canonicalize: empty cloud");
  const Vec3 c = cloud.centroid();
  Mat3 cov = Mat3::Zero();
  for (const auto& x : cloud) {
    const Vec3 d = x - c;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(cloud.size());

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  const Vec3 ascending = solver.eigenvalues();
  const Vec3 eig(ascending[2], ascending[1], ascending[0]);

  Canonicalization out;
  out.eigenvalues = eig;
  const double scale = eig[0];
  const double rel = 1e-9 * scale;
  const bool repeated =
      !(scale > 0.0) || eig[0] - eig[1] <= rel || eig[1] - eig[2] <= rel;
  const bool rank_deficient = eig[2] <= 1e-12 * scale;
  out.degenerate = repeated || rank_deficient;

  Mat3 r = Mat3::Identity();
  if (!repeated) {
    const Vec3 e1 = orient_axis(solver.eigenvectors().col(2), cloud, c);
    const Vec3 e2 = orient_axis(solver.eigenvectors().col(1), cloud, c);
    r.col(0) = e1.normalized();
    r.col(1) = e2.normalized();
    r.col(2) = r.col(0).cross(r.col(1)).normalized();
  }
  Quat q(r);
  q.normalize();
  out.pose = Pose{canonical_sign(q), c};

  const Mat3 rt = out.pose.rotation_matrix().transpose();
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const auto& x : cloud) pts.push_back(rt * (x - c));
  out.cloud = PointCloud(std::move(pts));
  return out;
}

}  // namespace asmforge
