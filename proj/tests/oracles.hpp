#pragma once

// Brute-force reference implementations. They share no code with the
// library: rotations come from the explicit quaternion formula, nearest
// neighbors from double loops and assignments from full enumeration.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "asmforge/geometry.hpp"
#include "asmforge/matching.hpp"
#include "asmforge/shape.hpp"

namespace oracle {

using asmforge::Pose;
using asmforge::Vec3;
using P3 = std::array<double, 3>;

inline P3 to_p3(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline std::vector<P3> to_p3(const asmforge::PointCloud& c) {
  std::vector<P3> out;
  for (const auto& p : c) out.push_back(to_p3(p));
  return out;
}

// R(q) written out for a unit quaternion (w, x, y, z).
inline std::array<P3, 3> rotation(double w, double x, double y, double z) {
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

inline std::vector<P3> posed(const Pose& pose, const std::vector<P3>& pts) {
  const auto& q = pose.rotation;
  const auto r = rotation(q.w(), q.x(), q.y(), q.z());
  std::vector<P3> out;
  for (const auto& p : pts) {
    P3 y{};
    for (int i = 0; i < 3; ++i) {
      y[i] = r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] +
             pose.translation[i];
    }
    out.push_back(y);
  }
  return out;
}

inline std::vector<P3> posed(const Pose& pose, const asmforge::PointCloud& c) {
  return posed(pose, to_p3(c));
}

inline double sq(const P3& a, const P3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

// Index of the nearest target (lowest index on ties) and its squared distance.
inline std::pair<std::size_t, double> nearest(const P3& q,
                                              const std::vector<P3>& targets) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const double d = sq(q, targets[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return {best, best_d};
}

inline double one_way(const std::vector<P3>& a, const std::vector<P3>& b) {
  double s = 0.0;
  for (const auto& p : a) s += nearest(p, b).second;
  return s;
}

inline double chamfer(const std::vector<P3>& a, const std::vector<P3>& b) {
  return one_way(a, b) + one_way(b, a);
}

inline double chamfer(const asmforge::PointCloud& a,
                      const asmforge::PointCloud& b) {
  return chamfer(to_p3(a), to_p3(b));
}

inline double min_sq_distance(const std::vector<P3>& a,
                              const std::vector<P3>& b) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : a) m = std::min(m, nearest(p, b).second);
  return m;
}

struct BestPerm {
  std::vector<std::size_t> perm;
  double cost = std::numeric_limits<double>::infinity();
};

// Minimum-cost permutation by enumeration; the first (lexicographically
// smallest) optimum is kept.
template <typename Cost>
BestPerm min_cost_permutation(std::size_t n, const Cost& cost) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  BestPerm best;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += cost(i, p[i]);
    if (c < best.cost) {
      best.cost = c;
      best.perm = p;
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

// Every permutation of 0..n-1 that maps each part inside its class.
inline std::vector<std::vector<std::size_t>> class_permutations(
    const asmforge::CongruentClasses& classes, std::size_t n) {
  std::vector<std::vector<std::size_t>> out{std::vector<std::size_t>(n)};
  std::iota(out[0].begin(), out[0].end(), std::size_t{0});
  for (const auto& cls : classes) {
    std::vector<std::vector<std::size_t>> next;
    std::vector<std::size_t> images = cls;
    std::sort(images.begin(), images.end());
    do {
      for (auto base : out) {
        for (std::size_t a = 0; a < cls.size(); ++a) base[cls[a]] = images[a];
        next.push_back(base);
      }
    } while (std::next_permutation(images.begin(), images.end()));
    out = std::move(next);
  }
  return out;
}

inline Pose random_pose(std::mt19937_64& rng, double spread = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-spread, spread);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return Pose::from(q, Vec3(u(rng), u(rng), u(rng)));
}

inline asmforge::PointCloud random_cloud(std::mt19937_64& rng, std::size_t n,
                                         double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return asmforge::PointCloud(std::move(pts));
}

// Geodesic angle between two rotations, in radians.
inline double rotation_angle(const Eigen::Quaterniond& a,
                             const Eigen::Quaterniond& b) {
  const double d = std::abs(a.w() * b.w() + a.x() * b.x() + a.y() * b.y() +
                            a.z() * b.z());
  return 2.0 * std::acos(std::min(1.0, d));
}

// Checks a sign assignment against the contact graph it was computed from.
// Returns an empty string when every rule holds, otherwise the first
// violation: each edge is either retained or removed; retained edges carry a
// peg on one end and a hole on the other; an edge is removed only when both
// ends are non-congruent and the traversal gave them the same sign; an edge
// whose ends got different traversal signs keeps them.
inline std::string sign_assignment_violation(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
    const std::vector<bool>& congruent, const asmforge::SignAssignment& a) {
  using asmforge::Sign;
  std::set<std::pair<std::size_t, std::size_t>> all;
  for (auto [u, v] : edges) {
    if (u != v) all.insert({std::min(u, v), std::max(u, v)});
  }
  if (a.part_signs.size() != n) return "part_signs has the wrong size";
  for (Sign s : a.part_signs) {
    if (s == Sign::kNone) return "a part was left without a traversal sign";
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : a.edges) {
    const std::pair<std::size_t, std::size_t> key{e.a, e.b};
    if (!all.count(key)) return "retained edge not in graph";
    if (!seen.insert(key).second) return "edge reported twice";
    const bool opposite = (e.sign_a == Sign::kPeg && e.sign_b == Sign::kHole) ||
                          (e.sign_a == Sign::kHole && e.sign_b == Sign::kPeg);
    if (!opposite) return "retained edge without opposite signs";
    const Sign ta = a.part_signs[e.a];
    const Sign tb = a.part_signs[e.b];
    if (ta != tb && (e.sign_a != ta || e.sign_b != tb)) {
      return "non-conflicting edge changed its traversal signs";
    }
    if (a.joint_sign(e.a, e.b) != e.sign_a || a.joint_sign(e.b, e.a) != e.sign_b) {
      return "joint_sign disagrees with the retained edge";
    }
  }
  for (const auto& [u, v] : a.removed_edges) {
    if (!all.count({u, v})) return "removed edge not in graph";
    if (!seen.insert({u, v}).second) return "edge reported twice";
    if (congruent[u] || congruent[v]) return "removed edge touches a congruent part";
    if (a.part_signs[u] != a.part_signs[v]) return "removed edge had no conflict";
    if (a.joint_sign(u, v) != Sign::kNone) return "removed edge still has a sign";
  }
  if (seen.size() != all.size()) return "an edge is neither retained nor removed";
  return {};
}

struct Metrics {
  std::vector<std::size_t> perm;
  double part_acc = 0.0;
  double shape_cd = 0.0;
  bool has_joints = false;
  double joint_acc = 0.0;
  double joint_cd = 0.0;
};

// Evaluation by enumeration: the class permutation minimizing
// sum |t_i - t_k|^2 + 10 * chamfer(R_i p_i, R_k p_i), then per-part and
// per-pair Chamfer distances with joints relabeled by their position on the
// part that took over each slot.
inline Metrics metrics(const asmforge::ShapeInstance& s,
                       const std::vector<Pose>& pred, double tau_p = 0.1,
                       double tau_j = 0.01) {
  const std::size_t n = s.num_parts();
  Metrics m;
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (const auto& cls : s.congruent_classes) {
    for (std::size_t i : cls) {
      for (std::size_t k : cls) {
        const Pose ri{pred[i].rotation, Vec3::Zero()};
        const Pose rk{s.gt_poses[k].rotation, Vec3::Zero()};
        cost[i][k] = (pred[i].translation - s.gt_poses[k].translation).squaredNorm() +
                     10.0 * chamfer(posed(ri, s.parts[i]), posed(rk, s.parts[i]));
      }
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& perm : class_permutations(s.congruent_classes, n)) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += cost[i][perm[i]];
    if (c < best) {
      best = c;
      m.perm = perm;
    }
  }
  std::size_t points = 0, hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cd = chamfer(posed(pred[i], s.parts[i]),
                              posed(s.gt_poses[m.perm[i]], s.parts[i]));
    m.shape_cd += cd;
    points += s.parts[i].size();
    if (cd < tau_p) ++hits;
  }
  m.shape_cd /= static_cast<double>(points);
  m.part_acc = 100.0 * static_cast<double>(hits) / static_cast<double>(n);
  if (s.gt_pairing.empty()) return m;

  std::vector<std::size_t> occupant(n);
  for (std::size_t i = 0; i < n; ++i) occupant[m.perm[i]] = i;
  auto on_part = [&](std::size_t p) {
    std::vector<std::size_t> ids;
    for (const auto& j : s.joints) {
      if (j.part == p) ids.push_back(j.id);
    }
    return ids;
  };
  auto relabel = [&](std::size_t joint) {
    const std::size_t slot = s.joints[joint].part;
    const auto mine = on_part(slot);
    const auto pos = static_cast<std::size_t>(
        std::find(mine.begin(), mine.end(), joint) - mine.begin());
    return on_part(occupant[slot])[pos];
  };
  m.has_joints = true;
  std::size_t jhits = 0;
  for (const auto& pr : s.gt_pairing.pairs) {
    const auto& a = s.joints[relabel(pr.peg)];
    const auto& b = s.joints[relabel(pr.hole)];
    const double cd = chamfer(posed(pred[a.part], s.joint_points(a.id)),
                              posed(pred[b.part], s.joint_points(b.id)));
    m.joint_cd += cd;
    if (cd < tau_j) ++jhits;
  }
  m.joint_cd /= static_cast<double>(s.gt_pairing.size());
  m.joint_acc = 100.0 * static_cast<double>(jhits) /
                static_cast<double>(s.gt_pairing.size());
  return m;
}

}  // namespace oracle
