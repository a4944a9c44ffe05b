#include "asmforge/dataset.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "asmforge/errors.hpp"
#include "asmforge/kdtree.hpp"

namespace asmforge {

namespace {

// The k entries with the smallest (distance, index), returned ascending by
// index.
std::vector<std::size_t> closest_k(const std::vector<Neighbor>& nn,
                                   std::size_t k) {
  std::vector<std::size_t> idx(nn.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                    idx.end(), [&](std::size_t a, std::size_t b) {
                      if (nn[a].sq_dist != nn[b].sq_dist) {
                        return nn[a].sq_dist < nn[b].sq_dist;
                      }
                      return a < b;
                    });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<Neighbor> query_all(const KdTree& tree, const PointCloud& cloud) {
  std::vector<Neighbor> out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = tree.nearest(cloud[i]);
  return out;
}

}  // namespace

DetectedJoints detect_joints(const std::vector<PointCloud>& posed_parts,
                             std::size_t k, double tau) {
  if (k == 0) throw InvalidInput("joint detection: k must be positive");
  for (std::size_t i = 0; i < posed_parts.size(); ++i) {
    if (posed_parts[i].size() < k) {
      throw InvalidInput("joint detection: part " + std::to_string(i) +
                         " has " + std::to_string(posed_parts[i].size()) +
                         " points, fewer than k = " + std::to_string(k));
    }
  }
  std::vector<KdTree> trees;
  trees.reserve(posed_parts.size());
  for (const auto& p : posed_parts) trees.emplace_back(p.view());

  const double tau_sq = tau * tau;
  DetectedJoints out;
  for (std::size_t i = 0; i < posed_parts.size(); ++i) {
    for (std::size_t j = i + 1; j < posed_parts.size(); ++j) {
      const auto nn_i = query_all(trees[j], posed_parts[i]);
      double min_sq = std::numeric_limits<double>::infinity();
      for (const auto& n : nn_i) min_sq = std::min(min_sq, n.sq_dist);
      if (!(min_sq < tau_sq)) continue;
      const auto nn_j = query_all(trees[i], posed_parts[j]);

      const std::size_t id_a = out.joints.size();
      const std::size_t id_b = id_a + 1;
      Joint a{id_a, i, Sign::kNone, closest_k(nn_i, k), Vec3::Zero(), id_b};
      Joint b{id_b, j, Sign::kNone, closest_k(nn_j, k), Vec3::Zero(), id_a};
      a.centroid = posed_parts[i].subset(a.point_indices).centroid();
      b.centroid = posed_parts[j].subset(b.point_indices).centroid();
      out.joints.push_back(std::move(a));
      out.joints.push_back(std::move(b));
      out.contacts.push_back({i, j, id_a, id_b});
    }
  }
  return out;
}

std::size_t JointMask::count(int label) const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), label));
}

JointMask build_joint_mask(const PointCloud& part,
                           const std::vector<Joint>& joints) {
  JointMask mask;
  mask.labels.assign(part.size(), 0);
  mask.joint_ids.assign(part.size(), std::nullopt);
  std::vector<const Joint*> ordered;
  for (const auto& j : joints) ordered.push_back(&j);
  std::sort(ordered.begin(), ordered.end(),
            [](const Joint* a, const Joint* b) { return a->id < b->id; });
  for (const Joint* j : ordered) {
    if (j->sign == Sign::kNone) {
      throw InvalidState("joint mask: joint " + std::to_string(j->id) +
                         " carries no sign");
    }
    const int label = j->sign == Sign::kPeg ? -1 : 1;
    for (std::size_t idx : j->point_indices) {
      if (idx >= part.size()) {
        throw InvalidInput("joint mask: joint " + std::to_string(j->id) +
                           " indexes past the part");
      }
      if (mask.joint_ids[idx]) continue;  // lower id already owns it
      mask.labels[idx] = label;
      mask.joint_ids[idx] = j->id;
    }
  }
  return mask;
}

CongruentClasses detect_congruent_classes(const std::vector<PointCloud>& parts,
                                          double eps) {
  const std::size_t n = parts.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (find(i) == find(j)) continue;
      if (chamfer_distance(parts[i], parts[j]) < eps) {
        const std::size_t ri = find(i), rj = find(j);
        parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }
  CongruentClasses out;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] == n) {
      slot[r] = out.size();
      out.emplace_back();
    }
    out[slot[r]].push_back(i);
  }
  return out;
}

JointAnnotation annotate_joints(const DetectedJoints& detected,
                                const std::vector<PointCloud>& canonical_parts,
                                const CongruentClasses& classes) {
  const std::size_t n = canonical_parts.size();
  validate_partition(classes, n);
  std::vector<bool> congruent(n, false);
  for (const auto& cls : classes) {
    if (cls.size() < 2) continue;
    for (std::size_t p : cls) congruent[p] = true;
  }
  std::vector<PartEdge> edges;
  for (const auto& c : detected.contacts) edges.emplace_back(c.part_a, c.part_b);

  JointAnnotation out;
  out.signs = assign_joint_signs(
      PartConnectivityGraph(n, std::move(edges), std::move(congruent)));
  out.joints = detected.joints;
  for (auto& j : out.joints) {
    if (j.part >= n) throw InvalidInput("annotation: joint names unknown part");
    j.centroid = canonical_parts[j.part].subset(j.point_indices).centroid();
  }
  for (const auto& c : detected.contacts) {
    Joint& a = out.joints.at(c.joint_a);
    Joint& b = out.joints.at(c.joint_b);
    const Sign sa = out.signs.joint_sign(c.part_a, c.part_b);
    if (sa == Sign::kNone) {
      // Removed contact: joints keep their part's sign but lose their mate.
      a.sign = out.signs.part_signs[c.part_a];
      b.sign = out.signs.part_signs[c.part_b];
      a.mate.reset();
      b.mate.reset();
      continue;
    }
    a.sign = sa;
    b.sign = out.signs.joint_sign(c.part_b, c.part_a);
    a.mate = b.id;
    b.mate = a.id;
  }
  out.pairing = pairing_from_mates(out.joints);
  return out;
}

void annotate_shape(ShapeInstance& shape, std::size_t k, double tau) {
  std::vector<PointCloud> posed;
  posed.reserve(shape.num_parts());
  for (std::size_t i = 0; i < shape.num_parts(); ++i) {
    posed.push_back(apply_pose(shape.gt_poses[i], shape.parts[i]));
  }
  const DetectedJoints detected = detect_joints(posed, k, tau);
  JointAnnotation ann =
      annotate_joints(detected, shape.parts, shape.congruent_classes);
  shape.joints = std::move(ann.joints);
  shape.gt_pairing = std::move(ann.pairing);
}

std::vector<ShapeInstance> filter_shapes(std::vector<ShapeInstance> shapes,
                                         std::size_t max_pairs) {
  std::erase_if(shapes, [&](const ShapeInstance& s) {
    return s.num_joint_pairs() > max_pairs;
  });
  return shapes;
}

}  // namespace asmforge
