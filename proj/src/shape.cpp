#include "asmforge/shape.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "asmforge/errors.hpp"

namespace asmforge {

std::string_view to_string(Sign s) {
  switch (s) {
    case Sign::kPeg:
      return "peg";
    case Sign::kHole:
      return "hole";
    case Sign::kNone:
      break;
  }
  return "none";
}

Sign opposite(Sign s) {
  if (s == Sign::kPeg) return Sign::kHole;
  if (s == Sign::kHole) return Sign::kPeg;
  return Sign::kNone;
}

void JointPairing::normalize() { std::sort(pairs.begin(), pairs.end()); }

std::vector<std::size_t> ShapeInstance::class_of_part() const {
  std::vector<std::size_t> out(parts.size(), 0);
  for (std::size_t c = 0; c < congruent_classes.size(); ++c) {
    for (std::size_t p : congruent_classes[c]) {
      if (p < out.size()) out[p] = c;
    }
  }
  return out;
}

std::vector<std::size_t> ShapeInstance::joints_of_part(std::size_t part) const {
  std::vector<std::size_t> out;
  for (const auto& j : joints) {
    if (j.part == part) out.push_back(j.id);
  }
  return out;
}

PointCloud ShapeInstance::joint_points(std::size_t joint_id) const {
  const Joint& j = joints.at(joint_id);
  return parts.at(j.part).subset(j.point_indices);
}

void refresh_joint_centroids(ShapeInstance& shape) {
  for (auto& j : shape.joints) {
    j.centroid = shape.joint_points(j.id).centroid();
  }
}

JointPairing pairing_from_mates(const std::vector<Joint>& joints) {
  JointPairing out;
  for (const auto& j : joints) {
    if (!j.mate || j.sign != Sign::kPeg) continue;
    out.pairs.push_back({j.id, *j.mate});
  }
  out.normalize();
  return out;
}

void validate_partition(const CongruentClasses& classes,
                        std::size_t num_parts) {
  std::vector<int> seen(num_parts, 0);
  for (const auto& cls : classes) {
    if (cls.empty()) throw InvalidInput("empty congruent class");
    for (std::size_t p : cls) {
      if (p >= num_parts) {
        throw InvalidInput("congruent class names unknown part " +
                           std::to_string(p));
      }
      if (seen[p]++) {
        throw InvalidInput("part " + std::to_string(p) +
                           " appears in two congruent classes");
      }
    }
  }
  for (std::size_t p = 0; p < num_parts; ++p) {
    if (!seen[p]) {
      throw InvalidInput("part " + std::to_string(p) +
                         " is missing from the congruent classes");
    }
  }
}

void validate_shape(const ShapeInstance& shape, std::size_t joint_points) {
  const std::size_t n = shape.parts.size();
  if (n == 0) throw InvalidInput(shape.shape_id + ": shape has no parts");
  if (shape.gt_poses.size() != n) {
    throw InvalidInput(shape.shape_id + ": " +
                       std::to_string(shape.gt_poses.size()) +
                       " ground-truth poses for " + std::to_string(n) +
                       " parts");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (shape.parts[i].empty()) {
      throw InvalidInput(shape.shape_id + ": part " + std::to_string(i) +
                         " has no points");
    }
    validate_pose(shape.gt_poses[i]);
  }
  validate_partition(shape.congruent_classes, n);

  for (std::size_t k = 0; k < shape.joints.size(); ++k) {
    const Joint& j = shape.joints[k];
    const std::string tag = shape.shape_id + ": joint " + std::to_string(k);
    if (j.id != k) throw InvalidInput(tag + " has id " + std::to_string(j.id));
    if (j.part >= n) throw InvalidInput(tag + " names unknown part");
    if (j.point_indices.empty()) throw InvalidInput(tag + " has no points");
    if (joint_points != 0 && j.point_indices.size() != joint_points) {
      throw InvalidInput(tag + " has " + std::to_string(j.point_indices.size()) +
                         " points, expected " + std::to_string(joint_points));
    }
    std::set<std::size_t> uniq(j.point_indices.begin(), j.point_indices.end());
    if (uniq.size() != j.point_indices.size()) {
      throw InvalidInput(tag + " repeats a point index");
    }
    if (*uniq.rbegin() >= shape.parts[j.part].size()) {
      throw InvalidInput(tag + " point index out of range");
    }
    if (j.mate) {
      if (*j.mate >= shape.joints.size()) {
        throw InvalidInput(tag + " mate out of range");
      }
      const Joint& m = shape.joints[*j.mate];
      if (!m.mate || *m.mate != j.id) {
        throw InvalidState(tag + " mate relation is not symmetric");
      }
      if (j.sign == Sign::kNone || m.sign != opposite(j.sign)) {
        throw InvalidState(tag + " and its mate do not carry opposite signs");
      }
    }
  }

  if (pairing_from_mates(shape.joints) != shape.gt_pairing) {
    throw InvalidState(shape.shape_id +
                       ": ground-truth pairing disagrees with joint mates");
  }
}

}  // namespace asmforge
