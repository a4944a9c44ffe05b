#include "asmforge/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>

#include "asmforge/dataset.hpp"
#include "asmforge/errors.hpp"

namespace asmforge {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::kChair:
      return "chair";
    case Category::kTable:
      return "table";
    case Category::kCabinet:
      return "cabinet";
  }
  return "chair";
}

Category parse_category(std::string_view name) {
  if (name == "chair") return Category::kChair;
  if (name == "table") return Category::kTable;
  if (name == "cabinet") return Category::kCabinet;
  throw InvalidInput("unknown category '" + std::string(name) +
                     "' (expected chair, table or cabinet)");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

const Quat kFlipY = Quat(Eigen::AngleAxisd(M_PI, Vec3::UnitY()));
const Quat kFlipZ = Quat(Eigen::AngleAxisd(M_PI, Vec3::UnitZ()));

Pose placed(const Vec3& t, const Quat& q = Quat::Identity()) {
  return Pose{canonical_sign(q), t};
}

Vec3 sample_box_surface(const Vec3& half, Rng& rng) {
  const double areas[3] = {half[1] * half[2], half[0] * half[2],
                           half[0] * half[1]};
  const double pick = uniform(rng, 0.0, areas[0] + areas[1] + areas[2]);
  const int axis = pick < areas[0] ? 0 : (pick < areas[0] + areas[1] ? 1 : 2);
  Vec3 p;
  for (int a = 0; a < 3; ++a) p[a] = uniform(rng, -half[a], half[a]);
  p[axis] = uniform(rng, 0.0, 1.0) < 0.5 ? -half[axis] : half[axis];
  return p;
}

// kJointPoints points on the face `axis = side * half[axis]`, restricted to
// [lo, hi] on the other two axes. With `mirror_x` the patch is symmetric
// under x -> -x.
std::vector<Vec3> face_patch(const Vec3& half, int axis, int side,
                             const Vec3& lo, const Vec3& hi, Rng& rng,
                             bool mirror_x = false) {
  std::vector<Vec3> out;
  const std::size_t n = mirror_x ? kJointPoints / 2 : kJointPoints;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = uniform(rng, lo[a], hi[a]);
    p[axis] = side * half[axis];
    out.push_back(p);
  }
  if (mirror_x) {
    for (std::size_t i = 0; i < n; ++i) {
      out.emplace_back(-out[i][0], out[i][1], out[i][2]);
    }
  }
  return out;
}

std::vector<Vec3> full_face_patch(const Vec3& half, int axis, int side,
                                  Rng& rng) {
  return face_patch(half, axis, side, -half, half, rng);
}

std::vector<Vec3> rotated(const std::vector<Vec3>& pts, const Quat& q) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(q * p);
  return out;
}

// Box templates shared between congruent parts, rigid placements, and the
// contact patches that glue them together.
class Draft {
 public:
  std::size_t add_template(const Vec3& half) {
    templates_.push_back({half, {}});
    return templates_.size() - 1;
  }

  std::size_t add_patch(std::size_t tmpl, std::vector<Vec3> local) {
    templates_[tmpl].patches.push_back(std::move(local));
    return templates_[tmpl].patches.size() - 1;
  }

  std::size_t add_part(std::size_t tmpl, const Pose& placement) {
    part_template_.push_back(tmpl);
    placement_.push_back(placement);
    return placement_.size() - 1;
  }

  // Copies patch `patch` of src's template onto dst's template. Congruent
  // destinations receiving the same local patch share one copy.
  void contact(std::size_t src, std::size_t patch, std::size_t dst) {
    const auto& pts = templates_[part_template_[src]].patches[patch];
    const Pose to_dst = placement_[dst].inverse();
    std::vector<Vec3> local;
    local.reserve(pts.size());
    for (const auto& p : pts) local.push_back(to_dst.apply(placement_[src].apply(p)));

    auto& dst_t = templates_[part_template_[dst]];
    bool shared = false;
    for (const auto& existing : dst_t.patches) {
      if (existing.size() == local.size() &&
          chamfer_distance_brute(existing, local) < 1e-18) {
        shared = true;
        break;
      }
    }
    if (!shared) dst_t.patches.push_back(std::move(local));
    designed_.insert({std::min(src, dst), std::max(src, dst)});
  }

  ShapeInstance finalize(std::size_t points_per_part, std::uint64_t seed,
                         std::string shape_id, std::string category) const;

 private:
  struct Template {
    Vec3 half;
    std::vector<std::vector<Vec3>> patches;
  };

  std::vector<Template> templates_;
  std::vector<std::size_t> part_template_;
  std::vector<Pose> placement_;
  std::set<PartEdge> designed_;
};

ShapeInstance Draft::finalize(std::size_t points_per_part, std::uint64_t seed,
                              std::string shape_id,
                              std::string category) const {
  ShapeInstance shape;
  shape.shape_id = std::move(shape_id);
  shape.category = std::move(category);

  std::vector<Canonicalization> canon;
  for (std::size_t t = 0; t < templates_.size(); ++t) {
    const Template& tmpl = templates_[t];
    const std::size_t patch_pts = tmpl.patches.size() * kJointPoints;
    if (points_per_part < patch_pts + kJointPoints) {
      throw GenerationError(
          "points_per_part = " + std::to_string(points_per_part) +
          " leaves too few surface points beside " +
          std::to_string(tmpl.patches.size()) + " contact patches");
    }
    const std::size_t surface = points_per_part - patch_pts;
    Rng rng(derive_seed(seed, 1000 + t));
    std::vector<Vec3> pool;
    pool.reserve(4 * surface);
    for (std::size_t i = 0; i < 4 * surface; ++i) {
      pool.push_back(sample_box_surface(tmpl.half, rng));
    }
    const PointCloud pool_cloud(std::move(pool));
    const auto picked =
        furthest_point_sample(pool_cloud, surface, derive_seed(seed, 2000 + t));
    std::vector<Vec3> pts;
    pts.reserve(points_per_part);
    for (std::size_t i : picked) pts.push_back(pool_cloud[i]);
    for (const auto& patch : tmpl.patches) {
      pts.insert(pts.end(), patch.begin(), patch.end());
    }
    canon.push_back(canonicalize(PointCloud(std::move(pts))));
    if (canon.back().degenerate) {
      throw GenerationError("part template " + std::to_string(t) +
                            " has an ambiguous principal frame");
    }
  }

  const std::size_t n = placement_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Canonicalization& c = canon[part_template_[i]];
    shape.parts.push_back(c.cloud);
    shape.gt_poses.push_back(rigid_compose(placement_[i], c.pose));
  }
  std::vector<std::size_t> class_slot(templates_.size(), templates_.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = part_template_[i];
    if (class_slot[t] == templates_.size()) {
      class_slot[t] = shape.congruent_classes.size();
      shape.congruent_classes.emplace_back();
    }
    shape.congruent_classes[class_slot[t]].push_back(i);
  }

  std::vector<PointCloud> posed;
  for (std::size_t i = 0; i < n; ++i) {
    posed.push_back(apply_pose(shape.gt_poses[i], shape.parts[i]));
    for (const auto& p : posed.back()) {
      if (p.cwiseAbs().maxCoeff() > 0.5 + 1e-9) {
        throw GenerationError(shape.shape_id + ": part " + std::to_string(i) +
                              " leaves the unit cube");
      }
    }
  }

  const DetectedJoints detected = detect_joints(posed);
  std::set<PartEdge> found;
  for (const auto& c : detected.contacts) found.insert({c.part_a, c.part_b});
  for (const auto& e : found) {
    if (!designed_.count(e)) {
      throw GenerationError(shape.shape_id + ": parts " +
                            std::to_string(e.first) + " and " +
                            std::to_string(e.second) +
                            " touch without a designed joint");
    }
  }
  for (const auto& e : designed_) {
    if (!found.count(e)) {
      throw GenerationError(shape.shape_id + ": designed joint between parts " +
                            std::to_string(e.first) + " and " +
                            std::to_string(e.second) + " was not detected");
    }
  }

  JointAnnotation ann =
      annotate_joints(detected, shape.parts, shape.congruent_classes);
  shape.joints = std::move(ann.joints);
  shape.gt_pairing = std::move(ann.pairing);
  for (const auto& pr : shape.gt_pairing.pairs) {
    const Joint& a = shape.joints[pr.peg];
    const Joint& b = shape.joints[pr.hole];
    const double cd = chamfer_distance(posed[a.part].subset(a.point_indices),
                                       posed[b.part].subset(b.point_indices));
    if (cd > 1e-12) {
      throw GenerationError(shape.shape_id + ": joints " +
                            std::to_string(a.id) + "/" + std::to_string(b.id) +
                            " do not coincide (chamfer " + std::to_string(cd) +
                            ")");
    }
  }
  if (detect_congruent_classes(shape.parts) != shape.congruent_classes) {
    throw GenerationError(shape.shape_id +
                          ": congruence detection disagrees with the design");
  }
  validate_shape(shape);
  return shape;
}

ShapeInstance build_chair(const ShapeSpec& spec, std::uint64_t seed,
                          std::string id) {
  Rng rng(derive_seed(seed, 0));
  const double w = uniform(rng, 0.40, 0.50);
  const double d = uniform(rng, 0.40, 0.50);
  const double s = uniform(rng, 0.06, 0.08);
  const double a = uniform(rng, 0.04, 0.06);
  const double hl = uniform(rng, 0.30, 0.38);
  const double inset = uniform(rng, 0.0, 0.02);
  const double bt = uniform(rng, 0.04, 0.06);
  const double hb = uniform(rng, 0.30, 0.38);
  const double ys = (hl - hb) / 2.0;

  Draft draft;
  const auto seat_t = draft.add_template({w / 2, s / 2, d / 2});
  const auto back_t = draft.add_template({w / 2, hb / 2, bt / 2});
  const Vec3 leg_half(a / 2, hl / 2, a / 2);
  const auto leg_t = draft.add_template(leg_half);
  const auto leg_top = draft.add_patch(leg_t, full_face_patch(leg_half, 1, 1, rng));
  const auto back_bottom =
      draft.add_patch(back_t, full_face_patch({w / 2, hb / 2, bt / 2}, 1, -1, rng));

  const auto seat = draft.add_part(seat_t, placed({0, ys, 0}));
  const auto back =
      draft.add_part(back_t, placed({0, ys + s / 2 + hb / 2, -d / 2 + bt / 2}));
  const double lx = w / 2 - a / 2 - inset;
  const double lz = d / 2 - a / 2 - inset;
  const double ly = ys - s / 2 - hl / 2;
  for (const auto& [sx, sz] : {std::pair{1, 1}, {-1, 1}, {1, -1}, {-1, -1}}) {
    const auto leg = draft.add_part(leg_t, placed({sx * lx, ly, sz * lz}));
    draft.contact(leg, leg_top, seat);
  }
  draft.contact(back, back_bottom, seat);
  return draft.finalize(spec.points_per_part, seed, std::move(id), "chair");
}

ShapeInstance build_table(const ShapeSpec& spec, std::uint64_t seed,
                          std::string id) {
  Rng rng(derive_seed(seed, 0));
  const double w = uniform(rng, 0.70, 0.90);
  const double d = uniform(rng, 0.45, 0.60);
  const double tt = uniform(rng, 0.05, 0.07);
  const double a = uniform(rng, 0.05, 0.07);
  const double hl = uniform(rng, 0.40, 0.55);
  const double inset = uniform(rng, 0.02, 0.05);
  const double as = uniform(rng, 0.025, 0.035);
  const bool stretchers = spec.stretchers.value_or(uniform(rng, 0.0, 1.0) < 0.5);
  const double yt = hl / 2.0;

  Draft draft;
  const auto top_t = draft.add_template({w / 2, tt / 2, d / 2});
  const Vec3 leg_half(a / 2, hl / 2, a / 2);
  const auto leg_t = draft.add_template(leg_half);
  const auto leg_top = draft.add_patch(leg_t, full_face_patch(leg_half, 1, 1, rng));

  const auto top = draft.add_part(top_t, placed({0, yt, 0}));
  const double lx = w / 2 - a / 2 - inset;
  const double lz = d / 2 - a / 2 - inset;
  const double ly = yt - tt / 2 - hl / 2;
  // Back legs are the front template turned half a revolution about y.
  const auto fl = draft.add_part(leg_t, placed({-lx, ly, lz}));
  const auto fr = draft.add_part(leg_t, placed({lx, ly, lz}));
  const auto bl = draft.add_part(leg_t, placed({-lx, ly, -lz}, kFlipY));
  const auto br = draft.add_part(leg_t, placed({lx, ly, -lz}, kFlipY));
  for (auto leg : {fl, fr, bl, br}) draft.contact(leg, leg_top, top);

  if (stretchers) {
    const Vec3 half(as / 2, as / 2, lz - a / 2);
    const auto str_t = draft.add_template(half);
    auto front_end = full_face_patch(half, 2, 1, rng);
    auto back_end = rotated(front_end, kFlipY);
    const auto pf = draft.add_patch(str_t, std::move(front_end));
    const auto pb = draft.add_patch(str_t, std::move(back_end));
    const auto sl = draft.add_part(str_t, placed({-lx, ly, 0}));
    const auto sr = draft.add_part(str_t, placed({lx, ly, 0}));
    draft.contact(sl, pf, fl);
    draft.contact(sl, pb, bl);
    draft.contact(sr, pf, fr);
    draft.contact(sr, pb, br);
  }
  return draft.finalize(spec.points_per_part, seed, std::move(id), "table");
}

ShapeInstance build_cabinet(const ShapeSpec& spec, std::uint64_t seed,
                            std::string id) {
  Rng rng(derive_seed(seed, 0));
  const double w = uniform(rng, 0.50, 0.70);
  const double h = uniform(rng, 0.70, 0.90);
  const double d = uniform(rng, 0.35, 0.45);
  const double t = uniform(rng, 0.03, 0.04);
  const double tb = uniform(rng, 0.02, 0.03);
  const double gap = uniform(rng, 0.06, 0.08);
  std::size_t k = spec.shelves.value_or(
      2 + static_cast<std::size_t>(uniform(rng, 0.0, 3.0)));
  k = std::min<std::size_t>(k, 4);
  if (spec.shelves && (*spec.shelves < 2 || *spec.shelves > 4)) {
    throw InvalidInput("cabinet shelves must be in [2, 4]");
  }
  const double zc = tb / 2.0;

  Draft draft;
  const Vec3 side_half(t / 2, h / 2, d / 2);
  const Vec3 shelf_half(w / 2 - t, t / 2, d / 2);
  const Vec3 back_half(w / 2 - t - gap, h / 2, tb / 2);
  const auto side_t = draft.add_template(side_half);
  const auto shelf_t = draft.add_template(shelf_half);
  const auto back_t = draft.add_template(back_half);

  auto left_end = full_face_patch(shelf_half, 0, -1, rng);
  auto right_end = rotated(left_end, kFlipY);
  const auto pl = draft.add_patch(shelf_t, std::move(left_end));
  const auto pr = draft.add_patch(shelf_t, std::move(right_end));
  const Vec3 lo(-back_half[0], -shelf_half[1], -shelf_half[2]);
  const Vec3 hi(back_half[0], shelf_half[1], shelf_half[2]);
  const auto pback =
      draft.add_patch(shelf_t, face_patch(shelf_half, 2, -1, lo, hi, rng));

  const double sx = w / 2 - t / 2;
  const auto left = draft.add_part(side_t, placed({-sx, 0, zc}));
  const auto right = draft.add_part(side_t, placed({sx, 0, zc}, kFlipY));
  std::vector<std::size_t> shelves;
  for (std::size_t s = 0; s < k; ++s) {
    const double y = -h / 2 + t / 2 +
                     static_cast<double>(s) * (h - t) / static_cast<double>(k - 1);
    shelves.push_back(draft.add_part(shelf_t, placed({0, y, zc})));
  }
  const auto back = draft.add_part(back_t, placed({0, 0, zc - d / 2 - tb / 2}));
  for (auto s : shelves) {
    draft.contact(s, pl, left);
    draft.contact(s, pr, right);
    draft.contact(s, pback, back);
  }
  return draft.finalize(spec.points_per_part, seed, std::move(id), "cabinet");
}

}  // namespace

ShapeInstance generate_shape(const ShapeSpec& spec, std::uint64_t seed,
                             std::string shape_id) {
  if (shape_id.empty()) {
    shape_id = std::string(to_string(spec.category)) + "_seed" +
               std::to_string(seed);
  }
  switch (spec.category) {
    case Category::kChair:
      return build_chair(spec, seed, std::move(shape_id));
    case Category::kTable:
      return build_table(spec, seed, std::move(shape_id));
    case Category::kCabinet:
      return build_cabinet(spec, seed, std::move(shape_id));
  }
  throw InvalidInput("unknown category");
}

ShapeInstance generate_dataset_item(const ShapeSpec& spec, std::size_t index,
                                    std::uint64_t seed) {
  char id[64];
  std::snprintf(id, sizeof id, "%s_%04zu",
                std::string(to_string(spec.category)).c_str(), index);
  return generate_shape(spec, derive_seed(seed, index), id);
}

std::vector<ShapeInstance> generate_dataset(const ShapeSpec& spec,
                                            std::size_t count,
                                            std::uint64_t seed) {
  std::vector<ShapeInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(generate_dataset_item(spec, i, seed));
  }
  return out;
}

ShapeInstance make_peg_hole_pair(std::size_t points_per_part,
                                 std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0));
  const Vec3 half(0.15, 0.10, 0.12);
  Draft draft;
  const auto block = draft.add_template(half);
  const auto patch = draft.add_patch(
      block, face_patch(half, 1, 1, Vec3(0.0, 0.0, -0.05),
                        Vec3(0.06, 0.0, 0.05), rng, /*mirror_x=*/true));
  const auto lower = draft.add_part(block, placed({0, -half[1], 0}));
  const auto upper = draft.add_part(block, placed({0, half[1], 0}, kFlipZ));
  draft.contact(lower, patch, upper);
  return draft.finalize(points_per_part, seed, "peg_hole_pair", "pair");
}

}  // namespace asmforge
