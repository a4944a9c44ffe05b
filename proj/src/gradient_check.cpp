#include "asmforge/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "asmforge/errors.hpp"

namespace asmforge {

namespace {

using Rng = std::mt19937_64;

Quat random_rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d v;
  do {
    v = Eigen::Vector4d(n(rng), n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-3);
  v.normalize();
  return canonical_sign(Quat(v[0], v[1], v[2], v[3]));
}

Pose random_pose(Rng& rng, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  return Pose{random_rotation(rng), Vec3(u(rng), u(rng), u(rng))};
}

// Pose with parameter `coord` moved by `delta`; the quaternion is
// renormalized so the loss sees R(q / |q|).
Pose nudged(const Pose& p, std::size_t coord, double delta) {
  Pose out = p;
  if (coord < 4) {
    Eigen::Vector4d q(p.rotation.w(), p.rotation.x(), p.rotation.y(),
                      p.rotation.z());
    q[static_cast<Eigen::Index>(coord)] += delta;
    q.normalize();
    out.rotation = Quat(q[0], q[1], q[2], q[3]);
  } else {
    out.translation[static_cast<Eigen::Index>(coord - 4)] += delta;
  }
  return out;
}

}  // namespace

std::string_view to_string(LossTerm term) {
  switch (term) {
    case LossTerm::kTranslation:
      return "translation";
    case LossTerm::kRotation:
      return "rotation";
    case LossTerm::kAssembly:
      return "assembly";
    case LossTerm::kFlip:
      return "flip";
    case LossTerm::kCoarse:
      return "coarse";
    case LossTerm::kFine:
      return "fine";
  }
  return "translation";
}

LossTerm parse_loss_term(std::string_view name) {
  for (LossTerm t : all_loss_terms()) {
    if (to_string(t) == name) return t;
  }
  throw InvalidInput("unknown loss term '" + std::string(name) + "'");
}

const std::vector<LossTerm>& all_loss_terms() {
  static const std::vector<LossTerm> terms = {
      LossTerm::kTranslation, LossTerm::kRotation, LossTerm::kAssembly,
      LossTerm::kFlip,        LossTerm::kCoarse,   LossTerm::kFine};
  return terms;
}

LossWeights only_term(LossTerm term) {
  LossWeights w{0, 0, 0, 0, 0, 0};
  switch (term) {
    case LossTerm::kTranslation:
      w.translation = 1.0;
      break;
    case LossTerm::kRotation:
      w.rotation = 1.0;
      break;
    case LossTerm::kAssembly:
      w.assembly = 1.0;
      break;
    case LossTerm::kFlip:
      w.flip = 1.0;
      break;
    case LossTerm::kCoarse:
      w.coarse = 1.0;
      break;
    case LossTerm::kFine:
      w.fine = 1.0;
      break;
  }
  return w;
}

LossReport evaluate_term(LossTerm term, const std::vector<Pose>& poses,
                         const std::vector<Pose>& targets,
                         const ShapeInstance& shape) {
  const LossWeights w = only_term(term);
  switch (term) {
    case LossTerm::kTranslation:
    case LossTerm::kRotation:
    case LossTerm::kAssembly:
      return shape_loss(poses, targets, shape.parts, w);
    case LossTerm::kFlip:
      return joint_loss(poses, shape, shape.gt_pairing, targets, w);
    case LossTerm::kCoarse:
    case LossTerm::kFine:
      return joint_loss(poses, shape, shape.gt_pairing, {}, w);
  }
  throw InvalidInput("unknown loss term");
}

GradientCheckResult gradient_check(LossTerm term, const ShapeInstance& shape,
                                   const GradientCheckOptions& opt) {
  if (opt.trials == 0) throw InvalidInput("gradient check needs trials >= 1");
  const std::size_t n = shape.num_parts();
  Rng rng(opt.seed);
  GradientCheckResult res;
  res.trials = opt.trials;
  const auto value = [&](const LossReport& r) {
    return r.shape_total + r.joint_total;
  };

  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    std::vector<Pose> poses, targets;
    for (std::size_t i = 0; i < n; ++i) poses.push_back(random_pose(rng, 0.3));
    for (std::size_t i = 0; i < n; ++i) targets.push_back(random_pose(rng, 0.3));

    const LossReport base = evaluate_term(term, poses, targets, shape);
    Eigen::VectorXd ga(7 * n), gfd(7 * n);
    std::vector<char> keep(7 * n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < 7; ++c) {
        const auto idx = static_cast<Eigen::Index>(7 * i + c);
        ga[idx] = opt.analytic_scale * base.gradient[i][static_cast<Eigen::Index>(c)];
        auto plus = poses, minus = poses;
        plus[i] = nudged(poses[i], c, opt.step);
        minus[i] = nudged(poses[i], c, -opt.step);
        const LossReport lp = evaluate_term(term, plus, targets, shape);
        const LossReport lm = evaluate_term(term, minus, targets, shape);
        if (lp.matches != base.matches || lm.matches != base.matches) {
          keep[static_cast<std::size_t>(idx)] = 0;
        }
        gfd[idx] = (value(lp) - value(lm)) / (2.0 * opt.step);
      }
    }
    double diff = 0.0, na = 0.0, nf = 0.0;
    for (Eigen::Index k = 0; k < ga.size(); ++k) {
      if (!keep[static_cast<std::size_t>(k)]) {
        ++res.skipped;
        continue;
      }
      ++res.checked;
      diff += (ga[k] - gfd[k]) * (ga[k] - gfd[k]);
      na += ga[k] * ga[k];
      nf += gfd[k] * gfd[k];
    }
    const double rel = std::sqrt(diff) /
                       std::max({std::sqrt(na), std::sqrt(nf), 1e-10});
    res.max_rel_error = std::max(res.max_rel_error, rel);
  }
  return res;
}

ShapeInstance random_gradcheck_shape(std::uint64_t seed) {
  constexpr std::size_t kParts = 3;
  constexpr std::size_t kPoints = 80;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-0.2, 0.2);

  ShapeInstance s;
  s.shape_id = "gradcheck_" + std::to_string(seed);
  s.category = "random";
  for (std::size_t i = 0; i < kParts; ++i) {
    std::vector<Vec3> pts;
    for (std::size_t k = 0; k < kPoints; ++k) pts.emplace_back(u(rng), u(rng), u(rng));
    s.parts.emplace_back(std::move(pts));
    s.gt_poses.push_back(Pose::identity());
    s.congruent_classes.push_back({i});
  }
  const auto pick = [&]() {
    std::vector<std::size_t> idx(kPoints);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(kJointPoints);
    std::sort(idx.begin(), idx.end());
    return idx;
  };
  // Pairs (part 0 peg, part 1 hole) and (part 2 peg, part 1 hole).
  const std::size_t owner[4] = {0, 1, 2, 1};
  const Sign sign[4] = {Sign::kPeg, Sign::kHole, Sign::kPeg, Sign::kHole};
  const std::size_t mate[4] = {1, 0, 3, 2};
  for (std::size_t k = 0; k < 4; ++k) {
    s.joints.push_back({k, owner[k], sign[k], pick(), Vec3::Zero(), mate[k]});
  }
  refresh_joint_centroids(s);
  s.gt_pairing = pairing_from_mates(s.joints);
  validate_shape(s);
  return s;
}

}  // namespace asmforge
