#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "asmforge/losses.hpp"
#include "asmforge/shape.hpp"

namespace asmforge {

enum class LossTerm { kTranslation, kRotation, kAssembly, kFlip, kCoarse, kFine };

std::string_view to_string(LossTerm term);
// Throws InvalidInput for an unknown name.
LossTerm parse_loss_term(std::string_view name);
const std::vector<LossTerm>& all_loss_terms();

// Unit weight on `term`, zero elsewhere.
LossWeights only_term(LossTerm term);

// Value and gradient of one term at `poses`, with `targets` as the assigned
// ground truth and the shape's own pairing.
LossReport evaluate_term(LossTerm term, const std::vector<Pose>& poses,
                         const std::vector<Pose>& targets,
                         const ShapeInstance& shape);

struct GradientCheckResult {
  double max_rel_error = 0.0;
  std::size_t trials = 0;
  std::size_t checked = 0;  // coordinates compared
  std::size_t skipped = 0;  // coordinates whose correspondences changed

  bool passed(double tol) const { return checked > 0 && max_rel_error <= tol; }
};

struct GradientCheckOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double step = 1e-5;
  // Multiplies the analytic gradient before comparison; 1.1 is a negative
  // control that must fail.
  double analytic_scale = 1.0;
};

// Central differences on the 7 parameters of every pose at random poses and
// targets. Per trial the relative error is |g_a - g_fd| / max(|g_a|, |g_fd|,
// 1e-10) over the coordinates whose nearest-neighbor correspondences are the
// same at theta - h, theta and theta + h.
GradientCheckResult gradient_check(LossTerm term, const ShapeInstance& shape,
                                   const GradientCheckOptions& options);

// Small random instance for gradient checks: 3 parts of 80 points, two
// peg-hole pairs of 50-point joints, singleton congruent classes.
ShapeInstance random_gradcheck_shape(std::uint64_t seed);

}  // namespace asmforge
