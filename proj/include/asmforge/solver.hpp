#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asmforge/errors.hpp"
#include "asmforge/eval.hpp"
#include "asmforge/graph.hpp"
#include "asmforge/losses.hpp"
#include "asmforge/shape.hpp"
#include "asmforge/shape_io.hpp"

namespace asmforge {

enum class Stage { kPart, kJoint };
enum class SolveMode { kSupervisedFit, kJointDriven };

std::string_view to_string(Stage s);
std::string_view to_string(SolveMode m);
// Both throw InvalidInput for unknown names.
SolveMode parse_mode(std::string_view name);
// Comma-separated list such as "part,joint,part".
std::vector<Stage> parse_schedule(std::string_view text);

inline constexpr double kDefaultAntiCollapseWeight = 100.0;

struct SolverConfig {
  std::vector<Stage> schedule = {Stage::kPart, Stage::kJoint, Stage::kPart,
                                 Stage::kJoint, Stage::kJoint};
  std::size_t steps_per_stage = 50;
  double step_size = 0.05;
  std::size_t max_halvings = 20;
  double temperature = kDefaultConnectivityTemperature;
  double anti_collapse_weight = kDefaultAntiCollapseWeight;
  SolveMode mode = SolveMode::kSupervisedFit;
  double perturb_rotation_deg = 10.0;
  double perturb_translation = 0.05;
  std::uint64_t seed = 0;
  LossWeights weights;
  // A stage stops once a step lowers the objective by less than
  // stop_tolerance * (1 + objective).
  double stop_tolerance = 1e-12;

  void validate() const;
};

struct SolveState {
  std::vector<Pose> poses;
  JointPairing pairing;
  ConnectivityMatrix connectivity;
  std::size_t stage_index = 0;
};

struct StageRecord {
  std::string stage;  // "init", "part" or "joint"
  std::vector<Pose> poses;
  JointPairing pairing;
  LossReport losses;  // objective terms of the active mode
  double objective = 0.0;
  std::size_t steps = 0;
  ShapeMetrics metrics;
};

struct SolveTrace {
  std::vector<StageRecord> records;  // |schedule| + 1
};

struct SolveResult {
  std::vector<Pose> poses;
  JointPairing pairing;
  SolveTrace trace;
};

// Raised when the objective stops being finite; carries the trace so far.
class SolverError : public NumericError {
 public:
  SolverError(const std::string& what, SolveTrace trace)
      : NumericError(what), trace_(std::move(trace)) {}
  const SolveTrace& trace() const { return trace_; }

 private:
  SolveTrace trace_;
};

struct PenaltyResult {
  double value = 0.0;
  std::vector<PoseGradient> gradient;
  std::vector<double> per_part;  // hinge contributions touching each part
};

// weight * sum over part pairs of max(0, d_min - |c_i - c_j|)^2 with c the
// posed centroids and d_min the mean of the two parts' RMS radii. Coincident
// centroids are pushed apart along +x.
PenaltyResult anti_collapse_penalty(const std::vector<Pose>& poses,
                                    const std::vector<PointCloud>& parts,
                                    double weight);

// Ground truth disturbed by a random rotation of at most `max_deg` degrees
// about a random axis and a random translation of length at most `max_trans`.
std::vector<Pose> perturb_poses(const std::vector<Pose>& poses, double max_deg,
                                double max_trans, std::uint64_t seed);

// Initial state for `config.mode`: perturbed ground truth (supervised-fit) or
// identity poses (joint-driven); pairing proposed from those poses.
SolveState initial_state(const ShapeInstance& shape, const SolverConfig& config);

// Gradient steps on the mode's objective with the pairing held fixed.
SolveState part_stage(const SolveState& state, const ShapeInstance& shape,
                      const SolverConfig& config);

// Re-proposes the pairing from connectivity at the current poses, then
// descends on the joint objective, moving only parts whose pooled joint
// residual (or collapse penalty) is non-zero.
SolveState joint_stage(const SolveState& state, const ShapeInstance& shape,
                       const SolverConfig& config);

SolveResult solve(const ShapeInstance& shape, const SolverConfig& config);

// Objective terms of the active mode at `state` (used for trace records).
LossReport mode_objective(const SolveState& state, const ShapeInstance& shape,
                          const SolverConfig& config);

Json trace_to_json(const SolveTrace& trace);

}  // namespace asmforge
