#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "asmforge/geometry.hpp"
#include "asmforge/shape.hpp"
#include "asmforge/shape_io.hpp"

namespace asmforge {

inline constexpr double kPartAccuracyThreshold = 0.1;
inline constexpr double kJointAccuracyThreshold = 0.01;

struct EvalThresholds {
  double tau_p = kPartAccuracyThreshold;
  double tau_j = kJointAccuracyThreshold;
};

// Ground-truth slot of every predicted part: Hungarian matching within
// congruent classes on the default shape-loss costs.
std::vector<std::size_t> evaluation_permutation(
    const std::vector<Pose>& pred, const std::vector<Pose>& gt,
    const std::vector<PointCloud>& parts, const CongruentClasses& classes);

// chamfer(q_i(p_i), q_gt[perm[i]](p_i)) per part.
std::vector<double> part_chamfers(const std::vector<Pose>& pred,
                                  const std::vector<Pose>& gt,
                                  const std::vector<PointCloud>& parts,
                                  const std::vector<std::size_t>& perm);

// Percentage of parts whose Chamfer distance to its assigned ground truth is
// below tau_p.
double part_accuracy(const std::vector<Pose>& pred, const std::vector<Pose>& gt,
                     const std::vector<PointCloud>& parts,
                     const CongruentClasses& classes,
                     double tau_p = kPartAccuracyThreshold);

// Sum of per-part Chamfer distances divided by the total point count.
double shape_cd(const std::vector<Pose>& pred, const std::vector<Pose>& gt,
                const std::vector<PointCloud>& parts,
                const CongruentClasses& classes);

// Chamfer distance between the posed peg and hole of every pair of the
// ground-truth pairing reassigned through the evaluation permutation.
std::vector<double> pair_chamfers(const std::vector<Pose>& pred,
                                  const ShapeInstance& shape,
                                  const std::vector<std::size_t>& perm);

// Absent (nullopt) for shapes without joint pairs.
std::optional<double> joint_accuracy(const std::vector<Pose>& pred,
                                     const ShapeInstance& shape,
                                     double tau_j = kJointAccuracyThreshold);
std::optional<double> joint_cd(const std::vector<Pose>& pred,
                               const ShapeInstance& shape);

struct ShapeMetrics {
  std::string shape_id;
  std::string category;
  double shape_cd = 0.0;
  double part_acc = 0.0;
  std::optional<double> joint_cd;
  std::optional<double> joint_acc;
  std::vector<std::size_t> part_perm;
  std::vector<double> part_chamfer;
  std::vector<double> pair_chamfer;
};

ShapeMetrics evaluate_shape(const ShapeInstance& shape,
                            const std::vector<Pose>& pred,
                            const EvalThresholds& thresholds = {});

struct MetricRow {
  std::string category;  // "average" for the all-shape row
  double shape_cd = 0.0;
  double part_acc = 0.0;
  std::optional<double> joint_cd;
  std::optional<double> joint_acc;
  std::size_t n_shapes = 0;
};

struct MetricReport {
  std::vector<ShapeMetrics> shapes;  // shape-id order
  std::vector<MetricRow> rows;       // categories by name, then "average"
  std::vector<std::string> missing;  // shapes without a prediction
  std::vector<std::string> unknown;  // predictions without a shape

  std::size_t warning_count() const { return missing.size() + unknown.size(); }
};

// Rows average the per-shape metrics; joint columns average only the shapes
// that have joints. Throws InvalidInput when a prediction's pose count does
// not match its shape.
MetricReport evaluate_dataset(const std::vector<Prediction>& predictions,
                              const std::vector<ShapeInstance>& shapes,
                              const EvalThresholds& thresholds = {});

// Columns category,shape_cd,part_acc,joint_cd,joint_acc,n_shapes; absent
// joint metrics are left empty.
std::string report_csv(const MetricReport& report);
Json report_json(const MetricReport& report);

}  // namespace asmforge
