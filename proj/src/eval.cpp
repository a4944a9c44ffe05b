#include "asmforge/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include "asmforge/errors.hpp"
#include "asmforge/losses.hpp"
#include "asmforge/matching.hpp"

namespace asmforge {

namespace {

void check_counts(std::size_t pred, std::size_t parts) {
  if (pred != parts) {
    throw InvalidInput("evaluation: " + std::to_string(pred) +
                       " predicted poses for " + std::to_string(parts) +
                       " parts");
  }
}

double percent(std::size_t hits, std::size_t total) {
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(); }

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

MetricRow summarize(const std::string& category,
                    const std::vector<const ShapeMetrics*>& members) {
  MetricRow row;
  row.category = category;
  row.n_shapes = members.size();
  std::vector<double> cd, acc, jcd, jacc;
  for (const ShapeMetrics* m : members) {
    cd.push_back(m->shape_cd);
    acc.push_back(m->part_acc);
    if (m->joint_cd) jcd.push_back(*m->joint_cd);
    if (m->joint_acc) jacc.push_back(*m->joint_acc);
  }
  row.shape_cd = mean(cd);
  row.part_acc = mean(acc);
  if (!jcd.empty()) row.joint_cd = mean(jcd);
  if (!jacc.empty()) row.joint_acc = mean(jacc);
  return row;
}

}  // namespace

std::vector<std::size_t> evaluation_permutation(
    const std::vector<Pose>& pred, const std::vector<Pose>& gt,
    const std::vector<PointCloud>& parts, const CongruentClasses& classes) {
  return match_congruent_parts(pred, gt, parts, classes, LossWeights{});
}

std::vector<double> part_chamfers(const std::vector<Pose>& pred,
                                  const std::vector<Pose>& gt,
                                  const std::vector<PointCloud>& parts,
                                  const std::vector<std::size_t>& perm) {
  check_counts(pred.size(), parts.size());
  check_counts(gt.size(), parts.size());
  std::vector<double> out;
  out.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.push_back(chamfer_distance(apply_pose(pred[i], parts[i]),
                                   apply_pose(gt.at(perm.at(i)), parts[i])));
  }
  return out;
}

double part_accuracy(const std::vector<Pose>& pred, const std::vector<Pose>& gt,
                     const std::vector<PointCloud>& parts,
                     const CongruentClasses& classes, double tau_p) {
  const auto cds = part_chamfers(
      pred, gt, parts, evaluation_permutation(pred, gt, parts, classes));
  const auto hits = static_cast<std::size_t>(
      std::count_if(cds.begin(), cds.end(), [&](double c) { return c < tau_p; }));
  return percent(hits, cds.size());
}

double shape_cd(const std::vector<Pose>& pred, const std::vector<Pose>& gt,
                const std::vector<PointCloud>& parts,
                const CongruentClasses& classes) {
  const auto cds = part_chamfers(
      pred, gt, parts, evaluation_permutation(pred, gt, parts, classes));
  std::size_t points = 0;
  for (const auto& p : parts) points += p.size();
  return std::accumulate(cds.begin(), cds.end(), 0.0) /
         static_cast<double>(points);
}

std::vector<double> pair_chamfers(const std::vector<Pose>& pred,
                                  const ShapeInstance& shape,
                                  const std::vector<std::size_t>& perm) {
  check_counts(pred.size(), shape.num_parts());
  const JointPairing pairing = reassign_gt_pairing(shape, perm);
  std::vector<double> out;
  for (const auto& pr : pairing.pairs) {
    const Joint& a = shape.joints[pr.peg];
    const Joint& b = shape.joints[pr.hole];
    out.push_back(chamfer_distance(
        apply_pose(pred[a.part], shape.parts[a.part].subset(a.point_indices)),
        apply_pose(pred[b.part], shape.parts[b.part].subset(b.point_indices))));
  }
  return out;
}

std::optional<double> joint_accuracy(const std::vector<Pose>& pred,
                                     const ShapeInstance& shape, double tau_j) {
  if (shape.gt_pairing.empty()) return std::nullopt;
  const auto cds = pair_chamfers(
      pred, shape,
      evaluation_permutation(pred, shape.gt_poses, shape.parts,
                             shape.congruent_classes));
  const auto hits = static_cast<std::size_t>(
      std::count_if(cds.begin(), cds.end(), [&](double c) { return c < tau_j; }));
  return percent(hits, cds.size());
}

std::optional<double> joint_cd(const std::vector<Pose>& pred,
                               const ShapeInstance& shape) {
  if (shape.gt_pairing.empty()) return std::nullopt;
  return mean(pair_chamfers(
      pred, shape,
      evaluation_permutation(pred, shape.gt_poses, shape.parts,
                             shape.congruent_classes)));
}

ShapeMetrics evaluate_shape(const ShapeInstance& shape,
                            const std::vector<Pose>& pred,
                            const EvalThresholds& th) {
  check_counts(pred.size(), shape.num_parts());
  ShapeMetrics m;
  m.shape_id = shape.shape_id;
  m.category = shape.category;
  m.part_perm = evaluation_permutation(pred, shape.gt_poses, shape.parts,
                                       shape.congruent_classes);
  m.part_chamfer = part_chamfers(pred, shape.gt_poses, shape.parts, m.part_perm);
  std::size_t points = 0, hits = 0;
  for (std::size_t i = 0; i < shape.num_parts(); ++i) {
    points += shape.parts[i].size();
    if (m.part_chamfer[i] < th.tau_p) ++hits;
  }
  m.shape_cd = std::accumulate(m.part_chamfer.begin(), m.part_chamfer.end(), 0.0) /
               static_cast<double>(points);
  m.part_acc = percent(hits, shape.num_parts());
  if (!shape.gt_pairing.empty()) {
    m.pair_chamfer = pair_chamfers(pred, shape, m.part_perm);
    const auto jhits = static_cast<std::size_t>(
        std::count_if(m.pair_chamfer.begin(), m.pair_chamfer.end(),
                      [&](double c) { return c < th.tau_j; }));
    m.joint_cd = mean(m.pair_chamfer);
    m.joint_acc = percent(jhits, m.pair_chamfer.size());
  }
  return m;
}

MetricReport evaluate_dataset(const std::vector<Prediction>& predictions,
                              const std::vector<ShapeInstance>& shapes,
                              const EvalThresholds& th) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) by_id[p.shape_id] = &p;
  std::map<std::string, const ShapeInstance*> shape_by_id;
  for (const auto& s : shapes) shape_by_id[s.shape_id] = &s;

  MetricReport report;
  for (const auto& [id, shape] : shape_by_id) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      report.missing.push_back(id);
      continue;
    }
    if (it->second->poses.size() != shape->num_parts()) {
      throw InvalidInput("prediction for " + id + " has " +
                         std::to_string(it->second->poses.size()) +
                         " poses, shape has " +
                         std::to_string(shape->num_parts()) + " parts");
    }
    report.shapes.push_back(evaluate_shape(*shape, it->second->poses, th));
  }
  for (const auto& [id, pred] : by_id) {
    if (!shape_by_id.count(id)) report.unknown.push_back(id);
  }
  if (report.shapes.empty()) return report;

  std::map<std::string, std::vector<const ShapeMetrics*>> groups;
  std::vector<const ShapeMetrics*> all;
  for (const auto& m : report.shapes) {
    groups[m.category].push_back(&m);
    all.push_back(&m);
  }
  for (const auto& [category, members] : groups) {
    report.rows.push_back(summarize(category, members));
  }
  report.rows.push_back(summarize("average", all));
  return report;
}

std::string report_csv(const MetricReport& report) {
  std::string out = "category,shape_cd,part_acc,joint_cd,joint_acc,n_shapes\n";
  for (const auto& r : report.rows) {
    out += r.category + "," + fmt(r.shape_cd) + "," + fmt(r.part_acc) + "," +
           fmt(r.joint_cd) + "," + fmt(r.joint_acc) + "," +
           std::to_string(r.n_shapes) + "\n";
  }
  return out;
}

Json report_json(const MetricReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"category", r.category},
                    {"shape_cd", r.shape_cd},
                    {"part_acc", r.part_acc},
                    {"joint_cd", opt_json(r.joint_cd)},
                    {"joint_acc", opt_json(r.joint_acc)},
                    {"n_shapes", r.n_shapes}});
  }
  Json shapes = Json::array();
  for (const auto& m : report.shapes) {
    shapes.push_back({{"shape_id", m.shape_id},
                      {"category", m.category},
                      {"shape_cd", m.shape_cd},
                      {"part_acc", m.part_acc},
                      {"joint_cd", opt_json(m.joint_cd)},
                      {"joint_acc", opt_json(m.joint_acc)},
                      {"part_perm", m.part_perm},
                      {"part_chamfer", m.part_chamfer},
                      {"pair_chamfer", m.pair_chamfer}});
  }
  return {{"rows", std::move(rows)},
          {"shapes", std::move(shapes)},
          {"missing", report.missing},
          {"unknown", report.unknown},
          {"warnings", report.warning_count()}};
}

}  // namespace asmforge
