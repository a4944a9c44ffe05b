#include "asmforge/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "asmforge/matching.hpp"

namespace asmforge {

namespace {

// Pooled joint residuals at or below this count as aligned.
constexpr double kResidualGate = 1e-12;
// After an accepted step the next trial step doubles, up to this multiple of
// the configured initial step.
constexpr double kMaxStepGrowth = 1e6;

struct Objective {
  LossReport loss;
  double value = 0.0;
};

// The continuous objective of one stage with everything discrete frozen.
struct StageProblem {
  const ShapeInstance* shape = nullptr;
  const SolverConfig* config = nullptr;
  JointPairing pairing;
  std::vector<Pose> targets;  // empty in joint-driven mode

  Objective evaluate(const std::vector<Pose>& poses) const {
    Objective out;
    const LossWeights& w = config->weights;
    if (config->mode == SolveMode::kSupervisedFit) {
      out.loss = shape_loss(poses, targets, shape->parts, w);
      accumulate(out.loss, joint_loss(poses, *shape, pairing, targets, w));
    } else {
      LossWeights jw = w;
      jw.flip = 0.0;
      out.loss = joint_loss(poses, *shape, pairing, {}, jw);
      const PenaltyResult pen =
          anti_collapse_penalty(poses, shape->parts, config->anti_collapse_weight);
      out.loss.joint_total += pen.value;
      for (std::size_t i = 0; i < poses.size(); ++i) {
        out.loss.gradient[i] += pen.gradient[i];
      }
    }
    out.value = out.loss.total();
    return out;
  }
};

// Per-part metric for the descent: point count for translation, inertia
// tensor about the centroid (canonical frame) for rotation.
struct Metric {
  std::vector<double> count;
  std::vector<Mat3> inertia_inv;
};

Metric part_metric(const std::vector<PointCloud>& parts) {
  Metric m;
  for (const auto& p : parts) {
    const Vec3 c = p.centroid();
    Mat3 j = Mat3::Zero();
    for (const auto& x : p) {
      const Vec3 d = x - c;
      j += d.squaredNorm() * Mat3::Identity() - d * d.transpose();
    }
    j += 1e-6 * (j.trace() + 1e-12) * Mat3::Identity();
    m.count.push_back(static_cast<double>(p.size()));
    m.inertia_inv.push_back(j.inverse());
  }
  return m;
}

// Preconditioned step: the quaternion gradient is mapped to a world-frame
// rotation vector, scaled by the inverse inertia and applied as dR * R.
std::vector<Pose> step_poses(const std::vector<Pose>& poses,
                             const std::vector<PoseGradient>& grad,
                             const std::vector<char>& active,
                             const Metric& metric, double alpha) {
  std::vector<Pose> out = poses;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (!active[i]) continue;
    const Quat& q = poses[i].rotation;
    const double gw = grad[i][0];
    const Vec3 gv = grad[i].segment<3>(1);
    const Vec3 v = q.vec();
    const Vec3 g_omega = 0.5 * (-gw * v + q.w() * gv + v.cross(gv));
    const Mat3 r = poses[i].rotation_matrix();
    const Vec3 omega =
        -alpha * (r * (metric.inertia_inv[i] * (r.transpose() * g_omega)));
    PoseDelta delta;
    const double angle = omega.norm();
    if (angle > 0.0) delta.rotation = quat_from_axis_angle(omega / angle, angle);
    delta.translation = -alpha * grad[i].tail<3>() / metric.count[i];
    out[i] = compose_pose(delta, poses[i]);
  }
  return out;
}

// Preconditioned gradient descent with backtracking step halving; returns the number of
// accepted steps.
std::size_t descend(std::vector<Pose>& poses, const StageProblem& problem,
                    const std::vector<char>& active) {
  const SolverConfig& cfg = *problem.config;
  Objective cur = problem.evaluate(poses);
  if (!std::isfinite(cur.value)) {
    throw NumericError("objective is not finite at the start of a stage");
  }
  const Metric metric = part_metric(problem.shape->parts);
  double alpha = cfg.step_size;
  std::size_t accepted = 0;
  for (std::size_t step = 0; step < cfg.steps_per_stage; ++step) {
    double gnorm = 0.0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      if (active[i]) gnorm += cur.loss.gradient[i].squaredNorm();
    }
    if (gnorm == 0.0) break;

    bool improved = false;
    std::vector<Pose> trial;
    Objective next;
    for (std::size_t h = 0; h <= cfg.max_halvings; ++h) {
      trial = step_poses(poses, cur.loss.gradient, active, metric, alpha);
      next = problem.evaluate(trial);
      if (std::isfinite(next.value) && next.value < cur.value) {
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
    const double gain = cur.value - next.value;
    poses = std::move(trial);
    cur = std::move(next);
    ++accepted;
    if (gain < cfg.stop_tolerance * (1.0 + cur.value)) break;
    alpha = std::min(2.0 * alpha, kMaxStepGrowth * cfg.step_size);
  }
  return accepted;
}

std::vector<Pose> supervised_targets(const std::vector<Pose>& poses,
                                     const ShapeInstance& shape,
                                     const SolverConfig& cfg) {
  return permuted_targets(
      shape.gt_poses, match_congruent_parts(poses, shape.gt_poses, shape.parts,
                                            shape.congruent_classes,
                                            cfg.weights));
}

StageProblem make_problem(const SolveState& state, const ShapeInstance& shape,
                          const SolverConfig& cfg) {
  StageProblem p;
  p.shape = &shape;
  p.config = &cfg;
  p.pairing = state.pairing;
  if (cfg.mode == SolveMode::kSupervisedFit) {
    p.targets = supervised_targets(state.poses, shape, cfg);
  }
  return p;
}

// Connectivity and pairing proposal at the current poses.
void refresh_pairing(SolveState& state, const ShapeInstance& shape,
                     const SolverConfig& cfg) {
  bool has_peg = false, has_hole = false;
  for (const auto& j : shape.joints) {
    has_peg |= j.sign == Sign::kPeg;
    has_hole |= j.sign == Sign::kHole;
  }
  if (!has_peg || !has_hole) {
    state.connectivity = ConnectivityMatrix{};
    state.pairing = JointPairing{};
    return;
  }
  state.connectivity = compute_connectivity(shape.joints, state.poses,
                                            cfg.temperature);
  state.pairing = propose_pairing(state.connectivity);
}

StageRecord snapshot(const std::string& stage, const SolveState& state,
                     const ShapeInstance& shape, const SolverConfig& cfg,
                     std::size_t steps) {
  StageRecord r;
  r.stage = stage;
  r.poses = state.poses;
  r.pairing = state.pairing;
  r.losses = mode_objective(state, shape, cfg);
  r.losses.gradient.clear();
  r.losses.matches.clear();
  r.objective = r.losses.total();
  r.steps = steps;
  r.metrics = evaluate_shape(shape, state.poses);
  return r;
}

std::size_t run_part_stage(SolveState& state, const ShapeInstance& shape,
                           const SolverConfig& cfg) {
  const StageProblem problem = make_problem(state, shape, cfg);
  const std::vector<char> active(shape.num_parts(), 1);
  return descend(state.poses, problem, active);
}

std::size_t run_joint_stage(SolveState& state, const ShapeInstance& shape,
                            const SolverConfig& cfg) {
  refresh_pairing(state, shape, cfg);

  // Per-joint residuals (centroid gap, Chamfer gap) pooled onto parts.
  std::vector<Feature> signals(shape.joints.size(), Feature::Zero(2));
  for (const auto& pr : state.pairing.pairs) {
    const Joint& a = shape.joints[pr.peg];
    const Joint& b = shape.joints[pr.hole];
    Feature s(2);
    s[0] = (state.poses[a.part].apply(a.centroid) -
            state.poses[b.part].apply(b.centroid))
               .squaredNorm();
    s[1] = chamfer_distance(
        apply_pose(state.poses[a.part], shape.parts[a.part].subset(a.point_indices)),
        apply_pose(state.poses[b.part], shape.parts[b.part].subset(b.point_indices)));
    signals[pr.peg] = s;
    signals[pr.hole] = s;
  }
  const std::vector<Feature> pooled = aggregate_joint_to_part(signals, shape);
  std::vector<char> active(shape.num_parts(), 0);
  std::vector<double> penalty(shape.num_parts(), 0.0);
  if (cfg.mode == SolveMode::kJointDriven) {
    penalty = anti_collapse_penalty(state.poses, shape.parts,
                                    cfg.anti_collapse_weight)
                  .per_part;
  }
  bool any = false;
  for (std::size_t i = 0; i < shape.num_parts(); ++i) {
    active[i] = pooled[i].maxCoeff() > kResidualGate || penalty[i] > 0.0;
    any |= active[i] != 0;
  }
  if (!any) return 0;
  const StageProblem problem = make_problem(state, shape, cfg);
  return descend(state.poses, problem, active);
}

}  // namespace

std::string_view to_string(Stage s) {
  return s == Stage::kPart ? "part" : "joint";
}

std::string_view to_string(SolveMode m) {
  return m == SolveMode::kSupervisedFit ? "supervised-fit" : "joint-driven";
}

SolveMode parse_mode(std::string_view name) {
  if (name == "supervised-fit") return SolveMode::kSupervisedFit;
  if (name == "joint-driven") return SolveMode::kJointDriven;
  throw InvalidInput("unknown solver mode '" + std::string(name) +
                     "' (expected supervised-fit or joint-driven)");
}

std::vector<Stage> parse_schedule(std::string_view text) {
  std::vector<Stage> out;
  std::stringstream ss{std::string(text)};
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "part") {
      out.push_back(Stage::kPart);
    } else if (tok == "joint") {
      out.push_back(Stage::kJoint);
    } else {
      throw InvalidInput("unknown schedule stage '" + tok +
                         "' (expected part or joint)");
    }
  }
  if (out.empty()) throw InvalidInput("schedule is empty");
  return out;
}

void SolverConfig::validate() const {
  if (schedule.empty()) throw InvalidInput("solver schedule is empty");
  if (!(step_size > 0.0)) throw InvalidInput("solver step size must be > 0");
  if (!(temperature > 0.0)) throw InvalidInput("temperature must be > 0");
  if (!(anti_collapse_weight >= 0.0)) {
    throw InvalidInput("anti-collapse weight must be >= 0");
  }
  if (!(perturb_rotation_deg >= 0.0) || !(perturb_translation >= 0.0)) {
    throw InvalidInput("perturbation magnitudes must be >= 0");
  }
}

PenaltyResult anti_collapse_penalty(const std::vector<Pose>& poses,
                                    const std::vector<PointCloud>& parts,
                                    double weight) {
  const std::size_t n = parts.size();
  if (poses.size() != n) {
    throw InvalidInput("anti-collapse penalty: pose/part count mismatch");
  }
  if (weight < 0.0) throw InvalidInput("anti-collapse weight must be >= 0");
  PenaltyResult out;
  out.gradient.assign(n, PoseGradient::Zero());
  out.per_part.assign(n, 0.0);
  if (weight == 0.0) return out;

  std::vector<Vec3> local(n), posed(n);
  std::vector<double> radius(n);
  for (std::size_t i = 0; i < n; ++i) {
    local[i] = parts[i].centroid();
    posed[i] = poses[i].apply(local[i]);
    double s = 0.0;
    for (const auto& p : parts[i]) s += (p - local[i]).squaredNorm();
    radius[i] = std::sqrt(s / static_cast<double>(parts[i].size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d_min = 0.5 * (radius[i] + radius[j]);
      const Vec3 diff = posed[i] - posed[j];
      const double d = diff.norm();
      const double gap = d_min - d;
      if (gap <= 0.0) continue;
      const double v = weight * gap * gap;
      out.value += v;
      out.per_part[i] += v;
      out.per_part[j] += v;
      const Vec3 dir = d > 1e-12 ? Vec3(diff / d) : Vec3::UnitX();
      const Vec3 g = -2.0 * weight * gap * dir;  // d value / d c_i
      add_point_gradient(poses[i].rotation, local[i], g, true, out.gradient[i]);
      add_point_gradient(poses[j].rotation, local[j], -g, true, out.gradient[j]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    project_to_tangent(poses[i].rotation, out.gradient[i]);
  }
  return out;
}

std::vector<Pose> perturb_poses(const std::vector<Pose>& poses, double max_deg,
                                double max_trans, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto direction = [&]() {
    Vec3 v;
    do {
      v = Vec3(normal(rng), normal(rng), normal(rng));
    } while (v.norm() < 1e-9);
    return Vec3(v.normalized());
  };
  std::vector<Pose> out;
  out.reserve(poses.size());
  for (const auto& p : poses) {
    const Vec3 axis = direction();
    const double angle = unit(rng) * max_deg * M_PI / 180.0;
    const Vec3 shift = direction() * (unit(rng) * max_trans);
    PoseDelta delta;
    delta.rotation = quat_from_axis_angle(axis, angle);
    delta.translation = shift;
    out.push_back(compose_pose(delta, p));
  }
  return out;
}

SolveState initial_state(const ShapeInstance& shape, const SolverConfig& cfg) {
  SolveState s;
  if (cfg.mode == SolveMode::kSupervisedFit) {
    s.poses = perturb_poses(shape.gt_poses, cfg.perturb_rotation_deg,
                            cfg.perturb_translation, cfg.seed);
  } else {
    s.poses.assign(shape.num_parts(), Pose::identity());
  }
  refresh_pairing(s, shape, cfg);
  return s;
}

SolveState part_stage(const SolveState& state, const ShapeInstance& shape,
                      const SolverConfig& cfg) {
  SolveState out = state;
  run_part_stage(out, shape, cfg);
  ++out.stage_index;
  return out;
}

SolveState joint_stage(const SolveState& state, const ShapeInstance& shape,
                       const SolverConfig& cfg) {
  SolveState out = state;
  run_joint_stage(out, shape, cfg);
  ++out.stage_index;
  return out;
}

LossReport mode_objective(const SolveState& state, const ShapeInstance& shape,
                          const SolverConfig& cfg) {
  return make_problem(state, shape, cfg).evaluate(state.poses).loss;
}

SolveResult solve(const ShapeInstance& shape, const SolverConfig& cfg) {
  cfg.validate();
  validate_shape(shape, 0);
  SolveState state = initial_state(shape, cfg);
  SolveTrace trace;
  trace.records.push_back(snapshot("init", state, shape, cfg, 0));
  if (!std::isfinite(trace.records.back().objective)) {
    throw SolverError(shape.shape_id + ": initial objective is not finite",
                      trace);
  }
  for (Stage stage : cfg.schedule) {
    std::size_t steps = 0;
    try {
      steps = stage == Stage::kPart ? run_part_stage(state, shape, cfg)
                                    : run_joint_stage(state, shape, cfg);
    } catch (const NumericError& e) {
      throw SolverError(shape.shape_id + ": " + e.what(), trace);
    }
    ++state.stage_index;
    trace.records.push_back(
        snapshot(std::string(to_string(stage)), state, shape, cfg, steps));
    if (!std::isfinite(trace.records.back().objective)) {
      throw SolverError(shape.shape_id + ": objective diverged", trace);
    }
  }
  return {state.poses, state.pairing, std::move(trace)};
}

Json trace_to_json(const SolveTrace& trace) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? Json(*v) : Json();
  };
  Json out = Json::array();
  for (const auto& r : trace.records) {
    Json poses = Json::array();
    for (const auto& p : r.poses) poses.push_back(pose_to_json(p));
    const LossReport& l = r.losses;
    out.push_back(
        {{"stage", r.stage},
         {"steps", r.steps},
         {"poses", std::move(poses)},
         {"pairing", pairing_to_json(r.pairing)},
         {"losses",
          {{"l_t", l.l_t},
           {"l_r", l.l_r},
           {"l_a", l.l_a},
           {"l_flip", l.l_flip},
           {"l_coarse", l.l_coarse},
           {"l_fine", l.l_fine},
           {"shape_total", l.shape_total},
           {"joint_total", l.joint_total},
           {"objective", r.objective}}},
         {"metrics",
          {{"shape_cd", r.metrics.shape_cd},
           {"part_acc", r.metrics.part_acc},
           {"joint_cd", opt(r.metrics.joint_cd)},
           {"joint_acc", opt(r.metrics.joint_acc)}}}});
  }
  return out;
}

}  // namespace asmforge
