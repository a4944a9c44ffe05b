// asmforge: dataset generation, joint annotation, pose solving, gradient
// checking and evaluation from the command line.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "asmforge/dataset.hpp"
#include "asmforge/errors.hpp"
#include "asmforge/eval.hpp"
#include "asmforge/generator.hpp"
#include "asmforge/gradient_check.hpp"
#include "asmforge/shape_io.hpp"
#include "asmforge/solver.hpp"

namespace fs = std::filesystem;
using namespace asmforge;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("asmforge");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("ASMFORGE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("ASMFORGE_LOG={} is not a log level; keeping info", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

// Runs fn(i) for i in [0, count) on `jobs` threads. Exceptions are rethrown
// for the lowest failing index so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

std::uint64_t id_hash(const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<ShapeInstance> load_shapes(const fs::path& path) {
  std::vector<ShapeInstance> out;
  for (const auto& f : list_files(path, ".json")) {
    const std::string name = f.filename().string();
    if (name.ends_with(".pred.json") || name.ends_with(".trace.json")) continue;
    out.push_back(load_shape(f));
  }
  return out;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string category = "chair";
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t points = 1000;
  std::optional<std::size_t> shelves;
  std::optional<bool> stretchers;
  std::size_t jobs = 1;
};

int cmd_gen(const GenArgs& a) {
  ShapeSpec spec;
  spec.category = parse_category(a.category);
  spec.points_per_part = a.points;
  spec.shelves = a.shelves;
  spec.stretchers = a.stretchers;
  ensure_dir(a.out);
  parallel_for(a.count, a.jobs, [&](std::size_t i) {
    const ShapeInstance s = generate_dataset_item(spec, i, a.seed);
    save_shape(s, fs::path(a.out) / (s.shape_id + ".json"));
    spdlog::debug("{}: {} parts, {} joint pairs", s.shape_id, s.num_parts(),
                  s.num_joint_pairs());
  });
  spdlog::info("wrote {} {} shapes to {}", a.count, a.category, a.out);
  return kOk;
}

// ---------------------------------------------------------------- joints

struct JointsArgs {
  std::string in;
  std::string out;
  std::size_t k = kJointPoints;
  double tau = kJointContactDistance;
  double eps = kDefaultCongruenceEps;
  bool canonicalize_parts = false;
  bool redetect_classes = false;
  std::size_t max_pairs = kMaxJointPairs;
};

int cmd_joints(const JointsArgs& a) {
  std::vector<ShapeInstance> shapes = load_shapes(a.in);
  ensure_dir(a.out);
  std::size_t kept = 0;
  for (auto& s : shapes) {
    if (a.canonicalize_parts) {
      for (std::size_t i = 0; i < s.num_parts(); ++i) {
        const Canonicalization c = canonicalize(s.parts[i]);
        if (c.degenerate) {
          spdlog::warn("{}: part {} has an ambiguous principal frame",
                       s.shape_id, i);
        }
        s.gt_poses[i] = rigid_compose(s.gt_poses[i], c.pose);
        s.parts[i] = c.cloud;
      }
    }
    if (a.redetect_classes) s.congruent_classes = detect_congruent_classes(s.parts, a.eps);
    annotate_shape(s, a.k, a.tau);
    validate_shape(s, a.k);
    if (s.num_joint_pairs() > a.max_pairs) {
      spdlog::warn("{}: {} joint pairs exceed {}; skipped", s.shape_id,
                   s.num_joint_pairs(), a.max_pairs);
      continue;
    }
    save_shape(s, fs::path(a.out) / (s.shape_id + ".json"));
    spdlog::info("{}: {} joints, {} pairs", s.shape_id, s.joints.size(),
                 s.num_joint_pairs());
    ++kept;
  }
  spdlog::info("annotated {} of {} shapes", kept, shapes.size());
  return kOk;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string in;
  std::string out;
  std::string mode = "supervised-fit";
  std::string schedule = "part,joint,part,joint,joint";
  SolverConfig config;
  std::size_t jobs = 1;
};

int cmd_solve(SolveArgs a) {
  a.config.mode = parse_mode(a.mode);
  a.config.schedule = parse_schedule(a.schedule);
  a.config.validate();
  const std::vector<ShapeInstance> shapes = load_shapes(a.in);
  ensure_dir(a.out);
  std::mutex mu;
  std::vector<std::string> failed;
  parallel_for(shapes.size(), a.jobs, [&](std::size_t i) {
    const ShapeInstance& s = shapes[i];
    SolverConfig cfg = a.config;
    cfg.seed = derive_seed(a.config.seed, id_hash(s.shape_id));
    const fs::path trace_path = fs::path(a.out) / (s.shape_id + ".trace.json");
    try {
      const SolveResult r = solve(s, cfg);
      save_prediction({s.shape_id, r.poses, r.pairing},
                      fs::path(a.out) / (s.shape_id + ".pred.json"));
      write_text(trace_path, dump_json(trace_to_json(r.trace)));
      const auto& m = r.trace.records.back().metrics;
      spdlog::info("{}: part_acc {:.1f} joint_acc {}", s.shape_id, m.part_acc,
                   m.joint_acc ? std::to_string(*m.joint_acc) : "n/a");
    } catch (const SolverError& e) {
      write_text(trace_path, dump_json(trace_to_json(e.trace())));
      spdlog::error("{}", e.what());
      std::lock_guard<std::mutex> lock(mu);
      failed.push_back(s.shape_id);
    }
  });
  if (!failed.empty()) {
    spdlog::error("{} of {} solves failed", failed.size(), shapes.size());
    return kNumeric;
  }
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string report;
  EvalThresholds thresholds;
};

int cmd_eval(const EvalArgs& a) {
  std::vector<Prediction> preds;
  for (const auto& f : list_files(a.pred, ".pred.json")) {
    preds.push_back(load_prediction(f));
  }
  const std::vector<ShapeInstance> shapes = load_shapes(a.gt);
  const MetricReport report = evaluate_dataset(preds, shapes, a.thresholds);
  for (const auto& id : report.missing) spdlog::warn("no prediction for {}", id);
  for (const auto& id : report.unknown) {
    spdlog::warn("prediction {} has no ground-truth shape", id);
  }
  if (report.shapes.empty()) spdlog::warn("no shapes evaluated");
  const std::string csv = report_csv(report);
  if (!a.report.empty()) {
    const fs::path prefix(a.report);
    if (prefix.has_parent_path()) ensure_dir(prefix.parent_path());
    write_text(prefix.string() + ".csv", csv);
    write_text(prefix.string() + ".json", dump_json(report_json(report)));
  }
  std::cout << csv;
  return kOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::size_t trials = 100;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  std::vector<std::string> terms;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  std::vector<LossTerm> terms;
  for (const auto& t : a.terms) terms.push_back(parse_loss_term(t));
  if (terms.empty()) terms = all_loss_terms();
  const ShapeInstance shape = random_gradcheck_shape(a.seed);
  bool ok = true;
  for (LossTerm t : terms) {
    GradientCheckOptions opt;
    opt.trials = a.trials;
    opt.seed = derive_seed(a.seed, static_cast<std::uint64_t>(t));
    const GradientCheckResult r = gradient_check(t, shape, opt);
    const bool pass = r.passed(a.tol);
    ok &= pass;
    std::cout << to_string(t) << " max_rel_error=" << r.max_rel_error
              << " checked=" << r.checked << " skipped=" << r.skipped << " "
              << (pass ? "PASS" : "FAIL") << "\n";
  }
  return ok ? kOk : kNumeric;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::string& in) {
  const Json j = parse_json(read_text(in), in);
  if (!j.contains("rows") || !j["rows"].is_array()) {
    throw ParseError(in + ": missing key 'rows'");
  }
  const auto cell = [](const Json& v) -> std::string {
    if (v.is_null()) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v.get<double>());
    return buf;
  };
  std::cout << "| category | shape_cd | part_acc | joint_cd | joint_acc | n |\n"
            << "|---|---|---|---|---|---|\n";
  for (const auto& r : j["rows"]) {
    std::cout << "| " << r.at("category").get<std::string>() << " | "
              << cell(r.at("shape_cd")) << " | " << cell(r.at("part_acc"))
              << " | " << cell(r.at("joint_cd")) << " | "
              << cell(r.at("joint_acc")) << " | "
              << r.at("n_shapes").get<std::size_t>() << " |\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Joint-centric multi-part shape assembly toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate joint-annotated furniture shapes");
  g->add_option("--category", gen.category, "chair, table or cabinet")
      ->check(CLI::IsMember({"chair", "table", "cabinet"}));
  g->add_option("--count", gen.count, "Number of shapes");
  g->add_option("--seed", gen.seed, "Dataset seed");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--points", gen.points, "Points per part");
  g->add_option("--shelves", gen.shelves, "Cabinet shelf count (2-4)");
  g->add_option("--stretchers", gen.stretchers, "Table stretchers (true/false)");
  g->add_option("--jobs", gen.jobs, "Worker threads")->check(CLI::PositiveNumber);

  JointsArgs joints;
  auto* jn = app.add_subcommand("joints", "Detect and sign joints at the ground-truth assembly");
  jn->add_option("--in", joints.in, "Manifest file or directory")->required();
  jn->add_option("--out", joints.out, "Output directory")->required();
  jn->add_option("--k", joints.k, "Points per joint");
  jn->add_option("--tau", joints.tau, "Contact distance");
  jn->add_option("--eps", joints.eps, "Congruence Chamfer threshold");
  jn->add_flag("--canonicalize", joints.canonicalize_parts,
               "PCA-canonicalize parts first");
  jn->add_flag("--detect-classes", joints.redetect_classes,
               "Recompute congruent classes");
  jn->add_option("--max-pairs", joints.max_pairs, "Drop shapes with more joint pairs");

  SolveArgs sv;
  auto* s = app.add_subcommand("solve", "Estimate part poses");
  s->add_option("--in", sv.in, "Manifest file or directory")->required();
  s->add_option("--out", sv.out, "Output directory")->required();
  s->add_option("--mode", sv.mode, "supervised-fit or joint-driven")
      ->check(CLI::IsMember({"supervised-fit", "joint-driven"}));
  s->add_option("--schedule", sv.schedule, "Comma-separated part/joint stages");
  s->add_option("--steps", sv.config.steps_per_stage, "Descent steps per stage");
  s->add_option("--step-size", sv.config.step_size, "Initial step size");
  s->add_option("--temperature", sv.config.temperature, "Connectivity temperature");
  s->add_option("--anti-collapse", sv.config.anti_collapse_weight,
                "Anti-collapse penalty weight");
  s->add_option("--perturb-rot", sv.config.perturb_rotation_deg,
                "Max initial rotation error (degrees)");
  s->add_option("--perturb-trans", sv.config.perturb_translation,
                "Max initial translation error");
  s->add_option("--seed", sv.config.seed, "Solver seed");
  s->add_option("--jobs", sv.jobs, "Worker threads")->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score predictions against ground truth");
  e->add_option("--pred", ev.pred, "Prediction file or directory")->required();
  e->add_option("--gt", ev.gt, "Manifest file or directory")->required();
  e->add_option("--report", ev.report, "Output prefix for .csv and .json");
  e->add_option("--tau-p", ev.thresholds.tau_p, "Part accuracy threshold");
  e->add_option("--tau-j", ev.thresholds.tau_j, "Joint accuracy threshold");

  GradcheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Compare analytic and numeric loss gradients");
  c->add_option("--trials", gc.trials, "Random configurations per term")
      ->check(CLI::PositiveNumber);
  c->add_option("--tol", gc.tol, "Maximum relative error");
  c->add_option("--seed", gc.seed, "Seed");
  c->add_option("--term", gc.terms,
                "translation, rotation, assembly, flip, coarse or fine (repeatable)");

  std::string report_in;
  auto* r = app.add_subcommand("report", "Print a metric report as a table");
  r->add_option("--in", report_in, "Report JSON written by eval")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*jn) return cmd_joints(joints);
    if (*s) return cmd_solve(sv);
    if (*e) return cmd_eval(ev);
    if (*c) return cmd_gradcheck(gc);
    if (*r) return cmd_report(report_in);
  } catch (const NumericError& err) {
    spdlog::error("{}", err.what());
    return kNumeric;
  } catch (const Error& err) {
    spdlog::error("{}", err.what());
    return kData;
  } catch (const Json::exception& err) {
    spdlog::error("{}", err.what());
    return kData;
  }
  return kUsage;
}
