#include "asmforge/shape_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "asmforge/errors.hpp"

namespace asmforge {

namespace {

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError("missing key '" + (where.empty() ? "" : where + ".") +
                     key + "'");
  }
  return *it;
}

std::string child(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

std::string item(const std::string& where, std::size_t i) {
  return where + "[" + std::to_string(i) + "]";
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError("'" + where + "' must be a number");
  return j.get<double>();
}

long long integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) {
    throw ParseError("'" + where + "' must be an integer");
  }
  return j.get<long long>();
}

std::size_t index(const Json& j, const std::string& where) {
  const long long v = integer(j, where);
  if (v < 0) throw ParseError("'" + where + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::string text(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ParseError("'" + where + "' must be a string");
  return j.get<std::string>();
}

const Json& array(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError("'" + where + "' must be an array");
  return j;
}

Vec3 vec3(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ParseError("'" + where + "' must be an array of 3 numbers");
  }
  return {number(j[0], item(where, 0)), number(j[1], item(where, 1)),
          number(j[2], item(where, 2))};
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Sign parse_sign(const Json& j, const std::string& where) {
  const std::string s = text(j, where);
  if (s == "peg") return Sign::kPeg;
  if (s == "hole") return Sign::kHole;
  if (s == "none") return Sign::kNone;
  throw ParseError("'" + where + "' must be \"peg\", \"hole\" or \"none\"");
}

}  // namespace

Json pose_to_json(const Pose& pose) {
  const Quat& q = pose.rotation;
  return {{"quat", Json::array({q.w(), q.x(), q.y(), q.z()})},
          {"trans", vec_json(pose.translation)}};
}

Pose pose_from_json(const Json& j, const std::string& where) {
  const std::string qk = child(where, "quat");
  const Json& qj = require(j, "quat", where);
  if (!qj.is_array() || qj.size() != 4) {
    throw ParseError("'" + qk + "' must be an array of 4 numbers");
  }
  const Quat q(number(qj[0], item(qk, 0)), number(qj[1], item(qk, 1)),
               number(qj[2], item(qk, 2)), number(qj[3], item(qk, 3)));
  const Vec3 t = vec3(require(j, "trans", where), child(where, "trans"));
  try {
    return Pose::from(q, t);
  } catch (const InvalidPose& e) {
    throw ParseError("'" + qk + "': " + e.what());
  }
}

Json pairing_to_json(const JointPairing& pairing) {
  Json out = Json::array();
  for (const auto& p : pairing.pairs) out.push_back(Json::array({p.peg, p.hole}));
  return out;
}

JointPairing pairing_from_json(const Json& j, const std::string& where) {
  JointPairing out;
  array(j, where);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = item(where, i);
    if (!j[i].is_array() || j[i].size() != 2) {
      throw ParseError("'" + w + "' must be a [peg, hole] pair");
    }
    out.pairs.push_back({index(j[i][0], item(w, 0)), index(j[i][1], item(w, 1))});
  }
  out.normalize();
  return out;
}

Json shape_to_json(const ShapeInstance& shape) {
  const auto cls = shape.class_of_part();
  Json parts = Json::array();
  for (std::size_t i = 0; i < shape.num_parts(); ++i) {
    Json pts = Json::array();
    for (const auto& p : shape.parts[i]) pts.push_back(vec_json(p));
    parts.push_back({{"id", i},
                     {"points", std::move(pts)},
                     {"gt_pose", pose_to_json(shape.gt_poses[i])},
                     {"congruent_class", cls[i]}});
  }
  Json joints = Json::array();
  for (const auto& jt : shape.joints) {
    joints.push_back({{"id", jt.id},
                      {"part_id", jt.part},
                      {"sign", std::string(to_string(jt.sign))},
                      {"point_indices", jt.point_indices},
                      {"mate", jt.mate ? static_cast<long long>(*jt.mate) : -1}});
  }
  return {{"shape_id", shape.shape_id},
          {"category", shape.category},
          {"parts", std::move(parts)},
          {"joints", std::move(joints)}};
}

ShapeInstance shape_from_json(const Json& j) {
  ShapeInstance s;
  s.shape_id = text(require(j, "shape_id", ""), "shape_id");
  s.category = text(require(j, "category", ""), "category");

  const Json& parts = array(require(j, "parts", ""), "parts");
  std::map<std::size_t, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string w = item("parts", i);
    const Json& pj = parts[i];
    if (index(require(pj, "id", w), child(w, "id")) != i) {
      throw ParseError("'" + child(w, "id") + "' must equal its position " +
                       std::to_string(i));
    }
    const std::string pk = child(w, "points");
    const Json& pts = array(require(pj, "points", w), pk);
    if (pts.empty()) throw ParseError("'" + pk + "' is empty");
    std::vector<Vec3> cloud;
    cloud.reserve(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      cloud.push_back(vec3(pts[k], item(pk, k)));
    }
    try {
      s.parts.emplace_back(std::move(cloud));
    } catch (const InvalidInput& e) {
      throw ParseError("'" + pk + "': " + e.what());
    }
    s.gt_poses.push_back(
        pose_from_json(require(pj, "gt_pose", w), child(w, "gt_pose")));
    classes[index(require(pj, "congruent_class", w),
                  child(w, "congruent_class"))]
        .push_back(i);
  }
  for (auto& [id, members] : classes) s.congruent_classes.push_back(members);
  std::sort(s.congruent_classes.begin(), s.congruent_classes.end());

  const Json& joints = array(require(j, "joints", ""), "joints");
  for (std::size_t k = 0; k < joints.size(); ++k) {
    const std::string w = item("joints", k);
    const Json& jj = joints[k];
    Joint jt;
    jt.id = index(require(jj, "id", w), child(w, "id"));
    jt.part = index(require(jj, "part_id", w), child(w, "part_id"));
    jt.sign = parse_sign(require(jj, "sign", w), child(w, "sign"));
    const std::string ik = child(w, "point_indices");
    const Json& idx = array(require(jj, "point_indices", w), ik);
    for (std::size_t m = 0; m < idx.size(); ++m) {
      jt.point_indices.push_back(index(idx[m], item(ik, m)));
    }
    const long long mate = integer(require(jj, "mate", w), child(w, "mate"));
    if (mate < -1) throw ParseError("'" + child(w, "mate") + "' must be >= -1");
    if (mate >= 0) jt.mate = static_cast<std::size_t>(mate);
    if (jt.part >= s.parts.size()) {
      throw ParseError("'" + child(w, "part_id") + "' names unknown part");
    }
    s.joints.push_back(std::move(jt));
  }
  for (const auto& jt : s.joints) {
    for (std::size_t idx : jt.point_indices) {
      if (idx >= s.parts[jt.part].size()) {
        throw ParseError("'" + item("joints", jt.id) +
                         ".point_indices' indexes past its part");
      }
    }
  }
  refresh_joint_centroids(s);
  s.gt_pairing = pairing_from_mates(s.joints);
  validate_shape(s, 0);
  return s;
}

Json prediction_to_json(const Prediction& pred) {
  Json poses = Json::array();
  for (const auto& p : pred.poses) poses.push_back(pose_to_json(p));
  return {{"shape_id", pred.shape_id},
          {"poses", std::move(poses)},
          {"pairing", pairing_to_json(pred.pairing)}};
}

Prediction prediction_from_json(const Json& j) {
  Prediction p;
  p.shape_id = text(require(j, "shape_id", ""), "shape_id");
  const Json& poses = array(require(j, "poses", ""), "poses");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    p.poses.push_back(pose_from_json(poses[i], item("poses", i)));
  }
  if (j.contains("pairing")) p.pairing = pairing_from_json(j["pairing"], "pairing");
  return p;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(const std::string& content, const std::string& origin) {
  try {
    return Json::parse(content);
  } catch (const Json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

void save_shape(const ShapeInstance& shape, const std::filesystem::path& path) {
  write_text(path, dump_json(shape_to_json(shape)));
}

ShapeInstance load_shape(const std::filesystem::path& path) {
  try {
    return shape_from_json(parse_json(read_text(path), path.string()));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_prediction(const Prediction& pred, const std::filesystem::path& path) {
  write_text(path, dump_json(prediction_to_json(pred)));
}

Prediction load_prediction(const std::filesystem::path& path) {
  try {
    return prediction_from_json(parse_json(read_text(path), path.string()));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& path,
                                              const std::string& suffix) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) return {path};
  if (!fs::is_directory(path, ec)) {
    throw IoError(path.string() + " is neither a file nor a directory");
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() >= suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace asmforge
