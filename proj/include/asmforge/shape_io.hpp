#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "asmforge/geometry.hpp"
#include "asmforge/shape.hpp"

namespace asmforge {

using Json = nlohmann::json;

// {"quat": [w, x, y, z], "trans": [x, y, z]}
Json pose_to_json(const Pose& pose);
// `where` prefixes error messages, e.g. "parts[2].gt_pose".
Pose pose_from_json(const Json& j, const std::string& where);

Json pairing_to_json(const JointPairing& pairing);
JointPairing pairing_from_json(const Json& j, const std::string& where);

// Shape manifest. Joint centroids are not stored; they are recomputed on
// load. Throws ParseError naming the offending key, and re-validates the
// shape invariants.
Json shape_to_json(const ShapeInstance& shape);
ShapeInstance shape_from_json(const Json& j);

// Predicted poses (and optionally a pairing) for one shape.
struct Prediction {
  std::string shape_id;
  std::vector<Pose> poses;
  JointPairing pairing;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

Json prediction_to_json(const Prediction& pred);
Prediction prediction_from_json(const Json& j);

// Pretty-printed with a trailing newline; doubles keep full precision, so
// writing then reading is bit-exact.
std::string dump_json(const Json& j);
Json parse_json(const std::string& text, const std::string& origin);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

void save_shape(const ShapeInstance& shape, const std::filesystem::path& path);
ShapeInstance load_shape(const std::filesystem::path& path);
void save_prediction(const Prediction& pred, const std::filesystem::path& path);
Prediction load_prediction(const std::filesystem::path& path);

// `path` itself when it is a file; otherwise the regular files in the
// directory whose names end in `suffix`, sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& path,
                                              const std::string& suffix);

}  // namespace asmforge
