#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asmforge/shape.hpp"

namespace asmforge {

enum class Category { kChair, kTable, kCabinet };

std::string_view to_string(Category c);
// Throws InvalidInput for an unknown name.
Category parse_category(std::string_view name);

// Parametric furniture built from boxes. Structural dimensions are drawn from
// fixed ranges with the shape seed; the optional fields pin them instead.
struct ShapeSpec {
  Category category = Category::kChair;
  std::size_t points_per_part = 1000;
  std::optional<std::size_t> shelves;  // cabinet: 2..4
  std::optional<bool> stretchers;      // table: side stretchers between legs
};

// Chair: seat, back, 4 legs. Table: top, 4 legs, optionally 2 stretchers.
// Cabinet: 2 side boards, k shelves, back panel. Every contact carries an
// exact 50-point patch shared by both parts, so mating joints coincide at the
// ground-truth poses. Throws GenerationError if the result has an unintended
// contact or violates a shape invariant.
ShapeInstance generate_shape(const ShapeSpec& spec, std::uint64_t seed,
                             std::string shape_id = {});

// Item `index` of generate_dataset(spec, *, seed).
ShapeInstance generate_dataset_item(const ShapeSpec& spec, std::size_t index,
                                    std::uint64_t seed);

// Per-shape seeds derived from (seed, index); ids "<category>_<index:04>".
std::vector<ShapeInstance> generate_dataset(const ShapeSpec& spec,
                                            std::size_t count,
                                            std::uint64_t seed);

// Two congruent blocks stacked with the upper one flipped about z. Their
// single joints coincide both at the ground truth and when both parts sit at
// the identity pose, which makes the collapsed configuration an exact
// minimum of the joint losses.
ShapeInstance make_peg_hole_pair(std::size_t points_per_part = 1000,
                                 std::uint64_t seed = 0);

// splitmix64 step, used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace asmforge
