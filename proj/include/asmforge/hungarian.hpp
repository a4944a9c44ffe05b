#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace asmforge {

struct Assignment {
  std::vector<std::size_t> col_of_row;
  double cost = 0.0;
};

// Minimum-cost perfect assignment on a square matrix (Kuhn-Munkres with
// potentials, O(n^3)). Among optimal assignments the lexicographically
// smallest permutation is returned. Throws InvalidInput for non-finite
// entries or a non-square matrix.
Assignment hungarian(const Eigen::MatrixXd& cost);

struct PartialAssignment {
  // Column per row, or nullopt when the row was matched to padding.
  std::vector<std::optional<std::size_t>> col_of_row;
  double cost = 0.0;
};

// Rectangular variant: the short side is padded with a constant sentinel so
// every row or every column (whichever is fewer) is matched.
PartialAssignment hungarian_rectangular(const Eigen::MatrixXd& cost);

}  // namespace asmforge
