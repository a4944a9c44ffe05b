#include "asmforge/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "asmforge/errors.hpp"

namespace asmforge {

namespace {

void check_finite(const Eigen::MatrixXd& cost) {
  if (!cost.allFinite()) throw InvalidInput("assignment cost is not finite");
}

struct Duals {
  std::vector<double> u;  // row potentials
  std::vector<double> v;  // column potentials
  std::vector<std::size_t> col_of_row;
};

// Shortest augmenting path formulation with row/column potentials.
Duals solve_square(const Eigen::MatrixXd& a) {
  const std::size_t n = static_cast<std::size_t>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(static_cast<Eigen::Index>(i0 - 1),
                             static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Duals out;
  out.u.assign(u.begin() + 1, u.end());
  out.v.assign(v.begin() + 1, v.end());
  out.col_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.col_of_row[p[j] - 1] = j - 1;
  return out;
}

// Walks rows in order and moves each to the smallest tight column that still
// admits a perfect matching on the tight subgraph with earlier rows fixed.
void make_lexicographic(const Eigen::MatrixXd& a, Duals& d) {
  const std::size_t n = d.col_of_row.size();
  const double tol = 1e-12 * (1.0 + a.cwiseAbs().maxCoeff()) *
                     static_cast<double>(n + 1);
  auto tight = [&](std::size_t r, std::size_t c) {
    return std::abs(a(static_cast<Eigen::Index>(r),
                      static_cast<Eigen::Index>(c)) -
                    d.u[r] - d.v[c]) <= tol;
  };
  std::vector<std::size_t>& m = d.col_of_row;
  std::vector<std::size_t> row_of_col(n);
  for (std::size_t r = 0; r < n; ++r) row_of_col[m[r]] = r;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m[i]; ++c) {
      if (!tight(i, c)) continue;
      const std::size_t start = row_of_col[c];
      if (start < i) continue;  // held by a fixed row
      const std::size_t target = m[i];
      // BFS over rows > i; parent_col[r] = column through which r was reached.
      std::vector<std::size_t> came_from(n, n);
      std::vector<char> seen_row(n, 0);
      std::deque<std::size_t> queue{start};
      seen_row[start] = 1;
      std::size_t end_row = n;
      while (!queue.empty() && end_row == n) {
        const std::size_t r = queue.front();
        queue.pop_front();
        for (std::size_t col = 0; col < n; ++col) {
          if (col == c || !tight(r, col)) continue;
          if (col == target) {
            end_row = r;
            break;
          }
          const std::size_t holder = row_of_col[col];
          if (holder <= i || seen_row[holder]) continue;
          seen_row[holder] = 1;
          came_from[holder] = r;
          queue.push_back(holder);
        }
      }
      if (end_row == n) continue;
      // Shift columns along the path: end_row takes target, each row takes
      // the column of its successor.
      std::size_t r = end_row;
      std::size_t take = target;
      while (true) {
        const std::size_t prev_col = m[r];
        m[r] = take;
        row_of_col[take] = r;
        if (r == start) break;
        take = prev_col;
        r = came_from[r];
      }
      m[i] = c;
      row_of_col[c] = i;
      break;
    }
  }
}

}  // namespace

Assignment hungarian(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) {
    throw InvalidInput("hungarian: cost matrix is " +
                       std::to_string(cost.rows()) + "x" +
                       std::to_string(cost.cols()) + ", expected square");
  }
  check_finite(cost);
  Assignment out;
  if (cost.rows() == 0) return out;
  Duals d = solve_square(cost);
  make_lexicographic(cost, d);
  out.col_of_row = std::move(d.col_of_row);
  for (std::size_t r = 0; r < out.col_of_row.size(); ++r) {
    out.cost += cost(static_cast<Eigen::Index>(r),
                     static_cast<Eigen::Index>(out.col_of_row[r]));
  }
  return out;
}

PartialAssignment hungarian_rectangular(const Eigen::MatrixXd& cost) {
  check_finite(cost);
  const Eigen::Index rows = cost.rows();
  const Eigen::Index cols = cost.cols();
  const Eigen::Index n = std::max(rows, cols);
  PartialAssignment out;
  out.col_of_row.assign(static_cast<std::size_t>(rows), std::nullopt);
  if (n == 0) return out;
  const double sentinel =
      (cost.size() ? cost.cwiseAbs().maxCoeff() : 0.0) + 1.0;
  Eigen::MatrixXd square = Eigen::MatrixXd::Constant(n, n, sentinel);
  square.topLeftCorner(rows, cols) = cost;
  const Assignment full = hungarian(square);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t c = full.col_of_row[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(c) < cols) {
      out.col_of_row[static_cast<std::size_t>(r)] = c;
      out.cost += cost(r, static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

}  // namespace asmforge
