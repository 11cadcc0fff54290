#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "motionadapter/error.hpp"
#include "motionadapter/matrix.hpp"

namespace motionadapter {

/// Injective assignment of the smaller side into the larger one.
/// row_to_col[r] is the matched column, or kUnassigned when r has no partner
/// (only possible when there are more rows than columns).
struct Assignment {
  static constexpr std::ptrdiff_t kUnassigned = -1;

  std::vector<std::ptrdiff_t> row_to_col;
  double total_cost = 0.0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

namespace detail {

inline void check_cost_matrix(const Matrix& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) throw Error(ErrorKind::EmptyInput, "cost matrix is empty");
  for (double x : cost.data()) {
    if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "cost matrix entry is not finite");
    if (x < 0.0) throw Error(ErrorKind::NegativeEntry, "cost matrix entry is negative");
  }
}

// Sums matched entries in ascending row order so that equal assignments give
// bit-identical totals regardless of which solver produced them.
inline double assignment_total(const Matrix& cost, const std::vector<std::ptrdiff_t>& row_to_col) {
  double total = 0.0;
  for (std::size_t r = 0; r < row_to_col.size(); ++r)
    if (row_to_col[r] != Assignment::kUnassigned) total += cost(r, static_cast<std::size_t>(row_to_col[r]));
  return total;
}

}  // namespace detail

/// Minimum-cost assignment (Kuhn-Munkres with potentials, O(n^3)).
///
/// Rectangular inputs are padded to square with a constant larger than
/// max(cost) * min(n, m). Among equal-cost optima the lexicographically
/// smallest row->column sequence is returned, with "unassigned" ordered after
/// every real column.
inline Assignment hungarian(const Matrix& cost) {
  detail::check_cost_matrix(cost);
  const std::size_t n_rows = cost.rows();
  const std::size_t n_cols = cost.cols();
  const std::size_t n = std::max(n_rows, n_cols);
  const double max_entry = *std::max_element(cost.data().begin(), cost.data().end());
  const double pad = max_entry * static_cast<double>(std::min(n_rows, n_cols)) + 1.0;

  Matrix a(n, n, pad);
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t c = 0; c < n_cols; ++c) a(r, c) = cost(r, c);

  // 1-based arrays; index 0 is the virtual root of each augmentation.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
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

  std::vector<std::size_t> col_of(n), row_of(n);
  for (std::size_t j = 1; j <= n; ++j) {
    row_of[j - 1] = p[j] - 1;
    col_of[p[j] - 1] = j - 1;
  }

  // Lexicographic tie-break: walk rows in order and move each onto the
  // smallest tight column that still admits a perfect tight matching.
  const double tol = 1e-9 * std::max(1.0, pad);
  auto tight = [&](std::size_t r, std::size_t c) { return a(r, c) - u[r + 1] - v[c + 1] <= tol; };
  std::vector<char> fixed_row(n, 0), fixed_col(n, 0), visited(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (fixed_col[c] || !tight(r, c)) continue;
      if (col_of[r] == c) break;
      const std::size_t displaced = row_of[c];
      const std::size_t freed = col_of[r];
      std::fill(visited.begin(), visited.end(), 0);
      std::function<bool(std::size_t)> augment = [&](std::size_t x) -> bool {
        for (std::size_t y = 0; y < n; ++y) {
          if (fixed_col[y] || y == c || visited[y] || !tight(x, y)) continue;
          visited[y] = 1;
          if (y == freed || augment(row_of[y])) {
            row_of[y] = x;
            col_of[x] = y;
            return true;
          }
        }
        return false;
      };
      if (augment(displaced)) {
        row_of[c] = r;
        col_of[r] = c;
        break;
      }
    }
    fixed_row[r] = 1;
    fixed_col[col_of[r]] = 1;
  }

  Assignment out;
  out.row_to_col.assign(n_rows, Assignment::kUnassigned);
  for (std::size_t r = 0; r < n_rows; ++r)
    if (col_of[r] < n_cols) out.row_to_col[r] = static_cast<std::ptrdiff_t>(col_of[r]);
  out.total_cost = detail::assignment_total(cost, out.row_to_col);
  return out;
}

/// Exhaustive enumeration of all injective assignments in lexicographic
/// order; keeps the first strict minimum. Test oracle for hungarian().
inline Assignment brute_force_assignment(const Matrix& cost) {
  detail::check_cost_matrix(cost);
  const std::size_t n_rows = cost.rows();
  const std::size_t n_cols = cost.cols();
  if (std::min(n_rows, n_cols) > 8) throw Error(ErrorKind::SizeLimit, "brute force limited to min(n,m) <= 8");
  double count = 1.0;
  for (std::size_t k = 0; k < std::min(n_rows, n_cols); ++k) count *= static_cast<double>(std::max(n_rows, n_cols) - k);
  if (count > 5e7) throw Error(ErrorKind::SizeLimit, "brute force enumeration too large");

  const std::size_t skips_allowed = n_rows > n_cols ? n_rows - n_cols : 0;
  std::vector<std::ptrdiff_t> current(n_rows, Assignment::kUnassigned);
  std::vector<char> used(n_cols, 0);
  Assignment best;
  double best_total = std::numeric_limits<double>::infinity();

  std::function<void(std::size_t, std::size_t, double)> visit = [&](std::size_t r, std::size_t skips, double partial) {
    if (r == n_rows) {
      if (partial < best_total) {
        best_total = partial;
        best.row_to_col = current;
      }
      return;
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      current[r] = static_cast<std::ptrdiff_t>(c);
      visit(r + 1, skips, partial + cost(r, c));
      used[c] = 0;
    }
    if (skips < skips_allowed) {
      current[r] = Assignment::kUnassigned;
      visit(r + 1, skips + 1, partial);
    }
  };
  visit(0, 0, 0.0);
  best.total_cost = detail::assignment_total(cost, best.row_to_col);
  return best;
}

}  // namespace motionadapter
