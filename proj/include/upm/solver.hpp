#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "upm/affinity.hpp"
#include "upm/check.hpp"
#include "upm/types.hpp"

namespace upm {

/// Discrete universe matching of one graph: every node either carries a
/// distinct anchor index in [0, n_u - 1) or is flagged as outlier.
struct UniverseAssignment {
  static constexpr int kOutlier = -1;

  std::string graph_id;
  std::vector<int> anchor;  // per node
  int universe_size = 0;    // n_u, absorbing node included
  double score = 0.0;       // total assigned affinity

  Eigen::Index size() const { return static_cast<Eigen::Index>(anchor.size()); }
  bool is_outlier(int node) const { return anchor[node] == kOutlier; }
};

struct OutlierFilterResult {
  std::vector<int> kept;  // original row indices, ascending
  Matrix scores;          // kept x (n_u - 1), absorbing column removed
};

/// Drops every row whose most likely anchor is the absorbing node and strips
/// the absorbing column from the rest. Ties at the row argmax keep the row
/// (the lowest-index maximum wins, and the absorbing column is last).
OutlierFilterResult outlier_filter(const UniverseAffinity& s);

namespace detail {

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Shortest-augmenting-path assignment (Kuhn's method with potentials) for a
/// dense cost matrix with rows() <= cols(), minimizing. Deterministic: column
/// scans run in ascending order, so equal reduced costs pick the smallest
/// column.
template <class Scalar>
std::vector<int> lap_min(const DenseMatrix<Scalar>& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  const Scalar inf = std::numeric_limits<Scalar>::max();
  std::vector<Scalar> u(n + 1, Scalar(0)), v(m + 1, Scalar(0));
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<Scalar> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      Scalar delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const Scalar cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (match[j]) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

/// Maximum-total assignment of cardinality min(rows, cols); handles the
/// wide/tall cases by transposition.
template <class Scalar>
std::vector<int> lap_best(const DenseMatrix<Scalar>& score, bool maximize) {
  const Eigen::Index n = score.rows(), m = score.cols();
  if (n == 0 || m == 0) return std::vector<int>(n, -1);
  if (n <= m) {
    DenseMatrix<Scalar> cost = maximize ? (-score).eval() : score.eval();
    return lap_min(cost);
  }
  DenseMatrix<Scalar> t = score.transpose();
  const std::vector<int> col_to_row = lap_best(t, maximize);
  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 0; j < col_to_row.size(); ++j)
    if (col_to_row[j] >= 0) row_to_col[col_to_row[j]] = static_cast<int>(j);
  return row_to_col;
}

/// Left-to-right total in row order, so equal selections sum bit-identically.
template <class Scalar>
Scalar assignment_total(const DenseMatrix<Scalar>& score,
                        const std::vector<int>& row_to_col) {
  Scalar total(0);
  for (std::size_t i = 0; i < row_to_col.size(); ++i)
    if (row_to_col[i] >= 0) total += score(static_cast<Eigen::Index>(i), row_to_col[i]);
  return total;
}

}  // namespace detail

/// Optimal assignment of min(rows, cols) pairs. Among optima the result is
/// the lexicographically smallest row assignment vector: rows are fixed in
/// order to the smallest column that keeps the total optimal, and a row stays
/// unmatched only when no column does. Returns row -> column (-1 unmatched).
template <class Scalar>
std::vector<int> hungarian_assignment(const detail::DenseMatrix<Scalar>& score,
                                      bool maximize) {
  detail::require(score.allFinite(), "hungarian: entries must be finite");
  const int n = static_cast<int>(score.rows());
  const int m = static_cast<int>(score.cols());
  std::vector<int> base = detail::lap_best(score, maximize);
  if (n == 0 || m == 0) return base;
  const Scalar opt = detail::assignment_total(score, base);

  std::vector<int> avail(m);
  for (int j = 0; j < m; ++j) avail[j] = j;
  std::vector<int> result(n, -1);
  Scalar prefix(0);

  auto sub_total = [&](int next_row, const std::vector<int>& cols) {
    detail::DenseMatrix<Scalar> sub(n - next_row, cols.size());
    for (int r = next_row; r < n; ++r)
      for (std::size_t c = 0; c < cols.size(); ++c)
        sub(r - next_row, static_cast<Eigen::Index>(c)) = score(r, cols[c]);
    return detail::assignment_total(sub, detail::lap_best(sub, maximize));
  };

  for (int i = 0; i < n; ++i) {
    const bool may_skip = static_cast<int>(avail.size()) < n - i;
    int chosen = -1;
    // Exact pass first; a tolerance pass catches last-ulp drift between
    // differently ordered but equal-valued sums.
    for (int pass = 0; pass < 2 && chosen == -1; ++pass) {
      const Scalar tol =
          pass == 0 ? Scalar(0)
                    : Scalar(1e-9) * (Scalar(1) + std::abs(double(opt)));
      for (std::size_t c = 0; c < avail.size(); ++c) {
        const int j = avail[c];
        std::vector<int> rest = avail;
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(c));
        const Scalar cand = prefix + score(i, j) + sub_total(i + 1, rest);
        if (std::abs(double(cand - opt)) <= double(tol)) {
          chosen = j;
          break;
        }
      }
      if (chosen == -1 && may_skip) {
        const Scalar cand = prefix + sub_total(i + 1, avail);
        if (std::abs(double(cand - opt)) <= double(tol)) chosen = -2;
      }
    }
    if (chosen == -1 || chosen == -2) {
      if (chosen == -1) {
        // No candidate survived either pass; keep the plain solution.
        for (int r = i; r < n; ++r) result[r] = base[r];
        return result;
      }
      continue;  // row i stays unmatched
    }
    result[i] = chosen;
    prefix += score(i, chosen);
    avail.erase(std::find(avail.begin(), avail.end(), chosen));
  }
  return result;
}

/// Optimal (partial) assignment as a Matching; maximize selects the sense.
Matching hungarian(const Eigen::Ref<const Matrix>& scorelike, bool maximize);

/// Outlier filter followed by a maximizing assignment of the kept rows to the
/// non-absorbing anchors. Rows the assignment cannot seat (more kept rows
/// than anchors) are flagged as outliers too.
UniverseAssignment infer_universe(const UniverseAffinity& s,
                                  std::string graph_id = "");

/// Pairwise matching via the universe: (i, j) matched iff both nodes hold the
/// same anchor. Equivalent to the product of the zero-filled universe
/// matchings with the absorbing column removed.
Matching reconstruct_pairwise(const UniverseAssignment& xa,
                              const UniverseAssignment& xb);

}  // namespace upm
