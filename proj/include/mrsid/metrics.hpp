#ifndef MRSID_METRICS_HPP
#define MRSID_METRICS_HPP

#include "mrsid/errors.hpp"
#include "mrsid/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mrsid {

// |Pearson correlation| between column i of `a` and column j of `b`.
template <typename Scalar>
Mat<Scalar> column_correlation_matrix(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "matrices must have the same shape");
  require_dims(a.rows() >= 2, "need at least two rows to correlate columns");
  auto standardize = [](const Mat<Scalar>& m, const char* name) {
    Mat<Scalar> z = m.rowwise() - m.colwise().mean();
    for (Index j = 0; j < z.cols(); ++j) {
      const Scalar n = z.col(j).norm();
      if (!(n > Scalar(0)))
        throw DataError(std::string("zero-variance column ") + std::to_string(j) + " in " + name);
      z.col(j) /= n;
    }
    return z;
  };
  return (standardize(a, "first matrix").transpose() * standardize(b, "second matrix")).cwiseAbs();
}

template <typename Scalar>
struct Assignment {
  std::vector<Index> row_to_col;
  Scalar value = 0;
};

// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
// row/column potentials, O(n^3)).
template <typename Scalar>
Assignment<Scalar> hungarian_assign(const Mat<Scalar>& cost) {
  require_dims(cost.rows() == cost.cols(), "cost matrix must be square");
  if (!cost.allFinite()) throw DataError("cost matrix has non-finite entries");
  const Index n = cost.rows();
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  // 1-based; column 0 is a virtual start
  std::vector<Scalar> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<Index> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const Index i0 = match[j0];
      Scalar delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
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
      for (Index j = 0; j <= n; ++j) {
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
      const Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment<Scalar> out;
  out.row_to_col.assign(n, 0);
  for (Index j = 1; j <= n; ++j) out.row_to_col[match[j] - 1] = j - 1;
  for (Index i = 0; i < n; ++i) out.value += cost(i, out.row_to_col[i]);
  return out;
}

template <typename Scalar>
struct AssignmentResult {
  std::vector<Index> permutation;  // column j of B matched to column permutation[j] of A
  Scalar total_correlation = 0;
  Scalar distance = 0;
  bool degenerate = false;  // total correlation <= 0, distance reported as +inf
};

// d(A, B) = min over permutations P of log(n / tr(P C_{A,B})), with C_{A,B}
// the absolute column correlation matrix. Invariant to column scaling, sign,
// and order of either argument.
template <typename Scalar>
AssignmentResult<Scalar> subspace_distance(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  const Mat<Scalar> corr = column_correlation_matrix(a, b);
  const Index n = corr.cols();
  const Assignment<Scalar> best = hungarian_assign<Scalar>(-corr);

  AssignmentResult<Scalar> out;
  out.permutation.assign(n, 0);
  for (Index i = 0; i < n; ++i) {
    out.permutation[best.row_to_col[i]] = i;
    out.total_correlation += corr(i, best.row_to_col[i]);
  }
  if (out.total_correlation > Scalar(0)) {
    out.distance = std::max(Scalar(0), std::log(Scalar(n) / out.total_correlation));
  } else {
    out.distance = std::numeric_limits<Scalar>::infinity();
    out.degenerate = true;
  }
  return out;
}

// E(A, A_hat) = sum_i (sum_j |p_ij| / max_k |p_ik| - 1)
//             + sum_j (sum_i |p_ij| / max_k |p_kj| - 1),   P = A^-1 A_hat
template <typename Scalar>
Scalar amari_error(const Mat<Scalar>& a, const Mat<Scalar>& a_hat) {
  require_dims(a.rows() == a.cols() && a_hat.rows() == a.rows() && a_hat.cols() == a.cols(),
               "Amari error needs two square matrices of equal size");
  Eigen::FullPivLU<Mat<Scalar>> lu(a);
  if (!lu.isInvertible()) throw NumericalError("reference matrix is singular");
  const Mat<Scalar> abs_p = lu.solve(a_hat).cwiseAbs();
  const Vec<Scalar> row_max = abs_p.rowwise().maxCoeff();
  const Vec<Scalar> col_max = abs_p.colwise().maxCoeff().transpose();
  if (!(row_max.minCoeff() > Scalar(0)) || !(col_max.minCoeff() > Scalar(0)))
    throw NumericalError("A^-1 A_hat has a zero row or column");
  const Index n = a.rows();
  const Scalar rows = (abs_p.array().colwise() / row_max.array()).sum() - Scalar(n);
  const Scalar cols = (abs_p.array().rowwise() / col_max.transpose().array()).sum() - Scalar(n);
  return rows + cols;
}

template <typename Scalar>
struct PredictionScores {
  Scalar mse = 0;
  std::optional<Scalar> correlation;  // empty when either input is constant
};

template <typename Scalar>
PredictionScores<Scalar> prediction_scores(const Mat<Scalar>& y_true, const Mat<Scalar>& y_pred) {
  require_dims(y_true.rows() == y_pred.rows() && y_true.cols() == y_pred.cols() && y_true.size() > 0,
               "prediction and truth must have the same non-empty shape");
  PredictionScores<Scalar> s;
  s.mse = (y_true - y_pred).squaredNorm() / Scalar(y_true.size());
  const auto a = y_true.reshaped();
  const auto b = y_pred.reshaped();
  const Vec<Scalar> ac = a.array() - a.mean();
  const Vec<Scalar> bc = b.array() - b.mean();
  const Scalar na = ac.norm(), nb = bc.norm();
  if (na > Scalar(0) && nb > Scalar(0)) s.correlation = ac.dot(bc) / (na * nb);
  return s;
}

}  // namespace mrsid

#endif  // MRSID_METRICS_HPP
