#ifndef MRSID_PROXIMAL_HPP
#define MRSID_PROXIMAL_HPP

#include "mrsid/errors.hpp"
#include "mrsid/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mrsid {

template <typename Scalar>
Scalar soft_threshold(Scalar y, Scalar lambda) {
  if (y > lambda) return y - lambda;
  if (y < -lambda) return y + lambda;
  return Scalar(0);
}

template <typename Derived>
auto soft_threshold(const Eigen::MatrixBase<Derived>& y, typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  return y.unaryExpr([lambda](Scalar v) { return soft_threshold(v, lambda); });
}

// Smooth part g(X) = 1/2 tr(X G X^T) - tr(X L^T) of
//
//   F(X) = g(X) + lambda |X|_1,
//
// i.e. one least-squares problem 1/2 |Z x_i - z_i|^2 per row x_i of X with a
// shared Gram matrix G = Z^T Z and right-hand sides L = rows of z^T Z.
// A vector problem is the single-row case.
template <typename Scalar>
struct QuadraticProblem {
  Mat<Scalar> gram;    // n x n, symmetric PSD
  Mat<Scalar> linear;  // m x n
  Scalar lambda = 0;

  Mat<Scalar> gradient(const Mat<Scalar>& x) const { return x * gram - linear; }

  Scalar smooth_value(const Mat<Scalar>& x) const {
    return Scalar(0.5) * (x * gram).cwiseProduct(x).sum() - x.cwiseProduct(linear).sum();
  }

  Scalar objective(const Mat<Scalar>& x) const { return smooth_value(x) + lambda * x.cwiseAbs().sum(); }
};

// Largest eigenvalue of a symmetric PSD matrix, the Lipschitz constant of the
// gradient of g above.
template <typename Scalar>
Scalar lipschitz_bound(const Mat<Scalar>& gram) {
  require_dims(gram.rows() == gram.cols() && gram.rows() > 0, "Gram matrix must be square");
  const Scalar scale = std::max(Scalar(1), gram.cwiseAbs().maxCoeff());
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
    throw DimensionError("Gram matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(gram, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

template <typename Scalar>
struct FistaResult {
  Mat<Scalar> solution;
  std::vector<Scalar> objective_trace;  // F(x_k), k = 1..iterations
  Scalar initial_objective = 0;         // F(x_0)
  Scalar best_objective = 0;
  int iterations = 0;
  bool converged = false;
};

// Constant-step FISTA with tau = 1/L:
//
//   y_1 = x_0, t_1 = 1
//   x_k = S_{tau lambda}(y_k - tau grad g(y_k))
//   t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2
//   y_{k+1} = x_k + ((t_k - 1) / t_{k+1}) (x_k - x_{k-1})
//
// Stops after max_iters or once |F_k - F_{k-1}| / max(1, |F_k|) < tol. The
// returned solution is the best iterate seen, x_0 included, so the result
// never scores worse than the starting point.
template <typename Scalar>
FistaResult<Scalar> fista_solve(const QuadraticProblem<Scalar>& prob, const Mat<Scalar>& x0, int max_iters,
                                Scalar tol) {
  require_dims(max_iters >= 1, "max_iters must be at least 1");
  require_dims(prob.gram.rows() == prob.gram.cols() && x0.cols() == prob.gram.rows() &&
                   prob.linear.rows() == x0.rows() && prob.linear.cols() == x0.cols(),
               "FISTA problem shapes disagree");
  if (prob.lambda < Scalar(0)) throw DimensionError("lambda must be non-negative");
  const Scalar lip = lipschitz_bound(prob.gram);
  if (!(lip > Scalar(0))) throw NumericalError("Lipschitz constant must be positive");
  const Scalar step = Scalar(1) / lip;

  FistaResult<Scalar> res;
  res.initial_objective = prob.objective(x0);
  res.solution = x0;
  res.best_objective = res.initial_objective;

  Mat<Scalar> x_prev = x0, y = x0;
  Scalar t = 1, f_prev = res.initial_objective;
  for (int k = 1; k <= max_iters; ++k) {
    const Mat<Scalar> grad = prob.gradient(y);
    if (!grad.allFinite()) throw NumericalError("non-finite gradient in FISTA");
    Mat<Scalar> x = soft_threshold(y - step * grad, step * prob.lambda);
    const Scalar t_next = (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * t * t)) / Scalar(2);
    y = x + ((t - Scalar(1)) / t_next) * (x - x_prev);
    t = t_next;

    const Scalar f = prob.objective(x);
    res.objective_trace.push_back(f);
    res.iterations = k;
    if (f < res.best_objective) {
      res.best_objective = f;
      res.solution = x;
    }
    const bool small = std::abs(f - f_prev) / std::max(Scalar(1), std::abs(f)) < tol;
    x_prev = std::move(x);
    f_prev = f;
    if (small) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace mrsid

#endif  // MRSID_PROXIMAL_HPP
