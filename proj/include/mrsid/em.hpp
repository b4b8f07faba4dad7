#ifndef MRSID_EM_HPP
#define MRSID_EM_HPP

#include "mrsid/errors.hpp"
#include "mrsid/kalman.hpp"
#include "mrsid/model.hpp"
#include "mrsid/proximal.hpp"
#include "mrsid/types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace mrsid {

// Sums over t = 1..T that the M-step needs from the E-step.
template <typename Scalar>
struct SufficientStats {
  Vec<Scalar> s_yy_diag;  // diag(sum_t y_t y_t^T)
  Mat<Scalar> s_yx;       // sum_t y_t x_t^T
  Mat<Scalar> s_xx;       // sum_t P_t
  Mat<Scalar> s_xx_lag;   // sum_t P_{t-1}
  Mat<Scalar> s_cross;    // sum_t P_{t,t-1}
  Index T = 0;
};

template <typename Scalar>
SufficientStats<Scalar> accumulate_stats(const SmoothedMoments<Scalar>& m, const ObservationSeries<Scalar>& obs) {
  const Index T = obs.T(), d = m.d();
  require_dims(m.T() == T && static_cast<Index>(m.p_hat.size()) == T + 1 &&
                   static_cast<Index>(m.p_cross.size()) == T,
               "moments and observations disagree on T");
  SufficientStats<Scalar> s;
  s.T = T;
  s.s_yy_diag = obs.y.rowwise().squaredNorm();
  s.s_yx = obs.y * m.x_hat.rightCols(T).transpose();
  s.s_xx = Mat<Scalar>::Zero(d, d);
  s.s_xx_lag = Mat<Scalar>::Zero(d, d);
  s.s_cross = Mat<Scalar>::Zero(d, d);
  for (Index t = 1; t <= T; ++t) {
    s.s_xx += m.p_hat[t];
    s.s_xx_lag += m.p_hat[t - 1];
    s.s_cross += m.p_cross[t - 1];
  }
  return s;
}

// Lower bound applied to every updated R entry.
template <typename Scalar>
Scalar r_floor(const SufficientStats<Scalar>& s) {
  const Scalar top = s.s_yy_diag.size() ? s.s_yy_diag.maxCoeff() / Scalar(s.T) : Scalar(0);
  return top > Scalar(0) ? Scalar(1e-8) * top : Scalar(1e-8);
}

// R = diag{ (1/T) sum_t (y_t y_t^T - C x_t y_t^T) }, floored.
template <typename Scalar>
Vec<Scalar> update_r(const SufficientStats<Scalar>& s, const Mat<Scalar>& c_new) {
  require_dims(s.T >= 1, "T must be positive");
  require_dims(c_new.rows() == s.s_yx.rows() && c_new.cols() == s.s_yx.cols(), "C must be p x d");
  Vec<Scalar> r = (s.s_yy_diag - c_new.cwiseProduct(s.s_yx).rowwise().sum()) / Scalar(s.T);
  return r.cwiseMax(r_floor(s));
}

template <typename Scalar>
Vec<Scalar> update_pi0(const SmoothedMoments<Scalar>& m) {
  return m.x_hat.col(0);
}

// Ridge update of C. Whitened penalty: every row solves
// (S_xx + lambda I) c_i = (S_yx)_i with one shared factorization. Frobenius
// penalty: row i uses lambda * r_i instead, handled through one
// eigendecomposition of S_xx.
template <typename Scalar>
Mat<Scalar> update_c(const SufficientStats<Scalar>& s, Scalar lambda_c, const Vec<Scalar>& r_diag,
                     CPenalty kind = CPenalty::kWhitened) {
  const Index d = s.s_xx.rows();
  require_dims(s.s_yx.cols() == d && r_diag.size() == s.s_yx.rows(), "stats and R_diag disagree");
  if (lambda_c < Scalar(0)) throw DimensionError("lambda_C must be non-negative");
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  if (kind == CPenalty::kWhitened) {
    const Mat<Scalar> lhs = s.s_xx + lambda_c * Mat<Scalar>::Identity(d, d);
    Eigen::LDLT<Mat<Scalar>> ldlt(lhs);
    const Vec<Scalar> dv = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || !(dv.minCoeff() > Scalar(d) * eps * std::max(dv.maxCoeff(), Scalar(1))))
      throw NumericalError("S_xx + lambda_C I is singular; use lambda_C > 0");
    return ldlt.solve(s.s_yx.transpose()).transpose();
  }

  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(s.s_xx);
  const Vec<Scalar>& ev = es.eigenvalues();
  const Mat<Scalar>& q = es.eigenvectors();
  Mat<Scalar> b = s.s_yx * q;  // p x d
  const Scalar scale = std::max(ev.cwiseAbs().maxCoeff(), Scalar(1));
  for (Index i = 0; i < b.rows(); ++i) {
    for (Index k = 0; k < d; ++k) {
      const Scalar denom = ev(k) + lambda_c * r_diag(i);
      if (!(denom > Scalar(d) * eps * scale))
        throw NumericalError("S_xx + lambda_C r_i I is singular; use lambda_C > 0");
      b(i, k) /= denom;
    }
  }
  return b * q.transpose();
}

// Objective of the A-subproblem: 1/2 tr(A S_lag A^T) - tr(A S_cross^T) + lambda |A|_1
template <typename Scalar>
QuadraticProblem<Scalar> a_subproblem(const SufficientStats<Scalar>& s, Scalar lambda_a) {
  return QuadraticProblem<Scalar>{symmetrized<Scalar>(s.s_xx_lag), s.s_cross, lambda_a};
}

template <typename Scalar>
Mat<Scalar> update_a(const SufficientStats<Scalar>& s, Scalar lambda_a, const Mat<Scalar>& a_old, int max_inner,
                     Scalar inner_tol = Scalar(1e-8)) {
  const Index d = s.s_xx_lag.rows();
  require_dims(a_old.rows() == d && a_old.cols() == d, "A_old must be d x d");
  if (lambda_a < Scalar(0)) throw DimensionError("lambda_A must be non-negative");
  if (lambda_a == Scalar(0)) {
    Eigen::LDLT<Mat<Scalar>> ldlt(symmetrized<Scalar>(s.s_xx_lag));
    if (ldlt.info() != Eigen::Success ||
        !(ldlt.rcond() > Scalar(d) * std::numeric_limits<Scalar>::epsilon()))
      throw NumericalError("lagged second-moment matrix is singular");
    return ldlt.solve(s.s_cross.transpose()).transpose();
  }
  return fista_solve(a_subproblem(s, lambda_a), a_old, max_inner, inner_tol).solution;
}

template <typename Scalar>
struct InitResult {
  LdsParams<Scalar> params;
  Mat<Scalar> latent;  // d x T proxy D V^T; column t-1 stands for x_t
};

// Rank-d SVD start: C = U_d, latent proxy X = D_d V_d^T, A from an OLS VAR(1)
// on the columns of X, R = I, pi0 = 0.
template <typename Scalar>
InitResult<Scalar> initialize_with_latents(const ObservationSeries<Scalar>& obs, Index d) {
  const Index p = obs.p(), T = obs.T();
  require_dims(d >= 1 && d <= std::min(p, T), "d must lie in [1, min(p, T)]");
  if (!obs.y.allFinite()) throw DataError("observations contain non-finite values");

  Eigen::BDCSVD<Mat<Scalar>> svd(obs.y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec<Scalar>& sv = svd.singularValues();
  const Scalar tol = Scalar(std::max(p, T)) * std::numeric_limits<Scalar>::epsilon() *
                     (sv.size() ? sv(0) : Scalar(0));
  const Index rank = (sv.array() > tol).count();
  if (rank < d)
    throw DataError("rank(Y) = " + std::to_string(rank) + " is below the requested d = " + std::to_string(d));

  InitResult<Scalar> out;
  out.params.c = svd.matrixU().leftCols(d);
  out.latent = sv.head(d).asDiagonal() * svd.matrixV().leftCols(d).transpose();
  out.params.r_diag = Vec<Scalar>::Ones(p);
  out.params.pi0 = Vec<Scalar>::Zero(d);

  if (T >= 2) {
    const auto now = out.latent.rightCols(T - 1);
    const auto lag = out.latent.leftCols(T - 1);
    const Mat<Scalar> cross = now * lag.transpose();
    const Mat<Scalar> gram = lag * lag.transpose();
    // pseudo-inverse solve; gram is rank deficient when T - 1 < d
    out.params.a = gram.completeOrthogonalDecomposition().solve(cross.transpose()).transpose();
  } else {
    out.params.a = Mat<Scalar>::Zero(d, d);
  }
  return out;
}

template <typename Scalar>
LdsParams<Scalar> initialize(const ObservationSeries<Scalar>& obs, Index d) {
  return initialize_with_latents(obs, d).params;
}

template <typename Scalar>
Scalar relative_change(const Eigen::Ref<const Mat<Scalar>>& before, const Eigen::Ref<const Mat<Scalar>>& after) {
  const Scalar diff = (after - before).norm();
  if (diff == Scalar(0)) return 0;
  return diff / std::max(before.norm(), std::numeric_limits<Scalar>::min());
}

// Largest relative Frobenius change over the A, C, R, pi0 blocks.
template <typename Scalar>
Scalar parameter_change(const LdsParams<Scalar>& before, const LdsParams<Scalar>& after) {
  return std::max({relative_change<Scalar>(before.a, after.a), relative_change<Scalar>(before.c, after.c),
                   relative_change<Scalar>(before.r_diag, after.r_diag),
                   relative_change<Scalar>(before.pi0, after.pi0)});
}

template <typename Scalar>
LdsParams<Scalar> m_step(const LdsParams<Scalar>& old, const SufficientStats<Scalar>& s,
                         const SmoothedMoments<Scalar>& m, const Hyperparams& hp) {
  LdsParams<Scalar> next;
  const Scalar lambda_c = Scalar(hp.lambda_c);
  if (hp.r_uses_new_c) {
    next.c = update_c(s, lambda_c, old.r_diag, hp.c_penalty);
    next.r_diag = update_r(s, next.c);
  } else {
    next.r_diag = update_r(s, old.c);
    next.c = update_c(s, lambda_c, next.r_diag, hp.c_penalty);
  }
  next.pi0 = update_pi0(m);
  next.a = update_a(s, Scalar(hp.lambda_a), old.a, hp.max_inner_iters, Scalar(hp.inner_tol));
  return next;
}

template <typename Scalar>
SmoothedMoments<Scalar> permute_moments(const SmoothedMoments<Scalar>& m, const std::vector<Index>& order) {
  const Index d = m.d();
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm(d);
  for (Index k = 0; k < d; ++k) perm.indices()(order[k]) = static_cast<int>(k);  // old -> new
  SmoothedMoments<Scalar> out;
  out.x_hat = perm * m.x_hat;
  for (const auto& p : m.p_hat) out.p_hat.push_back(perm * p * perm.transpose());
  for (const auto& p : m.p_cross) out.p_cross.push_back(perm * p * perm.transpose());
  return out;
}

template <typename Scalar>
struct FitReport {
  LdsParams<Scalar> params;  // canonicalized
  // Penalized negative marginal log-likelihood -log p(Y | theta_k) + penalty
  // after each EM iteration. This is the quantity EM cannot increase.
  std::vector<Scalar> objective_trace;
  // penalized_objective(theta_k, moments(theta_k)) after each iteration.
  std::vector<Scalar> expected_objective_trace;
  Scalar initial_objective = 0;
  int iterations_run = 0;
  bool converged = false;
  SmoothedMoments<Scalar> moments;  // final E-step, in canonical order
  InitResult<Scalar> initialization;
};

template <typename Scalar>
void validate_hyperparams(const Hyperparams& hp, Index p, Index T) {
  if (!(std::isfinite(hp.lambda_a) && hp.lambda_a >= 0)) throw DimensionError("lambda_A must be finite and >= 0");
  if (!(std::isfinite(hp.lambda_c) && hp.lambda_c >= 0)) throw DimensionError("lambda_C must be finite and >= 0");
  if (hp.d < 1 || hp.d > std::min(p, T)) throw DimensionError("d must lie in [1, min(p, T)]");
  if (hp.max_em_iters < 1 || hp.max_inner_iters < 1) throw DimensionError("iteration budgets must be positive");
  if (!(hp.em_tol > 0)) throw DimensionError("em_tol must be positive");
  if (!(hp.inner_tol >= 0)) throw DimensionError("inner_tol must be non-negative");
}

namespace detail {

template <typename Scalar>
FitReport<Scalar> run_em(const ObservationSeries<Scalar>& obs, const Hyperparams& hp, InitResult<Scalar> init) {
  FitReport<Scalar> report;
  report.initialization = std::move(init);
  LdsParams<Scalar> theta = report.initialization.params;

  EStepResult<Scalar> e = e_step(theta, obs);
  report.initial_objective = -e.log_likelihood + total_penalty(theta, hp);

  for (int it = 1; it <= hp.max_em_iters; ++it) {
    const SufficientStats<Scalar> stats = accumulate_stats(e.moments, obs);
    LdsParams<Scalar> next = m_step(theta, stats, e.moments, hp);
    const Scalar change = parameter_change(theta, next);
    theta = std::move(next);

    e = e_step(theta, obs);
    const Scalar obj = -e.log_likelihood + total_penalty(theta, hp);
    if (!std::isfinite(static_cast<double>(obj)))
      throw NumericalError("non-finite objective at EM iteration " + std::to_string(it));
    report.objective_trace.push_back(obj);
    report.expected_objective_trace.push_back(penalized_objective(theta, e.moments, obs, hp));
    report.iterations_run = it;
    if (change < Scalar(hp.em_tol)) {
      report.converged = true;
      break;
    }
  }

  const std::vector<Index> order = canonical_order(theta.c);
  report.params = permute_states(theta, order);
  report.moments = permute_moments(e.moments, order);
  return report;
}

}  // namespace detail

template <typename Scalar>
FitReport<Scalar> fit(const ObservationSeries<Scalar>& obs, const Hyperparams& hp) {
  validate_hyperparams<Scalar>(hp, obs.p(), obs.T());
  return detail::run_em(obs, hp, initialize_with_latents(obs, hp.d));
}

// EM started from `start` instead of the SVD initializer. The report's
// initialization carries `start` and an empty latent proxy.
template <typename Scalar>
FitReport<Scalar> fit(const ObservationSeries<Scalar>& obs, const Hyperparams& hp, const LdsParams<Scalar>& start) {
  validate_hyperparams<Scalar>(hp, obs.p(), obs.T());
  if (const auto v = validate_params(start, obs.p(), hp.d); !v.ok()) throw DimensionError("invalid start: " + v.violations.front());
  InitResult<Scalar> init;
  init.params = start;
  init.latent = Mat<Scalar>(hp.d, 0);
  return detail::run_em(obs, hp, std::move(init));
}

}  // namespace mrsid

#endif  // MRSID_EM_HPP
