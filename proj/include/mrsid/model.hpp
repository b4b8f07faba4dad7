#ifndef MRSID_MODEL_HPP
#define MRSID_MODEL_HPP

#include "mrsid/errors.hpp"
#include "mrsid/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace mrsid {

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
};

template <typename Scalar>
ValidationResult validate_params(const LdsParams<Scalar>& params, Index p, Index d) {
  ValidationResult res;
  auto& v = res.violations;
  if (params.a.rows() != d) v.push_back("A row count != d");
  if (params.a.cols() != d) v.push_back("A column count != d");
  if (params.c.rows() != p) v.push_back("C row count != p");
  if (params.c.cols() != d) v.push_back("C column count != d");
  if (params.r_diag.size() != p) v.push_back("R_diag length != p");
  if (params.pi0.size() != d) v.push_back("pi0 length != d");
  if (params.r_diag.size() > 0 && !(params.r_diag.array() > Scalar(0)).all())
    v.push_back("R_diag not strictly positive");
  if (!params.a.allFinite()) v.push_back("A has non-finite entries");
  if (!params.c.allFinite()) v.push_back("C has non-finite entries");
  if (!params.r_diag.allFinite()) v.push_back("R_diag has non-finite entries");
  if (!params.pi0.allFinite()) v.push_back("pi0 has non-finite entries");
  return res;
}

// Column order that sorts C by non-increasing Euclidean norm. Ties keep the
// original index order.
template <typename Scalar>
std::vector<Index> canonical_order(const Mat<Scalar>& c) {
  std::vector<Index> order(static_cast<std::size_t>(c.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  const Vec<Scalar> norms = c.colwise().norm().transpose();
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return norms(i) > norms(j); });
  return order;
}

// Reindex the latent coordinates: new coordinate k is old coordinate order[k].
template <typename Scalar>
LdsParams<Scalar> permute_states(const LdsParams<Scalar>& params, const std::vector<Index>& order) {
  const Index d = params.state_dim();
  require_dims(static_cast<Index>(order.size()) == d, "permutation length != d");
  LdsParams<Scalar> out;
  out.a.resize(d, d);
  out.c.resize(params.c.rows(), d);
  out.pi0.resize(d);
  out.r_diag = params.r_diag;
  for (Index i = 0; i < d; ++i) {
    out.c.col(i) = params.c.col(order[i]);
    out.pi0(i) = params.pi0(order[i]);
    for (Index j = 0; j < d; ++j) out.a(i, j) = params.a(order[i], order[j]);
  }
  return out;
}

template <typename Scalar>
LdsParams<Scalar> canonicalize(const LdsParams<Scalar>& params) {
  return permute_states(params, canonical_order(params.c));
}

namespace detail {

template <typename Scalar>
void check_model_dims(const LdsParams<Scalar>& params, Index p, Index d, Index T) {
  require_dims(params.a.rows() == d && params.a.cols() == d, "A must be d x d");
  require_dims(params.c.rows() == p && params.c.cols() == d, "C must be p x d");
  require_dims(params.r_diag.size() == p, "R_diag must have length p");
  require_dims(params.pi0.size() == d, "pi0 must have length d");
  require_dims(T >= 1, "series must have at least one time step");
}

}  // namespace detail

// Complete-data log-likelihood with Q = I, dropping (T/2)(p+d) log(2 pi).
// Returns -infinity when x_0 != pi0.
template <typename Scalar>
Scalar log_likelihood(const LdsParams<Scalar>& params, const LatentSeries<Scalar>& latent,
                      const ObservationSeries<Scalar>& obs) {
  const Index p = obs.p(), T = obs.T(), d = params.state_dim();
  detail::check_model_dims(params, p, d, T);
  require_dims(latent.d() == d && latent.T() == T, "latent series must be d x (T+1)");

  if (latent.x.col(0) != params.pi0) return -std::numeric_limits<Scalar>::infinity();

  const Vec<Scalar> r_inv = params.r_diag.cwiseInverse();
  Scalar obs_quad = 0, state_quad = 0;
  for (Index t = 1; t <= T; ++t) {
    const Vec<Scalar> e = obs.y.col(t - 1) - params.c * latent.x.col(t);
    obs_quad += e.cwiseAbs2().dot(r_inv);
    state_quad += (latent.x.col(t) - params.a * latent.x.col(t - 1)).squaredNorm();
  }
  const Scalar log_det_r = params.r_diag.array().log().sum();
  return -Scalar(0.5) * obs_quad - Scalar(0.5) * Scalar(T) * log_det_r - Scalar(0.5) * state_quad;
}

template <typename Scalar>
Scalar l1_penalty(const Mat<Scalar>& a, Scalar lambda_a) {
  return lambda_a * a.cwiseAbs().sum();
}

template <typename Scalar>
Scalar c_penalty(const Mat<Scalar>& c, const Vec<Scalar>& r_diag, Scalar lambda_c, CPenalty kind) {
  if (lambda_c == Scalar(0)) return 0;
  const Vec<Scalar> row_sq = c.rowwise().squaredNorm();
  const Scalar s = kind == CPenalty::kWhitened ? row_sq.dot(r_diag.cwiseInverse()) : row_sq.sum();
  return Scalar(0.5) * lambda_c * s;
}

template <typename Scalar>
Scalar total_penalty(const LdsParams<Scalar>& params, const Hyperparams& hp) {
  return l1_penalty(params.a, Scalar(hp.lambda_a)) +
         c_penalty(params.c, params.r_diag, Scalar(hp.lambda_c), hp.c_penalty);
}

// Expected penalized negative complete-data log-likelihood, with every
// latent-dependent term replaced by its smoothed moment:
//
//   sum_t 1/2 E[(y_t - C x_t)^T R^-1 (y_t - C x_t)] + T/2 log|R|
//   + sum_t 1/2 E[|x_t - A x_{t-1}|^2] + lambda_a |A|_1 + C penalty
//
// +infinity when the moments put x_0 somewhere other than pi0.
template <typename Scalar>
Scalar penalized_objective(const LdsParams<Scalar>& params, const SmoothedMoments<Scalar>& m,
                           const ObservationSeries<Scalar>& obs, const Hyperparams& hp) {
  const Index p = obs.p(), T = obs.T(), d = params.state_dim();
  detail::check_model_dims(params, p, d, T);
  require_dims(m.d() == d && m.T() == T && static_cast<Index>(m.p_hat.size()) == T + 1 &&
                   static_cast<Index>(m.p_cross.size()) == T,
               "moments must cover t = 0..T with dimension d");

  if (m.x_hat.col(0) != params.pi0) return std::numeric_limits<Scalar>::infinity();

  const Vec<Scalar> r_inv = params.r_diag.cwiseInverse();
  const Mat<Scalar> ct_rinv = params.c.transpose() * r_inv.asDiagonal();
  const Mat<Scalar> ct_rinv_c = ct_rinv * params.c;
  const Mat<Scalar> ata = params.a.transpose() * params.a;

  Scalar obs_term = 0, state_term = 0;
  for (Index t = 1; t <= T; ++t) {
    const auto y = obs.y.col(t - 1);
    obs_term += y.cwiseAbs2().dot(r_inv) - Scalar(2) * y.dot(ct_rinv.transpose() * m.x_hat.col(t)) +
                ct_rinv_c.cwiseProduct(m.p_hat[t]).sum();
    state_term += m.p_hat[t].trace() - Scalar(2) * params.a.cwiseProduct(m.p_cross[t - 1]).sum() +
                  ata.cwiseProduct(m.p_hat[t - 1]).sum();
  }
  const Scalar log_det_r = params.r_diag.array().log().sum();
  return Scalar(0.5) * obs_term + Scalar(0.5) * Scalar(T) * log_det_r + Scalar(0.5) * state_term +
         total_penalty(params, hp);
}

}  // namespace mrsid

#endif  // MRSID_MODEL_HPP
