#ifndef MRSID_KALMAN_HPP
#define MRSID_KALMAN_HPP

#include "mrsid/errors.hpp"
#include "mrsid/model.hpp"
#include "mrsid/types.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace mrsid {

// Quantities that depend only on (C, R) and are shared by every time step of
// an E-step. Nothing here is p x p.
template <typename Scalar>
struct ObservationCache {
  Mat<Scalar> c;          // p x d
  Vec<Scalar> r_inv;      // p
  Mat<Scalar> ct_rinv;    // d x p, C^T R^-1
  Mat<Scalar> ct_rinv_c;  // d x d, C^T R^-1 C
  Scalar log_det_r = 0;

  ObservationCache(const Mat<Scalar>& c_in, const Vec<Scalar>& r_diag) : c(c_in) {
    require_dims(c.rows() == r_diag.size(), "C and R_diag disagree on p");
    if (!(r_diag.array() > Scalar(0)).all())
      throw DimensionError("R_diag entries must be strictly positive");
    r_inv = r_diag.cwiseInverse();
    ct_rinv = c.transpose() * r_inv.asDiagonal();
    ct_rinv_c = ct_rinv * c;
    log_det_r = r_diag.array().log().sum();
  }
};

// Applies the Kalman gain K = V C^T (C V C^T + R)^-1 without forming the p x p
// innovation covariance. With M = C^T R^-1 C the Woodbury identity reduces to
//
//   K = (I + V M)^-1 V C^T R^-1
//
// which needs one d x d factorization, never inverts V (so V may be singular),
// and costs O(pd) per application.
template <typename Scalar>
class WoodburyGain {
 public:
  WoodburyGain(std::shared_ptr<const ObservationCache<Scalar>> cache, const Mat<Scalar>& v_pred)
      : cache_(std::move(cache)), v_(v_pred) {
    const Index d = v_.rows();
    require_dims(v_.cols() == d && cache_->ct_rinv_c.rows() == d, "V_pred must be d x d");
    lu_.compute(Mat<Scalar>::Identity(d, d) + v_ * cache_->ct_rinv_c);
  }

  // Reciprocal condition estimate of I + V M.
  Scalar rcond() const { return lu_.rcond(); }

  Vec<Scalar> apply(const Vec<Scalar>& z) const {
    require_dims(z.size() == cache_->ct_rinv.cols(), "gain applied to vector of wrong length");
    return lu_.solve(v_ * (cache_->ct_rinv * z));
  }

  // Same as apply() for a vector already mapped through C^T R^-1.
  Vec<Scalar> apply_projected(const Vec<Scalar>& ct_rinv_z) const { return lu_.solve(v_ * ct_rinv_z); }

  // Dense d x p gain.
  Mat<Scalar> matrix() const { return lu_.solve(v_ * cache_->ct_rinv); }

  // I - K C = (I + V M)^-1
  Mat<Scalar> complement() const { return lu_.inverse(); }

  // V - K C V = (I + V M)^-1 V
  Mat<Scalar> filtered_covariance() const {
    Mat<Scalar> out = lu_.solve(v_);
    return Scalar(0.5) * (out + out.transpose());
  }

  // log|C V C^T + R| = log|R| + log|I + V M|
  Scalar log_det_innovation() const {
    return cache_->log_det_r + std::log(std::abs(lu_.determinant()));
  }

  // e^T (C V C^T + R)^-1 e
  Scalar innovation_quadratic(const Vec<Scalar>& e) const {
    const Vec<Scalar> g = cache_->ct_rinv * e;
    return e.cwiseAbs2().dot(cache_->r_inv) - g.dot(apply_projected(g));
  }

 private:
  std::shared_ptr<const ObservationCache<Scalar>> cache_;
  Mat<Scalar> v_;
  Eigen::PartialPivLU<Mat<Scalar>> lu_;
};

template <typename Scalar>
WoodburyGain<Scalar> woodbury_gain(const Mat<Scalar>& c, const Vec<Scalar>& r_diag,
                                   const Mat<Scalar>& v_pred) {
  return WoodburyGain<Scalar>(std::make_shared<const ObservationCache<Scalar>>(c, r_diag), v_pred);
}

// Forward pass output. Index t runs over 0..T; entry 0 is the deterministic
// start (x = pi0, V = 0) and x_pred/v_pred at 0 just repeat it.
template <typename Scalar>
struct FilterState {
  Mat<Scalar> x_pred;  // x_t^{t-1}
  Mat<Scalar> x_filt;  // x_t^t
  std::vector<Mat<Scalar>> v_pred;
  std::vector<Mat<Scalar>> v_filt;
  Mat<Scalar> last_gain_complement;  // I - K_T C
  // log p(Y) from the innovations, without the (Tp/2) log(2 pi) constant.
  Scalar log_likelihood = 0;

  Index T() const { return x_filt.cols() - 1; }
};

template <typename Scalar>
Mat<Scalar> symmetrized(const Mat<Scalar>& m) {
  return Scalar(0.5) * (m + m.transpose());
}

template <typename Scalar>
FilterState<Scalar> forward_filter(const LdsParams<Scalar>& params, const ObservationSeries<Scalar>& obs) {
  const Index p = obs.p(), T = obs.T(), d = params.state_dim();
  detail::check_model_dims(params, p, d, T);
  if (!obs.y.allFinite()) throw NumericalError("observations contain non-finite values");
  if (const auto v = validate_params(params, p, d); !v.ok())
    throw NumericalError("invalid parameters: " + v.violations.front());

  auto cache = std::make_shared<const ObservationCache<Scalar>>(params.c, params.r_diag);
  const Mat<Scalar> projected = cache->ct_rinv * obs.y;  // d x T
  const Mat<Scalar> eye = Mat<Scalar>::Identity(d, d);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  FilterState<Scalar> fs;
  fs.x_pred.resize(d, T + 1);
  fs.x_filt.resize(d, T + 1);
  fs.v_pred.reserve(T + 1);
  fs.v_filt.reserve(T + 1);
  fs.x_pred.col(0) = params.pi0;
  fs.x_filt.col(0) = params.pi0;
  fs.v_pred.push_back(Mat<Scalar>::Zero(d, d));
  fs.v_filt.push_back(Mat<Scalar>::Zero(d, d));

  Scalar quad = 0, log_det = 0;
  for (Index t = 1; t <= T; ++t) {
    fs.x_pred.col(t) = params.a * fs.x_filt.col(t - 1);
    fs.v_pred.push_back(symmetrized<Scalar>(params.a * fs.v_filt[t - 1] * params.a.transpose() + eye));

    WoodburyGain<Scalar> gain(cache, fs.v_pred[t]);
    if (!(gain.rcond() > eps))
      throw NumericalError("singular d x d innovation solve at t=" + std::to_string(t));

    // C^T R^-1 e_t without touching p-vectors again
    const Vec<Scalar> proj_innov = projected.col(t - 1) - cache->ct_rinv_c * fs.x_pred.col(t);
    const Vec<Scalar> correction = gain.apply_projected(proj_innov);
    fs.x_filt.col(t) = fs.x_pred.col(t) + correction;
    fs.v_filt.push_back(gain.filtered_covariance());

    const Vec<Scalar> e = obs.y.col(t - 1) - params.c * fs.x_pred.col(t);
    quad += e.cwiseAbs2().dot(cache->r_inv) - proj_innov.dot(correction);
    log_det += gain.log_det_innovation();
    if (t == T) fs.last_gain_complement = gain.complement();
  }
  fs.log_likelihood = -Scalar(0.5) * (quad + log_det);
  if (!std::isfinite(static_cast<double>(fs.log_likelihood)) || !fs.x_filt.allFinite())
    throw NumericalError("forward filter produced non-finite values");
  return fs;
}

struct SmootherDiagnostics {
  // Time steps where V_t^{t-1} needed diagonal jitter before the solve.
  std::vector<Index> jittered_steps;
};

// Rauch-Tung-Striebel backward pass with the lag-one cross-covariance
// recursion:
//
//   J_{t-1}        = V_{t-1}^{t-1} A^T (V_t^{t-1})^-1
//   x_{t-1}^T      = x_{t-1}^{t-1} + J_{t-1} (x_t^T - A x_{t-1}^{t-1})
//   V_{t-1}^T      = V_{t-1}^{t-1} + J_{t-1} (V_t^T - V_t^{t-1}) J_{t-1}^T
//   V_{T,T-1}^T    = (I - K_T C) A V_{T-1}^{T-1}
//   V_{t-1,t-2}^T  = V_{t-1}^{t-1} J_{t-2}^T + J_{t-1} (V_{t,t-1}^T - A V_{t-1}^{t-1}) J_{t-2}^T
template <typename Scalar>
SmoothedMoments<Scalar> backward_smooth(const LdsParams<Scalar>& params, const FilterState<Scalar>& fs,
                                        SmootherDiagnostics* diagnostics = nullptr) {
  const Index T = fs.T(), d = params.state_dim();
  require_dims(T >= 1 && fs.x_filt.rows() == d && static_cast<Index>(fs.v_pred.size()) == T + 1,
               "filter state does not match parameters");
  const Mat<Scalar>& a = params.a;

  std::vector<Mat<Scalar>> j(T);  // j[t] = J_t, t = 0..T-1
  Mat<Scalar> xs(d, T + 1);
  std::vector<Mat<Scalar>> vs(T + 1);
  xs.col(T) = fs.x_filt.col(T);
  vs[T] = fs.v_filt[T];

  for (Index t = T; t >= 1; --t) {
    const Mat<Scalar>& vp = fs.v_pred[t];
    Eigen::LLT<Mat<Scalar>> llt(vp);
    if (llt.info() != Eigen::Success) {
      const Scalar jitter = Scalar(1e-10) * vp.trace() / Scalar(d);
      llt.compute(vp + jitter * Mat<Scalar>::Identity(d, d));
      if (llt.info() != Eigen::Success)
        throw NumericalError("singular predicted covariance in smoother at t=" + std::to_string(t));
      if (diagnostics) diagnostics->jittered_steps.push_back(t);
    }
    // J^T = (V_pred)^-1 A V_filt, using symmetry of both covariances
    j[t - 1] = llt.solve(a * fs.v_filt[t - 1]).transpose();
    xs.col(t - 1) = fs.x_filt.col(t - 1) + j[t - 1] * (xs.col(t) - fs.x_pred.col(t));
    vs[t - 1] = symmetrized<Scalar>(fs.v_filt[t - 1] + j[t - 1] * (vs[t] - vp) * j[t - 1].transpose());
  }

  std::vector<Mat<Scalar>> vcross(T + 1);  // vcross[t] = V_{t,t-1}^T, t = 1..T
  vcross[T] = fs.last_gain_complement * a * fs.v_filt[T - 1];
  for (Index t = T; t >= 2; --t) {
    vcross[t - 1] = fs.v_filt[t - 1] * j[t - 2].transpose() +
                    j[t - 1] * (vcross[t] - a * fs.v_filt[t - 1]) * j[t - 2].transpose();
  }

  SmoothedMoments<Scalar> m;
  m.x_hat = std::move(xs);
  m.p_hat.reserve(T + 1);
  m.p_cross.reserve(T);
  for (Index t = 0; t <= T; ++t) m.p_hat.push_back(vs[t] + m.x_hat.col(t) * m.x_hat.col(t).transpose());
  for (Index t = 1; t <= T; ++t)
    m.p_cross.push_back(vcross[t] + m.x_hat.col(t) * m.x_hat.col(t - 1).transpose());
  return m;
}

template <typename Scalar>
struct EStepResult {
  SmoothedMoments<Scalar> moments;
  Scalar log_likelihood = 0;  // marginal, innovations form
  Mat<Scalar> final_filtered_cov;
  SmootherDiagnostics diagnostics;
};

template <typename Scalar>
EStepResult<Scalar> e_step(const LdsParams<Scalar>& params, const ObservationSeries<Scalar>& obs) {
  EStepResult<Scalar> out;
  FilterState<Scalar> fs = forward_filter(params, obs);
  out.moments = backward_smooth(params, fs, &out.diagnostics);
  out.log_likelihood = fs.log_likelihood;
  out.final_filtered_cov = fs.v_filt.back();
  return out;
}

}  // namespace mrsid

#endif  // MRSID_KALMAN_HPP
