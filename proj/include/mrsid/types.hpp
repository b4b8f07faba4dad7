#ifndef MRSID_TYPES_HPP
#define MRSID_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mrsid {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Parameters of the reduced-rank LDS
//
//   x_{t+1} = A x_t + w_t,   w_t ~ N(0, I),   x_0 = pi0
//   y_t     = C x_t + v_t,   v_t ~ N(0, diag(r_diag))
//
// The state noise covariance is fixed at I and the initial covariance at 0,
// so neither is stored. R is kept as its diagonal only.
template <typename Scalar>
struct LdsParams {
  Mat<Scalar> a;       // d x d
  Mat<Scalar> c;       // p x d
  Vec<Scalar> r_diag;  // p
  Vec<Scalar> pi0;     // d

  Index state_dim() const { return a.rows(); }
  Index obs_dim() const { return c.rows(); }
};

// How the l2 penalty on C is weighted.
//   kWhitened:  (lambda_c / 2) * sum_i |c_i|^2 / r_i   -> row-uniform ridge solve
//   kFrobenius: (lambda_c / 2) * |C|_F^2               -> per-row ridge weight r_i
enum class CPenalty { kWhitened, kFrobenius };

struct Hyperparams {
  double lambda_a = 0.0;
  double lambda_c = 0.0;
  Index d = 1;
  int max_em_iters = 30;
  int max_inner_iters = 30;
  double em_tol = 1e-6;
  double inner_tol = 1e-8;
  CPenalty c_penalty = CPenalty::kWhitened;
  // false: R is refreshed from the previous C before C itself is updated.
  bool r_uses_new_c = true;
};

// p x T matrix; column t-1 holds y_t.
template <typename Scalar>
struct ObservationSeries {
  Mat<Scalar> y;

  Index p() const { return y.rows(); }
  Index T() const { return y.cols(); }
};

// d x (T+1) matrix; column t holds x_t for t = 0..T.
template <typename Scalar>
struct LatentSeries {
  Mat<Scalar> x;

  Index d() const { return x.rows(); }
  Index T() const { return x.cols() - 1; }
};

// Smoothed posterior moments from the E-step, for t = 0..T.
template <typename Scalar>
struct SmoothedMoments {
  Mat<Scalar> x_hat;                // d x (T+1), E[x_t | Y]
  std::vector<Mat<Scalar>> p_hat;   // T+1 entries, E[x_t x_t^T | Y]
  std::vector<Mat<Scalar>> p_cross; // T entries; p_cross[t-1] = E[x_t x_{t-1}^T | Y]

  Index d() const { return x_hat.rows(); }
  Index T() const { return x_hat.cols() - 1; }

  // Smoothed covariance V_t^T = P_t - x_t x_t^T.
  Mat<Scalar> covariance(Index t) const {
    return p_hat[t] - x_hat.col(t) * x_hat.col(t).transpose();
  }
};

// Point-mass moments of a fixed latent path (zero posterior variance).
template <typename Scalar>
SmoothedMoments<Scalar> point_mass_moments(const LatentSeries<Scalar>& latent) {
  SmoothedMoments<Scalar> m;
  m.x_hat = latent.x;
  const Index n = latent.x.cols();
  m.p_hat.reserve(n);
  for (Index t = 0; t < n; ++t) m.p_hat.push_back(latent.x.col(t) * latent.x.col(t).transpose());
  for (Index t = 1; t < n; ++t)
    m.p_cross.push_back(latent.x.col(t) * latent.x.col(t - 1).transpose());
  return m;
}

using LdsParamsd = LdsParams<double>;
using ObservationSeriesd = ObservationSeries<double>;
using LatentSeriesd = LatentSeries<double>;
using SmoothedMomentsd = SmoothedMoments<double>;

}  // namespace mrsid

#endif  // MRSID_TYPES_HPP
