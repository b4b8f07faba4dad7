#ifndef MRSID_FORECAST_HPP
#define MRSID_FORECAST_HPP

#include "mrsid/errors.hpp"
#include "mrsid/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mrsid {

// Noise-free rollout x_{T+i} = A x_{T+i-1}, y_{T+i} = C x_{T+i}, i = 1..k.
// Column i-1 of the result is y_{T+i}.
template <typename Scalar>
Mat<Scalar> k_step_predict(const Mat<Scalar>& a, const Mat<Scalar>& c, const Vec<Scalar>& x_last, Index k) {
  require_dims(k >= 1, "k must be at least 1");
  require_dims(a.rows() == a.cols() && c.cols() == a.rows() && x_last.size() == a.rows(),
               "A, C and x_T shapes disagree");
  Mat<Scalar> out(c.rows(), k);
  Vec<Scalar> x = x_last;
  for (Index i = 0; i < k; ++i) {
    x = a * x;
    out.col(i) = c * x;
  }
  return out;
}

// Observation covariance over a subset S of coordinates for each horizon:
//   Sigma_i = A Sigma_{i-1} A^T + I,  Sigma_0 = V_T
//   Cov(y_{T+i})_S = C_S Sigma_i C_S^T + R_S
template <typename Scalar>
std::vector<Mat<Scalar>> predictive_variance(const LdsParams<Scalar>& params, const Mat<Scalar>& v_last, Index k,
                                             const std::vector<Index>& subset) {
  const Index d = params.state_dim(), p = params.obs_dim();
  require_dims(k >= 1, "k must be at least 1");
  require_dims(v_last.rows() == d && v_last.cols() == d, "V_T must be d x d");
  if (subset.empty()) throw DimensionError("subset must be non-empty");
  const Index s = static_cast<Index>(subset.size());
  Mat<Scalar> c_s(s, d);
  Vec<Scalar> r_s(s);
  for (Index i = 0; i < s; ++i) {
    if (subset[i] < 0 || subset[i] >= p) throw DimensionError("subset index out of range");
    c_s.row(i) = params.c.row(subset[i]);
    r_s(i) = params.r_diag(subset[i]);
  }
  std::vector<Mat<Scalar>> out;
  out.reserve(k);
  Mat<Scalar> sigma = v_last;
  for (Index i = 0; i < k; ++i) {
    sigma = params.a * sigma * params.a.transpose() + Mat<Scalar>::Identity(d, d);
    sigma = Scalar(0.5) * (sigma + sigma.transpose());
    Mat<Scalar> cov = c_s * sigma * c_s.transpose();
    cov.diagonal() += r_s;
    out.push_back(std::move(cov));
  }
  return out;
}

template <typename Scalar>
struct ForecastBand {
  Vec<Scalar> center;  // subset-mean prediction per horizon
  Vec<Scalar> lower;
  Vec<Scalar> upper;
};

// Band for the subset-averaged signal: mean +/- z * sd, where sd is the
// standard deviation of the average, sqrt(1^T Cov 1) / |S|.
template <typename Scalar>
ForecastBand<Scalar> confidence_band(const Mat<Scalar>& predictions, const std::vector<Mat<Scalar>>& covariances,
                                     const std::vector<Index>& subset, Scalar z) {
  const Index k = predictions.cols(), s = static_cast<Index>(subset.size());
  require_dims(static_cast<Index>(covariances.size()) == k, "one covariance per horizon required");
  require_dims(s > 0, "subset must be non-empty");
  ForecastBand<Scalar> band{Vec<Scalar>(k), Vec<Scalar>(k), Vec<Scalar>(k)};
  for (Index i = 0; i < k; ++i) {
    Scalar mean = 0;
    for (Index j : subset) {
      require_dims(j >= 0 && j < predictions.rows(), "subset index out of range");
      mean += predictions(j, i);
    }
    mean /= Scalar(s);
    const Scalar sd = std::sqrt(std::max(Scalar(0), covariances[i].sum())) / Scalar(s);
    band.center(i) = mean;
    band.lower(i) = mean - z * sd;
    band.upper(i) = mean + z * sd;
  }
  return band;
}

}  // namespace mrsid

#endif  // MRSID_FORECAST_HPP
