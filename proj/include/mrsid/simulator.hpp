#ifndef MRSID_SIMULATOR_HPP
#define MRSID_SIMULATOR_HPP

#include "mrsid/errors.hpp"
#include "mrsid/random.hpp"
#include "mrsid/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

namespace mrsid {

struct SimConfig {
  Index p = 300;
  Index d = 10;
  Index T = 100;
  double sparsity_level = 0.2;
  double diag_boost = 1.0;
  double r_scale = 1.0;
  std::uint64_t seed = 1;
};

// Generated A matrices are shrunk to this spectral radius whenever they exceed it.
inline constexpr double kSimSpectralCap = 0.95;

inline void validate_sim_config(const SimConfig& cfg) {
  if (cfg.p <= 0 || cfg.d <= 0 || cfg.T <= 0) throw DimensionError("p, d, T must be positive");
  if (cfg.d > std::min(cfg.p, cfg.T)) throw DimensionError("d must not exceed min(p, T)");
  if (!(cfg.sparsity_level >= 0.0 && cfg.sparsity_level <= 1.0))
    throw DimensionError("sparsity_level must lie in [0, 1]");
  if (!(cfg.diag_boost > 0.0)) throw DimensionError("diag_boost must be positive");
  if (!(cfg.r_scale > 0.0)) throw DimensionError("r_scale must be positive");
}

template <typename Scalar>
Scalar spectral_radius(const Mat<Scalar>& a) {
  if (a.size() == 0) return 0;
  Eigen::EigenSolver<Mat<Scalar>> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Zero the k entries of smallest magnitude; ties resolved by column-major index.
template <typename Scalar>
void truncate_smallest(Mat<Scalar>& a, Index k) {
  std::vector<Index> idx(static_cast<std::size_t>(a.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index i, Index j) {
    return std::abs(a.data()[i]) < std::abs(a.data()[j]);
  });
  for (Index n = 0; n < k && n < a.size(); ++n) a.data()[idx[n]] = Scalar(0);
}

// Ground-truth parameters:
//   C: standard Gaussian p x d, each column sorted ascending
//   A: standard Gaussian d x d, + diag_boost * I, smallest round(s * d^2)
//      entries zeroed, then scaled down to spectral radius 0.95 if larger
//   R = r_scale * I, pi0 = 0
template <typename Scalar = double>
LdsParams<Scalar> generate_params(const SimConfig& cfg) {
  validate_sim_config(cfg);
  NormalStream rng(cfg.seed, Stream::kParams);

  LdsParams<Scalar> params;
  params.c = rng.matrix<Scalar>(cfg.p, cfg.d);
  for (Index j = 0; j < cfg.d; ++j) {
    auto col = params.c.col(j);
    std::sort(col.begin(), col.end());
  }

  params.a = rng.matrix<Scalar>(cfg.d, cfg.d);
  params.a.diagonal().array() += Scalar(cfg.diag_boost);
  const auto k = static_cast<Index>(std::llround(cfg.sparsity_level * double(cfg.d * cfg.d)));
  truncate_smallest(params.a, k);
  const Scalar rho = spectral_radius(params.a);
  if (rho > Scalar(kSimSpectralCap)) params.a *= Scalar(kSimSpectralCap) / rho;

  params.r_diag = Vec<Scalar>::Constant(cfg.p, Scalar(cfg.r_scale));
  params.pi0 = Vec<Scalar>::Zero(cfg.d);
  return params;
}

// Draws x_0 = pi0, x_t = A x_{t-1} + w_t, y_t = C x_t + v_t for t = 1..T.
// State noise and observation noise come from separate substreams of `seed`.
// Zero entries of r_diag are allowed here and give noiseless observations.
template <typename Scalar>
std::pair<LatentSeries<Scalar>, ObservationSeries<Scalar>> simulate_series(
    const LdsParams<Scalar>& params, Index T, std::uint64_t seed) {
  const Index d = params.state_dim(), p = params.obs_dim();
  require_dims(T >= 1, "T must be positive");
  require_dims(params.a.cols() == d && params.c.cols() == d && params.pi0.size() == d &&
                   params.r_diag.size() == p,
               "inconsistent parameter shapes");
  if (!(params.r_diag.array() >= Scalar(0)).all()) throw DimensionError("R_diag must be non-negative");

  NormalStream state_rng(seed, Stream::kStateNoise);
  NormalStream obs_rng(seed, Stream::kObsNoise);
  const Vec<Scalar> r_sd = params.r_diag.cwiseSqrt();

  LatentSeries<Scalar> latent{Mat<Scalar>(d, T + 1)};
  ObservationSeries<Scalar> obs{Mat<Scalar>(p, T)};
  latent.x.col(0) = params.pi0;
  for (Index t = 1; t <= T; ++t) {
    latent.x.col(t) = params.a * latent.x.col(t - 1) + state_rng.vector<Scalar>(d);
    obs.y.col(t - 1) = params.c * latent.x.col(t) + r_sd.cwiseProduct(obs_rng.vector<Scalar>(p));
  }
  return {std::move(latent), std::move(obs)};
}

}  // namespace mrsid

#endif  // MRSID_SIMULATOR_HPP
