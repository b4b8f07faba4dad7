#include "mrsid/mrsid.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace mrsid;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("generate_params: sparsity, stability, sorted columns") {
  SimConfig cfg;
  cfg.p = 300;
  cfg.d = 10;
  cfg.T = 100;
  cfg.seed = 1;
  const auto params = generate_params(cfg);
  CHECK((params.a.array() == 0.0).count() == 20);
  CHECK(spectral_radius<double>(params.a) <= kSimSpectralCap + 1e-12);
  for (Index j = 0; j < cfg.d; ++j) {
    const auto col = params.c.col(j);
    CHECK(std::is_sorted(col.begin(), col.end()));
  }
  CHECK(params.r_diag == VectorXd::Ones(cfg.p));
  CHECK(params.pi0 == VectorXd::Zero(cfg.d));
  CHECK(validate_params(params, cfg.p, cfg.d).ok());
}

TEST_CASE("generate_params without truncation has no zeros") {
  SimConfig cfg;
  cfg.sparsity_level = 0.0;
  cfg.p = 20;
  cfg.d = 5;
  cfg.seed = 9;
  CHECK((generate_params(cfg).a.array() == 0.0).count() == 0);
}

TEST_CASE("generate_params and simulate_series are seed deterministic") {
  SimConfig cfg;
  cfg.p = 30;
  cfg.d = 4;
  cfg.T = 20;
  cfg.seed = 77;
  const auto a = generate_params(cfg), b = generate_params(cfg);
  CHECK(a.a == b.a);
  CHECK(a.c == b.c);
  const auto [xa, ya] = simulate_series(a, cfg.T, cfg.seed);
  const auto [xb, yb] = simulate_series(b, cfg.T, cfg.seed);
  CHECK(xa.x == xb.x);
  CHECK(ya.y == yb.y);
  cfg.seed = 78;
  CHECK(generate_params(cfg).a != a.a);
}

TEST_CASE("validate_sim_config rejects bad configs") {
  SimConfig cfg;
  cfg.d = 400;
  CHECK_THROWS_AS(validate_sim_config(cfg), DimensionError);
  cfg = SimConfig{};
  cfg.sparsity_level = 1.5;
  CHECK_THROWS_AS(validate_sim_config(cfg), DimensionError);
  cfg = SimConfig{};
  cfg.r_scale = 0;
  CHECK_THROWS_AS(validate_sim_config(cfg), DimensionError);
}

TEST_CASE("simulate_series shapes and initial state") {
  SimConfig cfg;
  cfg.seed = 1;
  const auto params = generate_params(cfg);
  const auto [x, y] = simulate_series(params, 100, 1);
  CHECK(y.y.rows() == 300);
  CHECK(y.y.cols() == 100);
  CHECK(x.x.rows() == 10);
  CHECK(x.x.cols() == 101);
  CHECK(x.x.col(0) == params.pi0);
}

TEST_CASE("noiseless identity observation reproduces the state") {
  LdsParamsd p;
  p.a = MatrixXd::Identity(2, 2) * 0.7;
  p.c = MatrixXd::Identity(2, 2);
  p.r_diag = VectorXd::Zero(2);
  p.pi0 = VectorXd::Zero(2);
  const auto [x, y] = simulate_series(p, 50, 3);
  CHECK((y.y - x.x.rightCols(50)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("white-noise and AR(1) stationary moments") {
  LdsParamsd p;
  p.a = MatrixXd::Zero(2, 2);
  p.c = MatrixXd::Identity(2, 2);
  p.r_diag = VectorXd::Ones(2);
  p.pi0 = VectorXd::Zero(2);
  const auto [x, y] = simulate_series(p, 100000, 5);
  const MatrixXd xs = x.x.rightCols(100000);
  const MatrixXd cov = xs * xs.transpose() / 100000.0;
  CHECK((cov - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);

  LdsParamsd q;
  q.a = MatrixXd::Constant(1, 1, 0.5);
  q.c = MatrixXd::Ones(1, 1);
  q.r_diag = VectorXd::Ones(1);
  q.pi0 = VectorXd::Zero(1);
  const auto [x1, y1] = simulate_series(q, 100000, 6);
  const double var = x1.x.rightCols(99000).squaredNorm() / 99000.0;
  CHECK(std::abs(var - 4.0 / 3.0) < 0.05 * 4.0 / 3.0);
}

TEST_CASE("observation covariance matches the Lyapunov solution") {
  std::mt19937_64 rng(4);
  const auto p = oracle::random_params(rng, 3, 2);
  LdsParamsd q = p;
  q.pi0 = VectorXd::Zero(2);
  const double rho = spectral_radius<double>(q.a);
  if (rho > 0.8) q.a *= 0.8 / rho;
  // Stationary Sigma = A Sigma A^T + I by fixed-point iteration.
  MatrixXd sigma = MatrixXd::Identity(2, 2);
  for (int k = 0; k < 2000; ++k) sigma = q.a * sigma * q.a.transpose() + MatrixXd::Identity(2, 2);
  const MatrixXd expected = q.c * sigma * q.c.transpose() + MatrixXd(q.r_diag.asDiagonal());
  const Index T = 200000, burn = 1000;
  const auto [x, y] = simulate_series(q, T, 12);
  const MatrixXd ys = y.y.rightCols(T - burn);
  const MatrixXd cov = ys * ys.transpose() / double(T - burn);
  CHECK((cov - expected).cwiseAbs().maxCoeff() < 0.05 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("normal stream reproduces and separates substreams") {
  NormalStream a(5, Stream::kStateNoise), b(5, Stream::kStateNoise), c(5, Stream::kObsNoise);
  const auto va = a.vector<double>(100), vb = b.vector<double>(100), vc = c.vector<double>(100);
  CHECK(va == vb);
  CHECK(va != vc);
  NormalStream big(1, Stream::kAux);
  const VectorXd v = big.vector<double>(200000);
  CHECK(std::abs(v.mean()) < 0.01);
  CHECK(std::abs((v.array() - v.mean()).square().mean() - 1.0) < 0.01);
}
