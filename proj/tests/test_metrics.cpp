#include "mrsid/mrsid.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace mrsid;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd permutation_matrix(std::mt19937_64& rng, Index n) {
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index(0));
  std::shuffle(idx.begin(), idx.end(), rng);
  MatrixXd p = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) p(idx[i], i) = 1.0;
  return p;
}

MatrixXd nonzero_diagonal(std::mt19937_64& rng, Index n) {
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) {
    const double mag = std::exp(oracle::uniform(rng, -3, 3));
    v(i) = (rng() & 1) ? mag : -mag;
  }
  return v.asDiagonal();
}

}  // namespace

TEST_CASE("column correlations: self, sign, scale") {
  std::mt19937_64 rng(1);
  const MatrixXd a = oracle::gaussian(rng, 20, 3);
  auto unit_diag = [](const MatrixXd& c) { return (c.diagonal().array() - 1.0).abs().maxCoeff(); };
  CHECK(unit_diag(column_correlation_matrix<double>(a, a)) < 1e-12);
  CHECK(unit_diag(column_correlation_matrix<double>(a, -a)) < 1e-12);
  const MatrixXd scaled = a * VectorXd{{2.0, 5.0, 0.1}}.asDiagonal();
  CHECK(unit_diag(column_correlation_matrix<double>(a, scaled)) < 1e-12);
}

TEST_CASE("column correlations reject constant columns") {
  MatrixXd a = MatrixXd::Random(5, 2);
  MatrixXd b = a;
  b.col(1).setConstant(3.0);
  CHECK_THROWS_AS(column_correlation_matrix<double>(a, b), DataError);
  try {
    column_correlation_matrix<double>(a, b);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("column 1") != std::string::npos);
  }
}

TEST_CASE("hungarian small cases") {
  const MatrixXd diag_pref = MatrixXd::Ones(4, 4) - MatrixXd::Identity(4, 4);
  const auto r = hungarian_assign<double>(diag_pref);
  CHECK(r.row_to_col == std::vector<Index>{0, 1, 2, 3});
  CHECK(r.value == 0.0);
  const auto s = hungarian_assign<double>(MatrixXd{{1.0, 0.0}, {0.0, 1.0}});
  CHECK(s.row_to_col == std::vector<Index>{1, 0});
  CHECK(s.value == 0.0);
}

TEST_CASE("hungarian equals brute force and beats sampled permutations") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 1 + Index(rng() % 6);
    const MatrixXd cost = oracle::gaussian(rng, n, n);
    const auto r = hungarian_assign<double>(cost);
    double v = 0;
    for (Index i = 0; i < n; ++i) v += cost(i, r.row_to_col[i]);
    CHECK(v == r.value);
    CHECK(r.value == doctest::Approx(oracle::brute_force_assignment(cost)).epsilon(1e-14));
    std::vector<Index> perm(n);
    std::iota(perm.begin(), perm.end(), Index(0));
    for (int k = 0; k < 100; ++k) {
      std::shuffle(perm.begin(), perm.end(), rng);
      double w = 0;
      for (Index i = 0; i < n; ++i) w += cost(i, perm[i]);
      CHECK(r.value <= w + 1e-12);
    }
  }
}

TEST_CASE("distance examples") {
  std::mt19937_64 rng(3);
  const MatrixXd a = oracle::gaussian(rng, 300, 10);
  CHECK(subspace_distance<double>(a, a).distance < 1e-12);
  const MatrixXd b = a * permutation_matrix(rng, 10) * nonzero_diagonal(rng, 10);
  const auto r = subspace_distance<double>(a, b);
  CHECK(r.distance < 1e-10);
  for (Index j = 0; j < 10; ++j)
    CHECK(std::abs(std::abs(oracle::pearson(a.col(r.permutation[j]), b.col(j))) - 1.0) < 1e-10);

  const MatrixXd c = oracle::gaussian(rng, 300, 10);
  CHECK(subspace_distance<double>(a, c).distance > 0.0);
  const MatrixXd a5 = oracle::gaussian(rng, 300, 5), c5 = oracle::gaussian(rng, 300, 5);
  CHECK(subspace_distance<double>(a5, c5).distance == doctest::Approx(oracle::brute_force_distance(a5, c5)));
}

TEST_CASE("distance is symmetric") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const MatrixXd a = oracle::gaussian(rng, 30, 4), b = oracle::gaussian(rng, 30, 4);
    CHECK(subspace_distance<double>(a, b).distance ==
          doctest::Approx(subspace_distance<double>(b, a).distance).epsilon(1e-12));
  }
}

TEST_CASE("amari error examples") {
  std::mt19937_64 rng(5);
  const MatrixXd a = oracle::gaussian(rng, 4, 4);
  CHECK(amari_error<double>(a, a) < 1e-12);
  const MatrixXd b = a * permutation_matrix(rng, 4) * nonzero_diagonal(rng, 4);
  CHECK(amari_error<double>(a, b) < 1e-10);
  for (int rep = 0; rep < 20; ++rep) {
    const MatrixXd x = oracle::gaussian(rng, 3, 3), y = oracle::gaussian(rng, 3, 3);
    const double e = amari_error<double>(x, y);
    CHECK(e >= 0.0);
    CHECK(e == doctest::Approx(oracle::amari(x, y)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(amari_error<double>(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2)), NumericalError);
  // a non-permutation P gives a positive error
  CHECK(amari_error<double>(MatrixXd::Identity(2, 2), MatrixXd{{1.0, 0.5}, {0.0, 1.0}}) > 0.1);
}

TEST_CASE("prediction scores") {
  std::mt19937_64 rng(6);
  const MatrixXd y = oracle::gaussian(rng, 5, 4);
  const auto same = prediction_scores<double>(y, y);
  CHECK(same.mse == 0.0);
  CHECK(*same.correlation == doctest::Approx(1.0));
  const auto shifted = prediction_scores<double>(y, (y.array() + 1.5).matrix());
  CHECK(shifted.mse == doctest::Approx(2.25));
  CHECK(*shifted.correlation == doctest::Approx(1.0));
  const MatrixXd z = oracle::gaussian(rng, 5, 4);
  const auto r = prediction_scores<double>(y, z);
  CHECK(*r.correlation == doctest::Approx(oracle::pearson(y, z)).epsilon(1e-12));
  CHECK(r.mse == doctest::Approx((y - z).squaredNorm() / 20.0).epsilon(1e-12));
  const auto flat = prediction_scores<double>(y, MatrixXd::Ones(5, 4));
  CHECK_FALSE(flat.correlation.has_value());
  CHECK(flat.mse > 0.0);
}
