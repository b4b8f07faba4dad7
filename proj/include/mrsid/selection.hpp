#ifndef MRSID_SELECTION_HPP
#define MRSID_SELECTION_HPP

#include "mrsid/em.hpp"
#include "mrsid/errors.hpp"
#include "mrsid/forecast.hpp"
#include "mrsid/metrics.hpp"
#include "mrsid/types.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace mrsid {

struct ProfileResult {
  Index d_selected = 0;
  std::vector<double> profile;  // profile[q - 1] for q = 1..d_max
};

// Two-group profile likelihood over a descending spectrum. For a split q the
// first q values form group 1 and the remaining n - q group 2; both are
// Gaussian with their own mean and a pooled variance, all at their MLEs:
//
//   sigma^2(q) = [sum_{i<=q} (v_i - m_1)^2 + sum_{i>q} (v_i - m_2)^2] / n
//   l(q)       = -n/2 log(2 pi sigma^2(q)) - n/2
//
// sigma^2 is floored at 1e-12 * max(1, mean v^2) so a flat spectrum gives a
// flat profile. Ties pick the smallest q.
inline ProfileResult profile_likelihood_d(const std::vector<double>& values, Index d_max) {
  const Index n = static_cast<Index>(values.size());
  if (n < 3) throw DimensionError("profile likelihood needs at least 3 values");
  for (Index i = 1; i < n; ++i)
    if (values[i] > values[i - 1]) throw DimensionError("values must be sorted in descending order");
  const Index q_max = std::min(d_max, n - 1);
  if (q_max < 1) throw DimensionError("d_max must be at least 1");

  double mean_sq = 0;
  for (double v : values) mean_sq += v * v;
  mean_sq /= double(n);
  const double var_floor = 1e-12 * std::max(1.0, mean_sq);

  auto group_ss = [&](Index lo, Index hi) {
    double m = 0;
    for (Index i = lo; i < hi; ++i) m += values[i];
    m /= double(hi - lo);
    double ss = 0;
    for (Index i = lo; i < hi; ++i) ss += (values[i] - m) * (values[i] - m);
    return ss;
  };

  ProfileResult out;
  double best = -std::numeric_limits<double>::infinity();
  for (Index q = 1; q <= q_max; ++q) {
    const double var = std::max((group_ss(0, q) + group_ss(q, n)) / double(n), var_floor);
    const double ll = -0.5 * double(n) * std::log(2.0 * std::numbers::pi * var) - 0.5 * double(n);
    out.profile.push_back(ll);
    if (ll > best) {
      best = ll;
      out.d_selected = q;
    }
  }
  return out;
}

template <typename Scalar>
std::vector<double> singular_values(const ObservationSeries<Scalar>& obs) {
  Eigen::BDCSVD<Mat<Scalar>> svd(obs.y);
  const Vec<Scalar>& sv = svd.singularValues();
  return std::vector<double>(sv.data(), sv.data() + sv.size());
}

struct LambdaPair {
  double lambda_a = 0;
  double lambda_c = 0;
};

// lambda_c on a log grid from lo to hi (inclusive, `points` values) with
// lambda_a = k * lambda_c.
inline std::vector<LambdaPair> log_grid(double lo, double hi, int points, double k = 1.0) {
  if (!(lo > 0 && hi >= lo) || points < 1) throw DimensionError("log grid needs 0 < lo <= hi and points >= 1");
  std::vector<LambdaPair> grid;
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < points; ++i) {
    const double e = points == 1 ? a : a + (b - a) * double(i) / double(points - 1);
    const double lc = std::pow(10.0, e);
    grid.push_back({k * lc, lc});
  }
  return grid;
}

template <typename Scalar>
struct SweepEntry {
  LambdaPair lambdas;
  bool ok = false;
  std::string error;
  double mse = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> correlation;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  LdsParams<Scalar> params;  // empty when the fit failed
};

template <typename Scalar>
struct SweepResult {
  std::vector<SweepEntry<Scalar>> entries;
  std::optional<std::size_t> best;  // highest held-out correlation
  Index train_length = 0;
};

// Index of the entry with the largest correlation; ties go to the smaller
// lambda_c, then the smaller lambda_a.
template <typename Scalar>
std::optional<std::size_t> select_best(const std::vector<SweepEntry<Scalar>>& entries) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!e.ok || !e.correlation) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = entries[*best];
    const bool better =
        *e.correlation > *b.correlation ||
        (*e.correlation == *b.correlation &&
         (e.lambdas.lambda_c < b.lambdas.lambda_c ||
          (e.lambdas.lambda_c == b.lambdas.lambda_c && e.lambdas.lambda_a < b.lambdas.lambda_a)));
    if (better) best = i;
  }
  return best;
}

// Fit each grid pair on the first floor(train_fraction * T) columns and score
// its `horizon`-step forecast against the columns that follow. Failed fits
// are recorded and skipped. Grid points are spread over `threads` workers;
// results do not depend on the thread count.
template <typename Scalar>
SweepResult<Scalar> lambda_sweep(const ObservationSeries<Scalar>& obs, const Hyperparams& hp_base,
                                 const std::vector<LambdaPair>& grid, double train_fraction, Index horizon,
                                 unsigned threads = 1) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DimensionError("train_fraction must lie in (0, 1)");
  if (horizon < 1) throw DimensionError("horizon must be at least 1");
  if (grid.empty()) throw DimensionError("grid must be non-empty");
  const Index T = obs.T();
  const auto n_train = static_cast<Index>(std::floor(train_fraction * double(T)));
  if (n_train < 1 || T - n_train < horizon) throw DimensionError("held-out suffix shorter than the horizon");

  const ObservationSeries<Scalar> train{obs.y.leftCols(n_train)};
  const Mat<Scalar> test = obs.y.middleCols(n_train, horizon);

  SweepResult<Scalar> result;
  result.train_length = n_train;
  result.entries.resize(grid.size());

  auto run_one = [&](std::size_t i) {
    SweepEntry<Scalar>& e = result.entries[i];
    e.lambdas = grid[i];
    try {
      Hyperparams hp = hp_base;
      hp.lambda_a = grid[i].lambda_a;
      hp.lambda_c = grid[i].lambda_c;
      FitReport<Scalar> rep = fit(train, hp);
      const Mat<Scalar> pred =
          k_step_predict<Scalar>(rep.params.a, rep.params.c, rep.moments.x_hat.col(n_train), horizon);
      const auto scores = prediction_scores<Scalar>(test, pred);
      e.mse = double(scores.mse);
      if (scores.correlation) e.correlation = double(*scores.correlation);
      e.objective = rep.objective_trace.empty() ? double(rep.initial_objective) : double(rep.objective_trace.back());
      e.iterations = rep.iterations_run;
      e.params = std::move(rep.params);
      e.ok = true;
    } catch (const std::exception& ex) {
      e.ok = false;
      e.error = ex.what();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(grid.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) run_one(i);
      });
  }
  result.best = select_best(result.entries);
  return result;
}

}  // namespace mrsid

#endif  // MRSID_SELECTION_HPP
