#include "cli.hpp"

#include "mrsid/io.hpp"
#include "mrsid/mrsid.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace mrsid::cli {

namespace {

namespace fs = std::filesystem;
using io::format_double;

// Raised for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join_command(const std::string& name, const std::vector<std::pair<std::string, std::string>>& flags) {
  std::string s = name;
  for (const auto& [k, v] : flags) s += " --" + k + " " + v;
  return s;
}

std::vector<Index> parse_index_list(const std::string& text) {
  std::vector<Index> out;
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ',') c = ' ';
  std::istringstream is(cleaned);
  long long v;
  while (is >> v) out.push_back(static_cast<Index>(v));
  if (!is.eof()) throw UsageError("bad index list '" + text + "'");
  return out;
}

Eigen::MatrixXd load_observations(const std::string& path) {
  Eigen::MatrixXd y = io::read_matrix(path);
  if (!y.allFinite()) throw DataError(path + " contains non-finite values");
  return y;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  SimConfig cfg;
  std::string out_dir;
  std::string format = "bin";
};

int cmd_simulate(const SimulateOpts& o, std::ostream& out) {
  if (o.format != "bin" && o.format != "csv") throw UsageError("--format must be bin or csv");
  const LdsParamsd params = generate_params<double>(o.cfg);
  const auto [latent, obs] = simulate_series(params, o.cfg.T, o.cfg.seed);

  fs::create_directories(o.out_dir);
  const std::string ext = o.format == "csv" ? ".csv" : ".mat";
  const fs::path dir(o.out_dir);
  io::write_matrix((dir / ("Y" + ext)).string(), obs.y);
  io::write_matrix((dir / ("X" + ext)).string(), latent.x);

  io::Provenance prov;
  prov.tool_version = kToolVersion;
  prov.seed = o.cfg.seed;
  prov.command = join_command("simulate", {{"p", std::to_string(o.cfg.p)},
                                           {"d", std::to_string(o.cfg.d)},
                                           {"T", std::to_string(o.cfg.T)},
                                           {"sparsity", format_double(o.cfg.sparsity_level)},
                                           {"diag-boost", format_double(o.cfg.diag_boost)},
                                           {"r-scale", format_double(o.cfg.r_scale)},
                                           {"seed", std::to_string(o.cfg.seed)}});
  io::save_archive((dir / "truth.json").string(), io::make_archive(params, o.cfg.T, prov));

  out << "wrote Y (" << obs.y.rows() << "x" << obs.y.cols() << "), X (" << latent.x.rows() << "x"
      << latent.x.cols() << ") and truth.json to " << o.out_dir << "\n";
  return kOk;
}

// --------------------------------------------------------------------- fit

struct FitOpts {
  std::string data;
  Hyperparams hp;
  std::string penalty = "whitened";
  bool r_before_c = false;
  std::string out = "model.json";
  std::string report;
};

void write_fit_report(std::ostream& os, const FitReport<double>& rep, const Hyperparams& hp,
                      const ObservationSeriesd& obs, double seconds) {
  os << "mrsid fit report\n";
  os << "p: " << obs.p() << "\nT: " << obs.T() << "\nd: " << hp.d << "\n";
  os << "lambda_a: " << format_double(hp.lambda_a) << "\nlambda_c: " << format_double(hp.lambda_c) << "\n";
  os << "iterations: " << rep.iterations_run << "\nconverged: " << (rep.converged ? "true" : "false") << "\n";
  os << std::fixed << std::setprecision(3) << "time_seconds: " << seconds << "\n" << std::defaultfloat;
  os << "initial_objective: " << format_double(rep.initial_objective) << "\n";
  os << "iteration,objective,expected_objective\n";
  for (std::size_t i = 0; i < rep.objective_trace.size(); ++i)
    os << (i + 1) << "," << format_double(rep.objective_trace[i]) << ","
       << format_double(rep.expected_objective_trace[i]) << "\n";
}

int cmd_fit(FitOpts o, std::ostream& out) {
  if (o.penalty == "whitened")
    o.hp.c_penalty = CPenalty::kWhitened;
  else if (o.penalty == "frobenius")
    o.hp.c_penalty = CPenalty::kFrobenius;
  else
    throw UsageError("--penalty must be whitened or frobenius");
  o.hp.r_uses_new_c = !o.r_before_c;

  const ObservationSeriesd obs{load_observations(o.data)};
  if (o.hp.d > std::min(obs.p(), obs.T())) throw DataError("d exceeds min(p, T) of the data");

  const auto start = std::chrono::steady_clock::now();
  const FitReport<double> rep = fit(obs, o.hp);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  io::Provenance prov;
  prov.tool_version = kToolVersion;
  prov.command = join_command("fit", {{"d", std::to_string(o.hp.d)},
                                      {"lambda-a", format_double(o.hp.lambda_a)},
                                      {"lambda-c", format_double(o.hp.lambda_c)},
                                      {"max-iters", std::to_string(o.hp.max_em_iters)},
                                      {"max-inner", std::to_string(o.hp.max_inner_iters)},
                                      {"tol", format_double(o.hp.em_tol)},
                                      {"inner-tol", format_double(o.hp.inner_tol)},
                                      {"penalty", o.penalty}});
  io::save_archive(o.out, io::make_archive(rep, o.hp, obs.T(), prov));

  const std::string report_path = o.report.empty() ? o.out + ".report.txt" : o.report;
  {
    std::ofstream rf(report_path, std::ios::trunc);
    if (!rf) throw io::IoError("cannot open " + report_path + " for writing");
    write_fit_report(rf, rep, o.hp, obs, seconds);
  }
  out << "iterations: " << rep.iterations_run << " converged: " << (rep.converged ? "true" : "false") << "\n";
  out << "final objective: "
      << format_double(rep.objective_trace.empty() ? rep.initial_objective : rep.objective_trace.back()) << "\n";
  out << std::fixed << std::setprecision(3) << "time_seconds: " << seconds << "\n" << std::defaultfloat;
  out << "wrote " << o.out << " and " << report_path << "\n";
  return kOk;
}

// ----------------------------------------------------------------- predict

struct PredictOpts {
  std::string model;
  int steps = 0;
  std::string truth;
  std::string baseline;
  std::string subset;
  double z = 0.84;
  std::string out_dir = ".";
};

int cmd_predict(const PredictOpts& o, std::ostream& out) {
  if (o.steps <= 0) throw UsageError("--steps must be positive");
  if (!o.baseline.empty() && o.baseline != "svd") throw UsageError("--baseline only supports 'svd'");
  const io::ModelArchive ar = io::load_archive(o.model);
  const Index k = o.steps;

  const Eigen::MatrixXd pred = k_step_predict<double>(ar.params.a, ar.params.c, ar.x_last, k);
  Eigen::MatrixXd base_pred;
  if (!o.baseline.empty()) {
    if (!ar.baseline) throw DataError("model archive has no SVD baseline");
    base_pred = k_step_predict<double>(ar.baseline->a, ar.baseline->c, ar.baseline->x_last, k);
  }

  Eigen::MatrixXd truth;
  if (!o.truth.empty()) {
    truth = io::read_matrix(o.truth);
    if (truth.rows() != ar.p || truth.cols() < k)
      throw UsageError("truth must have p rows and at least --steps columns");
    truth = truth.leftCols(k).eval();
  }
  std::vector<Index> subset;
  if (!o.subset.empty()) {
    subset = parse_index_list(o.subset);
    if (subset.empty()) throw UsageError("--subset is empty");
    for (Index s : subset)
      if (s < 0 || s >= ar.p) throw UsageError("--subset index out of range");
  }

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  io::write_matrix_csv((dir / "predictions.csv").string(), pred);
  if (base_pred.size()) io::write_matrix_csv((dir / "baseline_predictions.csv").string(), base_pred);

  if (truth.size()) {
    std::ofstream sf(dir / "scores.csv", std::ios::trunc);
    sf << "step,mse,correlation";
    if (base_pred.size()) sf << ",baseline_mse,baseline_correlation";
    sf << "\n";
    auto corr_text = [](const std::optional<double>& c) { return c ? format_double(*c) : std::string("nan"); };
    for (Index i = 0; i < k; ++i) {
      const auto s = prediction_scores<double>(truth.col(i), pred.col(i));
      sf << (i + 1) << "," << format_double(s.mse) << "," << corr_text(s.correlation);
      if (base_pred.size()) {
        const auto b = prediction_scores<double>(truth.col(i), base_pred.col(i));
        sf << "," << format_double(b.mse) << "," << corr_text(b.correlation);
      }
      sf << "\n";
    }
    const auto all = prediction_scores<double>(truth, pred);
    out << "mse: " << format_double(all.mse) << "\ncorrelation: " << corr_text(all.correlation) << "\n";
    if (base_pred.size()) {
      const auto b = prediction_scores<double>(truth, base_pred);
      out << "baseline_mse: " << format_double(b.mse) << "\nbaseline_correlation: " << corr_text(b.correlation)
          << "\n";
    }
  }

  if (!subset.empty()) {
    const auto covs = predictive_variance<double>(ar.params, ar.v_last, k, subset);
    const auto band = confidence_band<double>(pred, covs, subset, o.z);
    std::ofstream bf(dir / "band.csv", std::ios::trunc);
    bf << "step,mean,lower,upper" << (truth.size() ? ",truth_mean" : "") << "\n";
    for (Index i = 0; i < k; ++i) {
      bf << (i + 1) << "," << format_double(band.center(i)) << "," << format_double(band.lower(i)) << ","
         << format_double(band.upper(i));
      if (truth.size()) {
        double m = 0;
        for (Index s : subset) m += truth(s, i);
        bf << "," << format_double(m / double(subset.size()));
      }
      bf << "\n";
    }
  }
  out << "wrote predictions for " << k << " steps to " << o.out_dir << "\n";
  return kOk;
}

// ------------------------------------------------------------------- sweep

int cmd_sweep(const std::string& config_path, const std::string& out_override, std::ostream& out) {
  const io::KeyValueConfig cfg = io::KeyValueConfig::load(config_path);
  const ObservationSeriesd obs{load_observations(cfg.get("data"))};

  Hyperparams hp;
  hp.d = static_cast<Index>(cfg.get_int("d", 1));
  hp.max_em_iters = static_cast<int>(cfg.get_int("max_em_iters", 30));
  hp.max_inner_iters = static_cast<int>(cfg.get_int("max_inner_iters", 30));
  hp.em_tol = cfg.get_double("em_tol", 1e-6);
  hp.inner_tol = cfg.get_double("inner_tol", 1e-8);
  const std::string penalty = cfg.get_or("c_penalty", "whitened");
  if (penalty != "whitened" && penalty != "frobenius") throw UsageError("c_penalty must be whitened or frobenius");
  hp.c_penalty = penalty == "whitened" ? CPenalty::kWhitened : CPenalty::kFrobenius;

  std::vector<LambdaPair> grid;
  if (cfg.has("lambda_c")) {
    const auto lc = cfg.get_list("lambda_c");
    const auto la = cfg.has("lambda_a") ? cfg.get_list("lambda_a") : lc;
    if (la.size() != lc.size()) throw UsageError("lambda_a and lambda_c lists differ in length");
    for (std::size_t i = 0; i < lc.size(); ++i) grid.push_back({la[i], lc[i]});
  } else {
    grid = log_grid(cfg.get_double("grid_min", 1e-6), cfg.get_double("grid_max", 1e4),
                    static_cast<int>(cfg.get_int("grid_points", 11)), cfg.get_double("k", 1.0));
  }

  const double train_fraction = cfg.get_double("train_fraction", 0.8);
  const auto horizon = static_cast<Index>(cfg.get_int("horizon", 10));
  const auto threads = static_cast<unsigned>(cfg.get_int("threads", 1));
  const SweepResult<double> res = lambda_sweep(obs, hp, grid, train_fraction, horizon, threads);

  std::optional<io::ModelArchive> truth;
  if (cfg.has("truth")) truth = io::load_archive(cfg.get("truth"));

  const std::string out_path = !out_override.empty() ? out_override : cfg.get_or("out", "sweep.csv");
  std::ofstream of(out_path, std::ios::trunc);
  if (!of) throw io::IoError("cannot open " + out_path + " for writing");
  of << "index,lambda_a,lambda_c,ok,mse,correlation,objective,iterations";
  if (truth) of << ",distance_a,distance_c";
  of << ",error\n";
  for (std::size_t i = 0; i < res.entries.size(); ++i) {
    const auto& e = res.entries[i];
    of << i << "," << format_double(e.lambdas.lambda_a) << "," << format_double(e.lambdas.lambda_c) << ","
       << (e.ok ? 1 : 0) << "," << format_double(e.mse) << ","
       << (e.correlation ? format_double(*e.correlation) : "nan") << "," << format_double(e.objective) << ","
       << e.iterations;
    if (truth) {
      std::string da = "nan", dc = "nan";
      if (e.ok) {
        try {
          da = format_double(subspace_distance<double>(truth->params.a, e.params.a).distance);
          dc = format_double(subspace_distance<double>(truth->params.c, e.params.c).distance);
        } catch (const std::exception&) {
        }
      }
      of << "," << da << "," << dc;
    }
    std::string msg = e.error;
    for (char& c : msg)
      if (c == ',' || c == '\n') c = ';';
    of << "," << msg << "\n";
  }
  if (res.best) {
    const auto& b = res.entries[*res.best];
    out << "best: index " << *res.best << " lambda_a " << format_double(b.lambdas.lambda_a) << " lambda_c "
        << format_double(b.lambdas.lambda_c) << " correlation " << format_double(*b.correlation) << "\n";
  } else {
    out << "best: none (every grid point failed)\n";
  }
  out << "wrote " << out_path << "\n";
  return kOk;
}

// ---------------------------------------------------------------- select-d

int cmd_select_d(const std::string& data, int d_max, std::ostream& out) {
  const ObservationSeriesd obs{load_observations(data)};
  const std::vector<double> sv = singular_values(obs);
  if (sv.size() < 3) throw DataError("need at least 3 singular values");
  const Index cap = d_max > 0 ? d_max : static_cast<Index>(sv.size()) - 1;
  const ProfileResult pr = profile_likelihood_d(sv, cap);
  out << "d: " << pr.d_selected << "\n";
  out << "q,profile_loglik,singular_value\n";
  for (std::size_t q = 0; q < pr.profile.size(); ++q)
    out << (q + 1) << "," << format_double(pr.profile[q]) << "," << format_double(sv[q]) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- distance

Eigen::MatrixXd load_parameter_matrix(const std::string& path, const std::string& which) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    const io::ModelArchive ar = io::load_archive(path);
    if (which == "A") return ar.params.a;
    if (which == "C") return ar.params.c;
    throw UsageError("--matrix must be A or C");
  }
  return io::read_matrix(path);
}

int cmd_distance(const std::string& a_path, const std::string& b_path, bool amari, const std::string& which,
                 std::ostream& out) {
  const Eigen::MatrixXd a = load_parameter_matrix(a_path, which);
  const Eigen::MatrixXd b = load_parameter_matrix(b_path, which);
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw UsageError("matrices differ in shape");
  const auto res = subspace_distance<double>(a, b);
  out << "distance: " << format_double(res.distance) << (res.degenerate ? " (degenerate)" : "") << "\n";
  out << "total_correlation: " << format_double(res.total_correlation) << "\n";
  if (amari) out << "amari: " << format_double(amari_error<double>(a, b)) << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalized EM for reduced-rank linear dynamical systems"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Generate ground-truth parameters and a synthetic series");
  simulate->add_option("--p", sim.cfg.p, "observation dimension")->required();
  simulate->add_option("--d", sim.cfg.d, "latent dimension")->required();
  simulate->add_option("--T", sim.cfg.T, "number of time steps")->required();
  simulate->add_option("--sparsity", sim.cfg.sparsity_level, "fraction of A entries zeroed")->capture_default_str();
  simulate->add_option("--diag-boost", sim.cfg.diag_boost, "multiple of I added to A")->capture_default_str();
  simulate->add_option("--r-scale", sim.cfg.r_scale, "observation noise variance")->capture_default_str();
  simulate->add_option("--seed", sim.cfg.seed, "random seed")->capture_default_str();
  simulate->add_option("--format", sim.format, "bin or csv")->capture_default_str();
  simulate->add_option("--out", sim.out_dir, "output directory")->required();

  FitOpts fo;
  auto* fitc = app.add_subcommand("fit", "Fit the penalized LDS by EM");
  fitc->add_option("--data", fo.data, "p x T observation matrix (.mat or .csv)")->required();
  fitc->add_option("--d", fo.hp.d, "latent dimension")->required();
  fitc->add_option("--lambda-a", fo.hp.lambda_a, "l1 weight on A")->capture_default_str();
  fitc->add_option("--lambda-c", fo.hp.lambda_c, "l2 weight on C")->capture_default_str();
  fitc->add_option("--max-iters", fo.hp.max_em_iters, "EM iteration budget")->capture_default_str();
  fitc->add_option("--max-inner", fo.hp.max_inner_iters, "FISTA iteration budget")->capture_default_str();
  fitc->add_option("--tol", fo.hp.em_tol, "relative parameter-change tolerance")->capture_default_str();
  fitc->add_option("--inner-tol", fo.hp.inner_tol, "FISTA relative objective-change tolerance (0: run full budget)")
      ->capture_default_str();
  fitc->add_option("--penalty", fo.penalty, "whitened or frobenius")->capture_default_str();
  fitc->add_flag("--r-before-c", fo.r_before_c, "update R from the previous C");
  fitc->add_option("--out", fo.out, "model archive path")->capture_default_str();
  fitc->add_option("--report", fo.report, "report path (default <out>.report.txt)");

  PredictOpts po;
  auto* predict = app.add_subcommand("predict", "k-step forecasts from a fitted model");
  predict->add_option("--model", po.model, "model archive")->required();
  predict->add_option("--steps", po.steps, "forecast horizon k")->required();
  predict->add_option("--truth", po.truth, "held-out p x k' matrix to score against");
  predict->add_option("--baseline", po.baseline, "add baseline columns (svd)");
  predict->add_option("--subset", po.subset, "comma-separated row indices for a confidence band");
  predict->add_option("--z", po.z, "band half-width in standard deviations")->capture_default_str();
  predict->add_option("--out", po.out_dir, "output directory")->capture_default_str();

  std::string sweep_cfg, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Penalty grid search by held-out prediction");
  sweep->add_option("--config", sweep_cfg, "key = value config file")->required();
  sweep->add_option("--out", sweep_out, "CSV path (overrides config 'out')");

  std::string sel_data;
  int sel_dmax = 0;
  auto* select = app.add_subcommand("select-d", "Profile-likelihood choice of the latent dimension");
  select->add_option("--data", sel_data, "p x T observation matrix")->required();
  select->add_option("--d-max", sel_dmax, "largest candidate (default: all)");

  std::string dist_a, dist_b, dist_which = "A";
  bool dist_amari = false;
  auto* distance = app.add_subcommand("distance", "Permutation- and scale-invariant matrix distance");
  distance->add_option("--a", dist_a, "model archive or matrix file")->required();
  distance->add_option("--b", dist_b, "model archive or matrix file")->required();
  distance->add_option("--matrix", dist_which, "A or C when reading archives")->capture_default_str();
  distance->add_flag("--amari", dist_amari, "also print the Amari error");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*fitc) return cmd_fit(fo, out);
    if (*predict) return cmd_predict(po, out);
    if (*sweep) return cmd_sweep(sweep_cfg, sweep_out, out);
    if (*select) return cmd_select_d(sel_data, sel_dmax, out);
    if (*distance) return cmd_distance(dist_a, dist_b, dist_amari, dist_which, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace mrsid::cli
