#include "mrsid/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace mrsid::io {

namespace {

using nlohmann::json;

constexpr const char* kArchiveFormat = "mrsid-model";

json matrix_json(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw IoError("refusing to archive a non-finite matrix");
  json data = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols)
    throw IoError("matrix entry has inconsistent shape");
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)].get<double>();
  return m;
}

json vector_json(const Eigen::VectorXd& v) {
  if (!v.allFinite()) throw IoError("refusing to archive a non-finite vector");
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

json finite_list(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) {
    if (!std::isfinite(x)) throw IoError("refusing to archive a non-finite trace value");
    out.push_back(x);
  }
  return out;
}

const char* penalty_name(CPenalty p) { return p == CPenalty::kWhitened ? "whitened" : "frobenius"; }

CPenalty penalty_from(const std::string& s) {
  if (s == "whitened") return CPenalty::kWhitened;
  if (s == "frobenius") return CPenalty::kFrobenius;
  throw IoError("unknown C penalty '" + s + "'");
}

}  // namespace

ModelArchive make_archive(const FitReport<double>& report, const Hyperparams& hp, Index T, Provenance prov) {
  ModelArchive ar;
  ar.p = report.params.obs_dim();
  ar.d = report.params.state_dim();
  ar.T = T;
  ar.hyperparams = hp;
  ar.params = report.params;
  ar.objective_trace = report.objective_trace;
  ar.expected_objective_trace = report.expected_objective_trace;
  ar.initial_objective = report.initial_objective;
  ar.iterations_run = report.iterations_run;
  ar.converged = report.converged;
  ar.x_last = report.moments.x_hat.col(report.moments.T());
  ar.v_last = report.moments.covariance(report.moments.T());
  const auto& init = report.initialization;
  if (init.latent.cols() > 0)
    ar.baseline = Baseline{init.params.a, init.params.c, init.latent.col(init.latent.cols() - 1)};
  ar.provenance = std::move(prov);
  return ar;
}

ModelArchive make_archive(const LdsParamsd& params, Index T, Provenance prov) {
  ModelArchive ar;
  ar.p = params.obs_dim();
  ar.d = params.state_dim();
  ar.T = T;
  ar.hyperparams.d = ar.d;
  ar.params = params;
  ar.x_last = Eigen::VectorXd::Zero(ar.d);
  ar.v_last = Eigen::MatrixXd::Zero(ar.d, ar.d);
  ar.provenance = std::move(prov);
  return ar;
}

std::string archive_to_string(const ModelArchive& ar) {
  const auto& hp = ar.hyperparams;
  json j;
  j["format"] = kArchiveFormat;
  j["format_version"] = ar.format_version;
  j["p"] = ar.p;
  j["d"] = ar.d;
  j["T"] = ar.T;
  j["hyperparams"] = {{"lambda_a", hp.lambda_a},         {"lambda_c", hp.lambda_c},
                      {"d", hp.d},                       {"max_em_iters", hp.max_em_iters},
                      {"max_inner_iters", hp.max_inner_iters}, {"em_tol", hp.em_tol},
                      {"inner_tol", hp.inner_tol},       {"c_penalty", penalty_name(hp.c_penalty)},
                      {"r_uses_new_c", hp.r_uses_new_c}};
  j["params"] = {{"A", matrix_json(ar.params.a)},
                 {"C", matrix_json(ar.params.c)},
                 {"R_diag", vector_json(ar.params.r_diag)},
                 {"pi0", vector_json(ar.params.pi0)}};
  j["objective_trace"] = finite_list(ar.objective_trace);
  j["expected_objective_trace"] = finite_list(ar.expected_objective_trace);
  j["initial_objective"] = ar.initial_objective;
  j["iterations_run"] = ar.iterations_run;
  j["converged"] = ar.converged;
  j["state"] = {{"x_T", vector_json(ar.x_last)}, {"V_T", matrix_json(ar.v_last)}};
  if (ar.baseline)
    j["baseline"] = {{"A", matrix_json(ar.baseline->a)},
                     {"C", matrix_json(ar.baseline->c)},
                     {"x_T", vector_json(ar.baseline->x_last)}};
  json prov = {{"tool", ar.provenance.tool},
               {"tool_version", ar.provenance.tool_version},
               {"command", ar.provenance.command}};
  prov["seed"] = ar.provenance.seed ? json(*ar.provenance.seed) : json(nullptr);
  j["provenance"] = std::move(prov);
  return j.dump(1);
}

ModelArchive archive_from_string(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kArchiveFormat) throw IoError("not a model archive");
    ModelArchive ar;
    ar.format_version = j.at("format_version").get<int>();
    if (ar.format_version != 1) throw IoError("unsupported archive version " + std::to_string(ar.format_version));
    ar.p = j.at("p").get<Index>();
    ar.d = j.at("d").get<Index>();
    ar.T = j.at("T").get<Index>();
    const auto& h = j.at("hyperparams");
    auto& hp = ar.hyperparams;
    hp.lambda_a = h.at("lambda_a").get<double>();
    hp.lambda_c = h.at("lambda_c").get<double>();
    hp.d = h.at("d").get<Index>();
    hp.max_em_iters = h.at("max_em_iters").get<int>();
    hp.max_inner_iters = h.at("max_inner_iters").get<int>();
    hp.em_tol = h.at("em_tol").get<double>();
    hp.inner_tol = h.at("inner_tol").get<double>();
    hp.c_penalty = penalty_from(h.at("c_penalty").get<std::string>());
    hp.r_uses_new_c = h.at("r_uses_new_c").get<bool>();
    const auto& pj = j.at("params");
    ar.params.a = matrix_from(pj.at("A"));
    ar.params.c = matrix_from(pj.at("C"));
    ar.params.r_diag = vector_from(pj.at("R_diag"));
    ar.params.pi0 = vector_from(pj.at("pi0"));
    ar.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    ar.expected_objective_trace = j.at("expected_objective_trace").get<std::vector<double>>();
    ar.initial_objective = j.at("initial_objective").get<double>();
    ar.iterations_run = j.at("iterations_run").get<int>();
    ar.converged = j.at("converged").get<bool>();
    ar.x_last = vector_from(j.at("state").at("x_T"));
    ar.v_last = matrix_from(j.at("state").at("V_T"));
    if (j.contains("baseline")) {
      const auto& b = j.at("baseline");
      ar.baseline = Baseline{matrix_from(b.at("A")), matrix_from(b.at("C")), vector_from(b.at("x_T"))};
    }
    const auto& pv = j.at("provenance");
    ar.provenance.tool = pv.at("tool").get<std::string>();
    ar.provenance.tool_version = pv.at("tool_version").get<std::string>();
    ar.provenance.command = pv.at("command").get<std::string>();
    if (!pv.at("seed").is_null()) ar.provenance.seed = pv.at("seed").get<std::uint64_t>();

    if (ar.params.a.rows() != ar.d || ar.params.c.rows() != ar.p || ar.params.c.cols() != ar.d ||
        ar.params.r_diag.size() != ar.p || ar.params.pi0.size() != ar.d)
      throw IoError("archive parameter shapes disagree with p, d");
    return ar;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model archive: ") + e.what());
  }
}

void save_archive(const std::string& path, const ModelArchive& archive) {
  const std::string text = archive_to_string(archive);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << text << '\n';
  if (!os) throw IoError("write failed for " + path);
}

ModelArchive load_archive(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return archive_from_string(ss.str());
}

}  // namespace mrsid::io
