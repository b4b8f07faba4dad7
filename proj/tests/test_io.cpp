#include "mrsid/io.hpp"
#include "mrsid/mrsid.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <limits>

using namespace mrsid;
using Eigen::MatrixXd;
using testing::TempDir;

TEST_CASE("binary matrix round trip is exact") {
  TempDir tmp;
  std::mt19937_64 rng(1);
  MatrixXd m = oracle::gaussian(rng, 7, 5);
  m(0, 0) = 1e-310;
  m(1, 1) = -0.0;
  m(2, 2) = std::numeric_limits<double>::max();
  io::write_matrix(tmp / "m.mat", m);
  const MatrixXd back = io::read_matrix(tmp / "m.mat");
  CHECK(back == m);
  CHECK(std::filesystem::file_size(tmp / "m.mat") == 32 + 8 * 35);
}

TEST_CASE("csv matrix round trip is exact") {
  TempDir tmp;
  std::mt19937_64 rng(2);
  const MatrixXd m = oracle::gaussian(rng, 4, 9, 1e5);
  io::write_matrix(tmp / "m.csv", m);
  CHECK(io::read_matrix(tmp / "m.csv") == m);
}

TEST_CASE("matrix readers reject malformed input") {
  TempDir tmp;
  testing::spit(tmp / "bad.mat", "NOTAMATRIX-----------------------------------");
  CHECK_THROWS_AS(io::read_matrix(tmp / "bad.mat"), io::IoError);
  CHECK_THROWS_AS(io::read_matrix(tmp / "missing.mat"), io::IoError);
  io::write_matrix(tmp / "short.mat", MatrixXd::Ones(3, 3));
  std::string bytes = testing::slurp(tmp / "short.mat");
  bytes.resize(bytes.size() - 8);
  testing::spit(tmp / "short.mat", bytes);
  CHECK_THROWS_AS(io::read_matrix(tmp / "short.mat"), io::IoError);
  testing::spit(tmp / "ragged.csv", "1,2,3\n4,5\n");
  CHECK_THROWS_AS(io::read_matrix(tmp / "ragged.csv"), io::IoError);
  testing::spit(tmp / "text.csv", "1,x\n");
  CHECK_THROWS_AS(io::read_matrix(tmp / "text.csv"), io::IoError);
}

TEST_CASE("config parsing") {
  const auto cfg = io::KeyValueConfig::parse("# comment\n data = y.mat \n\nlambda_a = 1e-3, 1e-2 1e-1  # trailing\nd=4\n");
  CHECK(cfg.get("data") == "y.mat");
  CHECK(cfg.get_int("d", 0) == 4);
  CHECK(cfg.get_list("lambda_a") == std::vector<double>{1e-3, 1e-2, 1e-1});
  CHECK(cfg.get_double("missing", 2.5) == 2.5);
  CHECK(cfg.get_or("missing", "x") == "x");
  CHECK_THROWS_AS(cfg.get("missing"), io::IoError);
  CHECK_THROWS_AS(io::KeyValueConfig::parse("no equals sign"), io::IoError);
  CHECK_THROWS_AS(io::KeyValueConfig::parse("d = four").get_int("d", 0), io::IoError);
}

TEST_CASE("archive round trip reproduces every value") {
  SimConfig cfg;
  cfg.p = 20;
  cfg.d = 3;
  cfg.T = 30;
  const auto truth = generate_params<double>(cfg);
  const auto obs = simulate_series(truth, cfg.T, 9).second;
  Hyperparams hp;
  hp.d = 3;
  hp.lambda_a = 0.01;
  hp.max_em_iters = 5;
  const auto report = fit(obs, hp);
  io::Provenance prov;
  prov.tool_version = "test";
  prov.command = "fit --d 3";
  const auto ar = io::make_archive(report, hp, cfg.T, prov);
  CHECK(ar.baseline.has_value());
  const std::string text = io::archive_to_string(ar);
  const auto back = io::archive_from_string(text);
  CHECK(back.params.a == ar.params.a);
  CHECK(back.params.c == ar.params.c);
  CHECK(back.params.r_diag == ar.params.r_diag);
  CHECK(back.params.pi0 == ar.params.pi0);
  CHECK(back.x_last == ar.x_last);
  CHECK(back.v_last == ar.v_last);
  CHECK(back.objective_trace == ar.objective_trace);
  CHECK(back.expected_objective_trace == ar.expected_objective_trace);
  CHECK(back.baseline->a == ar.baseline->a);
  CHECK(back.baseline->x_last == ar.baseline->x_last);
  CHECK(back.hyperparams.lambda_a == hp.lambda_a);
  CHECK(back.iterations_run == ar.iterations_run);
  CHECK(back.provenance.command == prov.command);
  CHECK(io::archive_to_string(back) == text);

  TempDir tmp;
  io::save_archive(tmp / "m.json", ar);
  CHECK(io::archive_to_string(io::load_archive(tmp / "m.json")) == text);
}

TEST_CASE("archive loader rejects broken documents") {
  CHECK_THROWS_AS(io::archive_from_string("{not json"), io::IoError);
  CHECK_THROWS_AS(io::archive_from_string("{\"format_version\": 99}"), io::IoError);
}
