#include "cli.hpp"
#include "mrsid/io.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <sstream>

using testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "mrsid");
  std::ostringstream out, err;
  const int code = mrsid::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("cli usage errors") {
  CHECK(run({}).code == mrsid::cli::kUsage);
  CHECK(run({"bogus"}).code == mrsid::cli::kUsage);
  CHECK(run({"--help"}).code == mrsid::cli::kOk);
  CHECK(run({"simulate", "--p", "5"}).code == mrsid::cli::kUsage);
  TempDir tmp;
  CHECK(run({"simulate", "--p", "5", "--d", "9", "--T", "10", "--out", tmp / "s"}).code == mrsid::cli::kUsage);
  CHECK(run({"fit", "--data", tmp / "missing.mat", "--d", "2"}).code == mrsid::cli::kDataError);
}

TEST_CASE("cli simulate and fit are deterministic") {
  TempDir tmp;
  for (const char* dir : {"a", "b"}) {
    const auto r = run({"simulate", "--p", "30", "--d", "3", "--T", "40", "--seed", "7", "--out", tmp / dir});
    REQUIRE(r.code == 0);
  }
  CHECK(testing::slurp(tmp / "a/Y.mat") == testing::slurp(tmp / "b/Y.mat"));
  CHECK(testing::slurp(tmp / "a/truth.json") == testing::slurp(tmp / "b/truth.json"));

  for (const char* name : {"m1.json", "m2.json"}) {
    const auto r = run({"fit", "--data", tmp / "a/Y.mat", "--d", "3", "--lambda-a", "0.01", "--max-iters", "10",
                        "--out", tmp / name});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("iterations") != std::string::npos);
  }
  CHECK(testing::slurp(tmp / "m1.json") == testing::slurp(tmp / "m2.json"));
  CHECK(std::filesystem::exists(tmp / "m1.json.report.txt"));

  const auto self = run({"distance", "--a", tmp / "m1.json", "--b", tmp / "m1.json", "--amari"});
  REQUIRE(self.code == 0);
  CHECK(self.out.find("distance: 0") != std::string::npos);
  CHECK(self.out.find("amari: 0") != std::string::npos);

  CHECK(run({"fit", "--data", tmp / "a/Y.mat", "--d", "50"}).code == mrsid::cli::kDataError);
  CHECK(run({"fit", "--data", tmp / "a/Y.mat", "--d", "3", "--r-before-c", "--penalty", "frobenius", "--lambda-c",
             "0.1", "--inner-tol", "0", "--out", tmp / "m3.json"})
            .code == 0);
  CHECK(run({"fit", "--data", tmp / "a/Y.mat", "--d", "3", "--penalty", "ridge"}).code == mrsid::cli::kUsage);
}

TEST_CASE("cli predict writes scores and bands") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--p", "20", "--d", "2", "--T", "30", "--format", "csv", "--out", tmp / "s"}).code == 0);
  REQUIRE(run({"fit", "--data", tmp / "s/Y.csv", "--d", "2", "--max-iters", "5", "--out", tmp / "m.json"}).code ==
          0);
  REQUIRE(run({"predict", "--model", tmp / "m.json", "--steps", "3", "--out", tmp / "p1"}).code == 0);

  // Scoring the model against its own forecast gives zero error.
  const auto p = run({"predict", "--model", tmp / "m.json", "--steps", "3", "--truth", tmp / "p1/predictions.csv",
                      "--baseline", "svd", "--subset", "0,1,2", "--out", tmp / "p2"});
  REQUIRE(p.code == 0);
  CHECK(p.out.find("mse: 0\n") != std::string::npos);
  const std::string scores = testing::slurp(tmp / "p2/scores.csv");
  CHECK(scores.rfind("step,mse,correlation,baseline_mse,baseline_correlation\n", 0) == 0);
  CHECK(testing::slurp(tmp / "p2/band.csv").rfind("step,mean,lower,upper,truth_mean\n", 0) == 0);
  CHECK(std::filesystem::exists(tmp / "p2/baseline_predictions.csv"));

  CHECK(run({"predict", "--model", tmp / "m.json", "--steps", "0", "--out", tmp / "p3"}).code == mrsid::cli::kUsage);
  CHECK(run({"predict", "--model", tmp / "m.json", "--steps", "5", "--truth", tmp / "p1/predictions.csv", "--out",
             tmp / "p3"})
            .code == mrsid::cli::kUsage);
  CHECK(run({"predict", "--model", tmp / "m.json", "--steps", "2", "--subset", "0,99", "--out", tmp / "p3"}).code ==
        mrsid::cli::kUsage);
  // rejected commands write nothing
  CHECK_FALSE(std::filesystem::exists(tmp / "p3"));
}

TEST_CASE("cli select-d and sweep") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--p", "25", "--d", "2", "--T", "40", "--out", tmp / "s"}).code == 0);
  const auto sel = run({"select-d", "--data", tmp / "s/Y.mat", "--d-max", "10"});
  REQUIRE(sel.code == 0);
  CHECK(sel.out.rfind("d: ", 0) == 0);

  testing::spit(tmp / "sweep.cfg", "data = " + (tmp / "s/Y.mat") + "\nd = 2\nmax_em_iters = 5\n"
                                    "lambda_a = 1e-3, 1e-1\nlambda_c = 1e-3, 1e-1\nhorizon = 4\ntruth = " +
                                        (tmp / "s/truth.json") + "\n");
  const auto sw = run({"sweep", "--config", tmp / "sweep.cfg", "--out", tmp / "sweep.csv"});
  REQUIRE(sw.code == 0);
  const std::string csv = testing::slurp(tmp / "sweep.csv");
  CHECK(csv.rfind("index,lambda_a,lambda_c,ok,mse,correlation,objective,iterations,distance_a,distance_c,error", 0) ==
        0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
