#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "benchmark.hpp"
#include "config.hpp"
#include "error.hpp"

using fiddle::PipelineConfig;
namespace bench = fiddle::bench;

TEST_CASE("defaults follow the reference hyperparameters") {
  PipelineConfig cfg;
  CHECK(cfg.method == "fiddle");
  CHECK(cfg.m_pretrain == 50);
  CHECK(cfg.rbar == 10);
  CHECK(cfg.fastnn.depth == 4);
  CHECK(cfg.fastnn.width == 400);
  CHECK(cfg.fastnn.learning_rate == 0.001);
  CHECK(cfg.fastnn.epochs == 100);
  CHECK(cfg.fastnn.batch_size == 64);
  CHECK(cfg.fastnn.tau == 0.005);
  CHECK(cfg.lambda_from_rule);
  // lambda = 1.3 log(p) / n
  CHECK(cfg.resolve_lambda(500, 2000) ==
        doctest::Approx(1.3 * std::log(500.0) / 2000.0).epsilon(1e-12));
}

TEST_CASE("presets") {
  PipelineConfig desk;
  fiddle::apply_preset(desk, "desk");
  CHECK(desk.fastnn.width == 128);
  CHECK(desk.fastnn.epochs == 60);
  CHECK(desk.reps == 20);

  PipelineConfig paper;
  fiddle::apply_preset(paper, "paper");
  CHECK(paper.fastnn.width == 400);
  CHECK(paper.fastnn.epochs == 100);
  CHECK(paper.reps == 100);

  CHECK_THROWS_AS(fiddle::apply_preset(paper, "galactic"), fiddle::Error);
}

TEST_CASE("config JSON round trip, overlay and digest") {
  PipelineConfig base;
  const std::string text = fiddle::config_to_json(base);
  const PipelineConfig back = fiddle::config_from_json(text);
  CHECK(fiddle::config_to_json(back) == text);
  CHECK(fiddle::config_digest(back) == fiddle::config_digest(base));

  const PipelineConfig tweaked = fiddle::config_from_json(
      R"({"method":"oracle_ipw","seed":9,"fastnn":{"width":32},"dgp":{"n":100,"p":10}})",
      base);
  CHECK(tweaked.method == "oracle_ipw");
  CHECK(tweaked.seed == 9);
  CHECK(tweaked.fastnn.width == 32);
  CHECK(tweaked.fastnn.depth == 4);  // untouched key keeps its default
  CHECK(tweaked.dgp.n == 100);
  CHECK(fiddle::config_digest(tweaked) != fiddle::config_digest(base));

  // preset inside a document applies before explicit keys
  const PipelineConfig mixed =
      fiddle::config_from_json(R"({"preset":"desk","fastnn":{"epochs":10}})");
  CHECK(mixed.fastnn.width == 128);
  CHECK(mixed.fastnn.epochs == 10);

  CHECK_THROWS_AS(fiddle::config_from_json("{\"unknown_key\":1}"), fiddle::Error);
  CHECK_THROWS_AS(fiddle::config_from_json("{\"method\":\"nope\"}"), fiddle::Error);
  CHECK_THROWS_AS(fiddle::config_from_json("not json"), fiddle::Error);
}

TEST_CASE("benchmark on the oracle estimator") {
  bench::BenchmarkRequest req;
  req.base.method = "oracle_aipw";
  req.base.seed = 314;
  req.base.reps = 8;
  req.base.dgp.noise_sd = 0.5;
  req.ns = {400};
  req.ps = {10};
  req.methods = {"oracle_aipw"};

  const auto rows = bench::run_benchmark(req, 2);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].method == "oracle_aipw");
  CHECK(rows[0].n == 400);
  CHECK(rows[0].reps == 8);
  CHECK(rows[0].estimates.size() == 8);
  CHECK(rows[0].rmse < 0.6);
  CHECK(rows[0].rmse > 0.0);
  CHECK(rows[0].se >= 0.0);

  // deterministic regardless of thread count
  const auto serial = bench::run_benchmark(req, 1);
  CHECK(serial[0].estimates == rows[0].estimates);
  CHECK(serial[0].rmse == rows[0].rmse);

  // rmse definition: sqrt(mean (estimate - 5)^2)
  double sq = 0.0;
  for (double e : rows[0].estimates) sq += (e - 5.0) * (e - 5.0);
  CHECK(rows[0].rmse == doctest::Approx(std::sqrt(sq / 8.0)).epsilon(1e-12));
}

TEST_CASE("oracle IPW dispersion at full sample size") {
  bench::BenchmarkRequest req;
  req.base.method = "oracle_ipw";
  req.base.seed = 1618;
  req.base.reps = 100;
  req.ns = {5000};
  req.ps = {50};
  req.methods = {"oracle_ipw"};
  const auto rows = bench::run_benchmark(req, 2);
  CHECK(rows[0].rmse >= 0.3);
  CHECK(rows[0].rmse <= 0.6);
}

TEST_CASE("single noiseless replication: rmse equals the absolute error") {
  bench::BenchmarkRequest req;
  req.base.method = "oracle_aipw";
  req.base.seed = 99;
  req.base.reps = 1;
  req.base.dgp.noise_sd = 0.0;
  req.ns = {200};
  req.ps = {10};
  req.methods = {"oracle_aipw"};
  const auto rows = bench::run_benchmark(req, 1);
  REQUIRE(rows[0].estimates.size() == 1);
  CHECK(rows[0].rmse == doctest::Approx(std::abs(rows[0].estimates[0] - 5.0)).epsilon(1e-12));
  CHECK(rows[0].se == 0.0);
}

TEST_CASE("split seed ranges pool exactly") {
  bench::BenchmarkRequest full;
  full.base.method = "oracle_ipw";
  full.base.seed = 2718;
  full.base.reps = 10;
  full.ns = {300};
  full.ps = {10};
  full.methods = {"oracle_ipw"};
  const auto whole = bench::run_benchmark(full, 2);

  bench::BenchmarkRequest first = full, second = full;
  first.base.reps = 5;
  second.base.reps = 5;
  second.rep_offset = 5;
  const auto lo = bench::run_benchmark(first, 2);
  const auto hi = bench::run_benchmark(second, 2);

  std::vector<double> pooled = lo[0].estimates;
  pooled.insert(pooled.end(), hi[0].estimates.begin(), hi[0].estimates.end());
  CHECK(pooled == whole[0].estimates);

  const double pooled_rmse =
      std::sqrt((5.0 * lo[0].rmse * lo[0].rmse + 5.0 * hi[0].rmse * hi[0].rmse) / 10.0);
  CHECK(whole[0].rmse == doctest::Approx(pooled_rmse).epsilon(1e-12));
}

TEST_CASE("rows render to CSV and JSON") {
  bench::BenchmarkRow row;
  row.method = "fiddle";
  row.n = 100;
  row.p = 20;
  row.reps = 2;
  row.rmse = 0.5;
  row.se = 0.125;
  row.wallclock_s = 1.25;
  row.estimates = {4.9, 5.3};
  const std::string csv = bench::rows_to_csv({row});
  CHECK(csv.find("method,n,p,rmse,se,reps,wallclock") == 0);
  CHECK(csv.find("fiddle,100,20,0.5,0.125,2,1.25") != std::string::npos);

  PipelineConfig cfg;
  const auto j = nlohmann::json::parse(bench::rows_to_json({row}, cfg));
  CHECK(j.at("true_ate") == 5.0);
  CHECK(j.at("rows")[0].at("method") == "fiddle");
  CHECK(j.at("rows")[0].at("estimates").size() == 2);
  CHECK(j.at("config_digest") == fiddle::config_digest(cfg));
}

TEST_CASE("thread resolution respects the environment cap") {
  CHECK(bench::resolve_threads(3) == 3);
  setenv("FIDDLE_THREADS", "2", 1);
  CHECK(bench::resolve_threads(0) == 2);
  unsetenv("FIDDLE_THREADS");
  CHECK(bench::resolve_threads(0) >= 1);
}
