#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <string>

#include <json.hpp>

#include "fiddle/fiddle.h"

using nlohmann::json;

namespace {

struct Cleanup {
  std::string path;
  ~Cleanup() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("version and error text are always available") {
  CHECK(std::string(fiddle_version()) == "1.0.0");
  CHECK(fiddle_last_error() != nullptr);
}

TEST_CASE("dataset generate, export, reload") {
  fiddle_dataset* data = nullptr;
  REQUIRE(fiddle_dataset_generate(R"({"n":150,"p":9,"seed":11})", &data) == FIDDLE_OK);
  CHECK(fiddle_dataset_rows(data) == 150);
  CHECK(fiddle_dataset_cols(data) == 9);

  Cleanup tmp{"/tmp/fiddle_capi_roundtrip.csv"};
  REQUIRE(fiddle_dataset_to_csv(data, tmp.path.c_str(), 1) == FIDDLE_OK);

  fiddle_dataset* back = nullptr;
  REQUIRE(fiddle_dataset_from_csv(tmp.path.c_str(), &back) == FIDDLE_OK);
  CHECK(fiddle_dataset_rows(back) == 150);
  CHECK(fiddle_dataset_cols(back) == 9);

  fiddle_dataset_free(data);
  fiddle_dataset_free(back);

  fiddle_dataset* bad = nullptr;
  CHECK(fiddle_dataset_generate("{\"n\":0}", &bad) == FIDDLE_ERR_INVALID_ARGUMENT);
  CHECK(std::string(fiddle_last_error()).find("n must be") != std::string::npos);
  CHECK(fiddle_dataset_from_csv("/nope/missing.csv", &bad) == FIDDLE_ERR_IO);
}

TEST_CASE("config lifecycle") {
  fiddle_config* cfg = nullptr;
  REQUIRE(fiddle_config_create(&cfg) == FIDDLE_OK);

  const json defaults = json::parse(fiddle_config_json(cfg));
  CHECK(defaults.at("method") == "fiddle");
  CHECK(defaults.at("fastnn").at("width") == 400);

  CHECK(fiddle_config_apply_preset(cfg, "desk") == FIDDLE_OK);
  CHECK(json::parse(fiddle_config_json(cfg)).at("fastnn").at("width") == 128);

  CHECK(fiddle_config_update_json(cfg, R"({"seed":42,"method":"oracle_aipw"})") == FIDDLE_OK);
  const json updated = json::parse(fiddle_config_json(cfg));
  CHECK(updated.at("seed") == 42);
  CHECK(updated.at("method") == "oracle_aipw");
  CHECK(std::string(fiddle_config_digest(cfg)).size() == 16);

  CHECK(fiddle_config_update_json(cfg, "{\"garbage\":1}") == FIDDLE_ERR_PARSE);
  CHECK(fiddle_config_apply_preset(cfg, "lunar") == FIDDLE_ERR_INVALID_ARGUMENT);
  fiddle_config_free(cfg);
}

TEST_CASE("fit through the C surface with determinism") {
  fiddle_dataset* data = nullptr;
  REQUIRE(fiddle_dataset_generate(R"({"n":250,"p":20,"seed":5})", &data) == FIDDLE_OK);

  fiddle_config* cfg = nullptr;
  REQUIRE(fiddle_config_create(&cfg) == FIDDLE_OK);
  REQUIRE(fiddle_config_update_json(
              cfg, R"({"seed":7,"m_pretrain":20,"rbar":5,"fastnn":{"width":12,"epochs":3}})") ==
          FIDDLE_OK);

  fiddle_result* r1 = nullptr;
  fiddle_result* r2 = nullptr;
  REQUIRE(fiddle_fit(cfg, data, &r1) == FIDDLE_OK);
  REQUIRE(fiddle_fit(cfg, data, &r2) == FIDDLE_OK);
  CHECK(std::string(fiddle_result_json(r1)) == fiddle_result_json(r2));
  CHECK(fiddle_result_csv(r1) == nullptr);

  double est = 0.0, lo = 0.0, hi = 0.0;
  REQUIRE(fiddle_result_estimate(r1, &est) == FIDDLE_OK);
  REQUIRE(fiddle_result_ci(r1, &lo, &hi) == FIDDLE_OK);
  CHECK(lo <= est);
  CHECK(est <= hi);

  const json rj = json::parse(fiddle_result_json(r1));
  CHECK(rj.at("method") == "fiddle");
  CHECK(rj.at("n") == 230);  // 250 - 20 pretraining rows
  CHECK(rj.at("config_digest") == fiddle_config_digest(cfg));

  // trained networks are serialized and versioned
  const char* models = fiddle_result_models_json(r1);
  REQUIRE(models != nullptr);
  const json mj = json::parse(models);
  CHECK(mj.at("mu0").at("format") == "fastnn");
  CHECK(mj.at("pi").at("version") == 1);

  fiddle_result_free(r1);
  fiddle_result_free(r2);

  // oracle method requires oracle columns; this dataset has them
  REQUIRE(fiddle_config_update_json(cfg, R"({"method":"oracle_aipw"})") == FIDDLE_OK);
  fiddle_result* r3 = nullptr;
  REQUIRE(fiddle_fit(cfg, data, &r3) == FIDDLE_OK);
  CHECK(fiddle_result_models_json(r3) == nullptr);
  fiddle_result_free(r3);

  fiddle_config_free(cfg);
  fiddle_dataset_free(data);
}

TEST_CASE("oracle fit without oracle columns fails cleanly") {
  fiddle_dataset* data = nullptr;
  REQUIRE(fiddle_dataset_generate(R"({"n":60,"p":8,"seed":2})", &data) == FIDDLE_OK);
  Cleanup tmp{"/tmp/fiddle_capi_plain.csv"};
  REQUIRE(fiddle_dataset_to_csv(data, tmp.path.c_str(), 0) == FIDDLE_OK);
  fiddle_dataset* plain = nullptr;
  REQUIRE(fiddle_dataset_from_csv(tmp.path.c_str(), &plain) == FIDDLE_OK);

  fiddle_config* cfg = nullptr;
  REQUIRE(fiddle_config_create(&cfg) == FIDDLE_OK);
  REQUIRE(fiddle_config_update_json(cfg, R"({"method":"oracle_ipw"})") == FIDDLE_OK);
  fiddle_result* result = nullptr;
  CHECK(fiddle_fit(cfg, plain, &result) == FIDDLE_ERR_INVALID_ARGUMENT);
  CHECK(std::string(fiddle_last_error()).find("pi_star") != std::string::npos);

  fiddle_config_free(cfg);
  fiddle_dataset_free(data);
  fiddle_dataset_free(plain);
}

TEST_CASE("benchmark through the C surface") {
  fiddle_config* cfg = nullptr;
  REQUIRE(fiddle_config_create(&cfg) == FIDDLE_OK);
  REQUIRE(fiddle_config_update_json(cfg, R"({"seed":77,"reps":4})") == FIDDLE_OK);

  fiddle_result* result = nullptr;
  REQUIRE(fiddle_benchmark(cfg, R"({"n":[300],"p":[10],"methods":["oracle_aipw","oracle_ipw"]})",
                           2, &result) == FIDDLE_OK);
  const char* csv = fiddle_result_csv(result);
  REQUIRE(csv != nullptr);
  CHECK(std::string(csv).find("method,n,p,rmse,se,reps,wallclock") == 0);

  const json j = json::parse(fiddle_result_json(result));
  REQUIRE(j.at("rows").size() == 2);
  CHECK(j.at("rows")[0].at("reps") == 4);
  fiddle_result_free(result);

  CHECK(fiddle_benchmark(cfg, "{\"n\":[", 1, &result) == FIDDLE_ERR_PARSE);
  fiddle_config_free(cfg);
}

TEST_CASE("selftest through the C surface") {
  fiddle_result* result = nullptr;
  int ok = 0;
  REQUIRE(fiddle_selftest(&result, &ok) == FIDDLE_OK);
  CHECK(ok == 1);
  const json j = json::parse(fiddle_result_json(result));
  CHECK(j.at("all_passed") == true);
  CHECK(j.at("checks").size() >= 6);
  fiddle_result_free(result);
}

TEST_CASE("null arguments are rejected, not crashed on") {
  CHECK(fiddle_dataset_from_csv(nullptr, nullptr) == FIDDLE_ERR_INVALID_ARGUMENT);
  CHECK(fiddle_fit(nullptr, nullptr, nullptr) == FIDDLE_ERR_INVALID_ARGUMENT);
  CHECK(fiddle_result_json(nullptr) == nullptr);
  CHECK(fiddle_dataset_rows(nullptr) == -1);
  fiddle_dataset_free(nullptr);
  fiddle_config_free(nullptr);
  fiddle_result_free(nullptr);
}
