#include "fiddle/fiddle.h"

#include <cmath>
#include <memory>
#include <string>

#include <json.hpp>

#include "ate.hpp"
#include "benchmark.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "dgp.hpp"
#include "error.hpp"
#include "selftest.hpp"

namespace {

thread_local std::string g_last_error;

fiddle_status status_from(fiddle::ErrorCode code) {
  using fiddle::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return FIDDLE_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return FIDDLE_ERR_PARSE;
    case ErrorCode::Dimension: return FIDDLE_ERR_DIMENSION;
    case ErrorCode::DegenerateData: return FIDDLE_ERR_DEGENERATE_DATA;
    case ErrorCode::Io: return FIDDLE_ERR_IO;
    case ErrorCode::NonFinite: return FIDDLE_ERR_NON_FINITE;
    case ErrorCode::Internal: return FIDDLE_ERR_INTERNAL;
  }
  return FIDDLE_ERR_INTERNAL;
}

template <typename Fn>
fiddle_status guarded(Fn&& fn) {
  try {
    fn();
    return FIDDLE_OK;
  } catch (const fiddle::Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FIDDLE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return FIDDLE_ERR_INTERNAL;
  }
}

fiddle_status bad_argument(const char* message) {
  g_last_error = message;
  return FIDDLE_ERR_INVALID_ARGUMENT;
}

}  // namespace

struct fiddle_dataset {
  fiddle::Dataset data;
};

struct fiddle_config {
  fiddle::PipelineConfig cfg;
  mutable std::string json_cache;
  mutable std::string digest_cache;
};

struct fiddle_result {
  std::string json;
  std::string csv;     // benchmark runs only
  std::string models;  // serialized networks, fits only
  bool has_estimate = false;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

extern "C" {

const char* fiddle_version(void) { return "1.0.0"; }

const char* fiddle_last_error(void) { return g_last_error.c_str(); }

fiddle_status fiddle_dataset_from_csv(const char* path, fiddle_dataset** out) {
  if (!path || !out) return bad_argument("fiddle_dataset_from_csv: null argument");
  return guarded([&] {
    auto handle = std::make_unique<fiddle_dataset>();
    handle->data = fiddle::load_csv(path);
    *out = handle.release();
  });
}

fiddle_status fiddle_dataset_generate(const char* dgp_json, fiddle_dataset** out) {
  if (!out) return bad_argument("fiddle_dataset_generate: null out");
  return guarded([&] {
    fiddle::PipelineConfig probe;  // reuse the config parser for the dgp block
    if (dgp_json && *dgp_json) {
      const std::string wrapped = std::string("{\"dgp\":") + dgp_json + "}";
      probe = fiddle::config_from_json(wrapped, probe);
    }
    auto handle = std::make_unique<fiddle_dataset>();
    handle->data = fiddle::dgp::generate(probe.dgp).data;
    *out = handle.release();
  });
}

fiddle_status fiddle_dataset_to_csv(const fiddle_dataset* dataset, const char* path,
                                    int include_oracle) {
  if (!dataset || !path) return bad_argument("fiddle_dataset_to_csv: null argument");
  return guarded([&] { fiddle::save_csv(dataset->data, path, include_oracle != 0); });
}

int64_t fiddle_dataset_rows(const fiddle_dataset* dataset) {
  return dataset ? static_cast<int64_t>(dataset->data.n()) : -1;
}

int64_t fiddle_dataset_cols(const fiddle_dataset* dataset) {
  return dataset ? static_cast<int64_t>(dataset->data.p()) : -1;
}

void fiddle_dataset_free(fiddle_dataset* dataset) { delete dataset; }

fiddle_status fiddle_config_create(fiddle_config** out) {
  if (!out) return bad_argument("fiddle_config_create: null out");
  return guarded([&] { *out = new fiddle_config(); });
}

fiddle_status fiddle_config_update_json(fiddle_config* config, const char* json_text) {
  if (!config || !json_text) return bad_argument("fiddle_config_update_json: null argument");
  return guarded([&] {
    config->cfg = fiddle::config_from_json(json_text, config->cfg);
    config->json_cache.clear();
    config->digest_cache.clear();
  });
}

fiddle_status fiddle_config_apply_preset(fiddle_config* config, const char* name) {
  if (!config || !name) return bad_argument("fiddle_config_apply_preset: null argument");
  return guarded([&] {
    fiddle::apply_preset(config->cfg, name);
    config->json_cache.clear();
    config->digest_cache.clear();
  });
}

const char* fiddle_config_json(const fiddle_config* config) {
  if (!config) return nullptr;
  if (config->json_cache.empty()) config->json_cache = fiddle::config_to_json(config->cfg);
  return config->json_cache.c_str();
}

const char* fiddle_config_digest(const fiddle_config* config) {
  if (!config) return nullptr;
  if (config->digest_cache.empty())
    config->digest_cache = fiddle::config_digest(config->cfg);
  return config->digest_cache.c_str();
}

void fiddle_config_free(fiddle_config* config) { delete config; }

fiddle_status fiddle_fit(const fiddle_config* config, const fiddle_dataset* dataset,
                         fiddle_result** out) {
  if (!config || !dataset || !out) return bad_argument("fiddle_fit: null argument");
  return guarded([&] {
    const fiddle::ate::FitOutput fit = fiddle::ate::run_method(dataset->data, config->cfg);
    auto result = std::make_unique<fiddle_result>();
    result->json = fiddle::ate::result_to_json(fit.result);
    result->has_estimate = true;
    result->estimate = fit.result.estimate;
    result->ci_lo = fit.result.ci_lo;
    result->ci_hi = fit.result.ci_hi;
    if (fit.nuisance.mu0_model) {
      nlohmann::ordered_json models;
      models["mu0"] = nlohmann::json::parse(fiddle::nn::model_to_json(*fit.nuisance.mu0_model));
      models["mu1"] = nlohmann::json::parse(fiddle::nn::model_to_json(*fit.nuisance.mu1_model));
      models["pi"] = nlohmann::json::parse(fiddle::nn::model_to_json(*fit.nuisance.pi_model));
      result->models = models.dump();
    }
    *out = result.release();
  });
}

fiddle_status fiddle_benchmark(const fiddle_config* config, const char* grid_json,
                               int threads, fiddle_result** out) {
  if (!config || !out) return bad_argument("fiddle_benchmark: null argument");
  return guarded([&] {
    fiddle::bench::BenchmarkRequest req;
    req.base = config->cfg;
    req.ns = {req.base.dgp.n};
    req.ps = {req.base.dgp.p};
    req.methods = {req.base.method};
    if (grid_json && *grid_json) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(grid_json);
      } catch (const nlohmann::json::exception& e) {
        fiddle::fail(fiddle::ErrorCode::Parse,
                     std::string("benchmark grid: invalid JSON: ") + e.what());
      }
      if (j.contains("n")) req.ns = j.at("n").get<std::vector<std::size_t>>();
      if (j.contains("p")) req.ps = j.at("p").get<std::vector<std::size_t>>();
      if (j.contains("methods")) req.methods = j.at("methods").get<std::vector<std::string>>();
      if (j.contains("rep_offset")) req.rep_offset = j.at("rep_offset").get<std::size_t>();
    }
    const std::vector<fiddle::bench::BenchmarkRow> rows =
        fiddle::bench::run_benchmark(req, threads > 0 ? static_cast<std::size_t>(threads) : 0);
    auto result = std::make_unique<fiddle_result>();
    result->json = fiddle::bench::rows_to_json(rows, req.base);
    result->csv = fiddle::bench::rows_to_csv(rows);
    *out = result.release();
  });
}

fiddle_status fiddle_selftest(fiddle_result** out, int* all_passed) {
  if (!out) return bad_argument("fiddle_selftest: null out");
  return guarded([&] {
    const fiddle::selftest::SelftestReport report = fiddle::selftest::run_selftest();
    auto result = std::make_unique<fiddle_result>();
    result->json = fiddle::selftest::report_to_json(report);
    if (all_passed) *all_passed = report.all_passed ? 1 : 0;
    *out = result.release();
  });
}

const char* fiddle_result_json(const fiddle_result* result) {
  return result ? result->json.c_str() : nullptr;
}

const char* fiddle_result_csv(const fiddle_result* result) {
  return result && !result->csv.empty() ? result->csv.c_str() : nullptr;
}

fiddle_status fiddle_result_estimate(const fiddle_result* result, double* out) {
  if (!result || !out) return bad_argument("fiddle_result_estimate: null argument");
  if (!result->has_estimate) return bad_argument("fiddle_result_estimate: not a fit result");
  *out = result->estimate;
  return FIDDLE_OK;
}

fiddle_status fiddle_result_ci(const fiddle_result* result, double* lo, double* hi) {
  if (!result || !lo || !hi) return bad_argument("fiddle_result_ci: null argument");
  if (!result->has_estimate) return bad_argument("fiddle_result_ci: not a fit result");
  *lo = result->ci_lo;
  *hi = result->ci_hi;
  return FIDDLE_OK;
}

const char* fiddle_result_models_json(const fiddle_result* result) {
  return result && !result->models.empty() ? result->models.c_str() : nullptr;
}

void fiddle_result_free(fiddle_result* result) { delete result; }

}  // extern "C"
