#pragma once

#include <optional>
#include <string>

#include "config.hpp"
#include "dataset.hpp"
#include "fastnn.hpp"

namespace fiddle::ate {

/// Per-observation nuisance estimates feeding the AIPW combiner.
struct NuisanceEstimates {
  std::vector<double> mu0_hat;
  std::vector<double> mu1_hat;
  std::vector<double> pi_hat;  // truncated, strictly inside (0, 1)
  std::optional<nn::FastNnModel> mu0_model;
  std::optional<nn::FastNnModel> mu1_model;
  std::optional<nn::FastNnModel> pi_model;
};

struct AteResult {
  std::string method;
  double estimate = 0.0;
  double sigma2_hat = 0.0;
  double ci_lo = 0.0;  // 95% plug-in interval
  double ci_hi = 0.0;
  std::size_t n_used = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
};

std::string result_to_json(const AteResult& result);

/// Clamp raw propensities to [1/log n, 1 - 1/log n] (natural log); requires
/// n >= 8 so the lower bound stays below 1/2.
std::vector<double> truncate_propensity(std::span<const double> pi_raw, std::size_t n);

/// The i-th AIPW term of the estimator sum.
std::vector<double> aipw_summands(std::span<const double> y, std::span<const int> t,
                                  std::span<const double> mu0_hat,
                                  std::span<const double> mu1_hat,
                                  std::span<const double> pi_hat);

double aipw(std::span<const double> y, std::span<const int> t,
            std::span<const double> mu0_hat, std::span<const double> mu1_hat,
            std::span<const double> pi_hat);

/// Empirical second moment of the estimated influence function:
/// (1/n) sum (summand_i - estimate)^2.
double plugin_variance(std::span<const double> y, std::span<const int> t,
                       std::span<const double> mu0_hat, std::span<const double> mu1_hat,
                       std::span<const double> pi_hat, double estimate);

AteResult oracle_ipw(const Dataset& data, const PipelineConfig& cfg);
AteResult oracle_aipw(const Dataset& data, const PipelineConfig& cfg);

struct FitOutput {
  AteResult result;
  NuisanceEstimates nuisance;
};

/// The full pipeline: pretraining split -> diversified projection -> factor
/// scores -> three trained networks -> propensity truncation -> AIPW with
/// plug-in variance. In raw mode the factor steps (and the pretraining split)
/// are dropped and the networks see the covariates directly.
FitOutput fit_fiddle(const Dataset& data, const PipelineConfig& cfg);

/// Baseline: same AIPW assembly with plain fully connected networks on raw
/// covariates under a squared-norm weight penalty.
FitOutput fit_vanilla_nn(const Dataset& data, const PipelineConfig& cfg);

/// Dispatch on cfg.method ("fiddle", "vanilla_nn", "oracle_ipw", "oracle_aipw").
FitOutput run_method(const Dataset& data, const PipelineConfig& cfg);

}  // namespace fiddle::ate
