#include "ate.hpp"

#include <cmath>

#include <json.hpp>

#include "error.hpp"
#include "factor.hpp"

namespace fiddle::ate {

namespace {

constexpr double kNormal975 = 1.96;

void attach_ci(AteResult& r) {
  const double half =
      kNormal975 * std::sqrt(r.sigma2_hat / static_cast<double>(r.n_used));
  r.ci_lo = r.estimate - half;
  r.ci_hi = r.estimate + half;
}

void require_aligned(std::span<const double> y, std::span<const int> t,
                     std::span<const double> a, std::span<const double> b,
                     std::span<const double> pi) {
  require(y.size() == t.size() && y.size() == a.size() && y.size() == b.size() &&
              y.size() == pi.size(),
          ErrorCode::Dimension, "aipw: input length mismatch");
  require(!y.empty(), ErrorCode::InvalidArgument, "aipw: empty input");
}

double mean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double second_moment_about(std::span<const double> v, double center) {
  double acc = 0.0;
  for (double x : v) acc += (x - center) * (x - center);
  return acc / static_cast<double>(v.size());
}

}  // namespace

std::string result_to_json(const AteResult& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["estimate"] = r.estimate;
  j["sigma2"] = r.sigma2_hat;
  j["ci"] = {r.ci_lo, r.ci_hi};
  j["n"] = r.n_used;
  j["seed"] = r.seed;
  j["config_digest"] = r.config_digest;
  return j.dump();
}

std::vector<double> truncate_propensity(std::span<const double> pi_raw, std::size_t n) {
  require(n >= 8, ErrorCode::InvalidArgument,
          "truncate_propensity: n too small, 1/log n must stay below 1/2");
  const double alpha = 1.0 / std::log(static_cast<double>(n));
  std::vector<double> out(pi_raw.begin(), pi_raw.end());
  for (double& v : out) v = std::max(alpha, std::min(v, 1.0 - alpha));
  return out;
}

std::vector<double> aipw_summands(std::span<const double> y, std::span<const int> t,
                                  std::span<const double> mu0_hat,
                                  std::span<const double> mu1_hat,
                                  std::span<const double> pi_hat) {
  require_aligned(y, t, mu0_hat, mu1_hat, pi_hat);
  std::vector<double> psi(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double pi = pi_hat[i];
    require(pi > 0.0 && pi < 1.0, ErrorCode::InvalidArgument,
            "aipw: propensity at the 0/1 boundary");
    require(t[i] == 0 || t[i] == 1, ErrorCode::InvalidArgument, "aipw: T must be 0/1");
    const double ti = static_cast<double>(t[i]);
    psi[i] = ti * y[i] / pi - (1.0 - ti) * y[i] / (1.0 - pi) -
             (ti - pi) * (mu1_hat[i] / pi + mu0_hat[i] / (1.0 - pi));
  }
  num::check_finite(std::span<const double>(psi), "aipw summands");
  return psi;
}

double aipw(std::span<const double> y, std::span<const int> t,
            std::span<const double> mu0_hat, std::span<const double> mu1_hat,
            std::span<const double> pi_hat) {
  return mean(aipw_summands(y, t, mu0_hat, mu1_hat, pi_hat));
}

double plugin_variance(std::span<const double> y, std::span<const int> t,
                       std::span<const double> mu0_hat, std::span<const double> mu1_hat,
                       std::span<const double> pi_hat, double estimate) {
  return second_moment_about(aipw_summands(y, t, mu0_hat, mu1_hat, pi_hat), estimate);
}

AteResult oracle_ipw(const Dataset& data, const PipelineConfig& cfg) {
  require(data.has_pi_star(), ErrorCode::InvalidArgument,
          "oracle_ipw: dataset lacks the pi_star column");
  std::vector<double> psi(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double pi = data.pi_star[i];
    require(pi > 0.0 && pi < 1.0, ErrorCode::InvalidArgument,
            "oracle_ipw: degenerate true propensity");
    const double ti = static_cast<double>(data.t[i]);
    psi[i] = ti * data.y[i] / pi - (1.0 - ti) * data.y[i] / (1.0 - pi);
  }
  AteResult r;
  r.method = "oracle_ipw";
  r.estimate = mean(psi);
  r.sigma2_hat = second_moment_about(psi, r.estimate);
  r.n_used = data.n();
  r.seed = cfg.seed;
  r.config_digest = config_digest(cfg);
  attach_ci(r);
  return r;
}

AteResult oracle_aipw(const Dataset& data, const PipelineConfig& cfg) {
  require(data.has_pi_star() && data.has_outcome_oracles(), ErrorCode::InvalidArgument,
          "oracle_aipw: dataset lacks pi_star/mu0_star/mu1_star columns");
  AteResult r;
  r.method = "oracle_aipw";
  r.estimate = aipw(data.y, data.t, data.mu0_star, data.mu1_star, data.pi_star);
  r.sigma2_hat =
      plugin_variance(data.y, data.t, data.mu0_star, data.mu1_star, data.pi_star, r.estimate);
  r.n_used = data.n();
  r.seed = cfg.seed;
  r.config_digest = config_digest(cfg);
  attach_ci(r);
  return r;
}

namespace {

/// Shared assembly once the three networks are trained: predictions on the
/// fit set, propensity truncation, AIPW and plug-in variance.
FitOutput assemble(const Dataset& fit_data, const num::Matrix& net_inputs,
                   const num::Matrix& net_covariates, const PipelineConfig& cfg,
                   const nn::FastNnConfig& base_net, const std::string& label) {
  require(fit_data.n_treated() > 0 && fit_data.n_control() > 0, ErrorCode::DegenerateData,
          label + ": both treatment classes required after the pretraining split");

  nn::FastNnConfig net0 = base_net;
  net0.seed = num::SeededRng::derive(cfg.seed, 11);
  nn::FastNnConfig net1 = base_net;
  net1.seed = num::SeededRng::derive(cfg.seed, 12);
  nn::FastNnConfig net2 = base_net;
  net2.seed = num::SeededRng::derive(cfg.seed, 13);
  net2.trunc_level = 1.0;  // propensity outputs live in [-1, 1] before clamping

  auto [m0, rep0] = nn::train_outcome(fit_data, net_inputs, 0, net0);
  auto [m1, rep1] = nn::train_outcome(fit_data, net_inputs, 1, net1);
  auto [m2, rep2] = nn::train_propensity(fit_data, net_inputs, net2);

  FitOutput out;
  out.nuisance.mu0_hat = nn::predict(m0, net_inputs, net_covariates);
  out.nuisance.mu1_hat = nn::predict(m1, net_inputs, net_covariates);
  const std::vector<double> pi_raw = nn::predict(m2, net_inputs, net_covariates);
  out.nuisance.pi_hat = truncate_propensity(pi_raw, fit_data.n());

  AteResult& r = out.result;
  r.method = label;
  r.estimate = aipw(fit_data.y, fit_data.t, out.nuisance.mu0_hat, out.nuisance.mu1_hat,
                    out.nuisance.pi_hat);
  r.sigma2_hat = plugin_variance(fit_data.y, fit_data.t, out.nuisance.mu0_hat,
                                 out.nuisance.mu1_hat, out.nuisance.pi_hat, r.estimate);
  r.n_used = fit_data.n();
  r.seed = cfg.seed;
  r.config_digest = config_digest(cfg);
  attach_ci(r);

  out.nuisance.mu0_model = std::move(m0);
  out.nuisance.mu1_model = std::move(m1);
  out.nuisance.pi_model = std::move(m2);
  return out;
}

}  // namespace

FitOutput fit_fiddle(const Dataset& data, const PipelineConfig& cfg) {
  cfg.validate();
  data.validate();

  if (cfg.fastnn.mode == nn::Mode::kRaw) {
    // Low-dimensional variant: no factor augmentation, no pretraining split,
    // no selection penalty.
    nn::FastNnConfig net = cfg.fastnn;
    net.lambda = 0.0;
    const num::Matrix empty;
    return assemble(data, data.x, empty, cfg, net, "fiddle");
  }

  require(cfg.m_pretrain < data.n(), ErrorCode::InvalidArgument,
          "fit_fiddle: pretraining size must be below n");
  require(cfg.rbar <= cfg.m_pretrain, ErrorCode::InvalidArgument,
          "fit_fiddle: rbar cannot exceed the pretraining size");

  num::SeededRng split_rng(num::SeededRng::derive(cfg.seed, 10));
  factor::SplitDataset split = factor::split_pretrain(data, cfg.m_pretrain, split_rng);
  const factor::DpMatrix dp = factor::build_dp_matrix(split.pretrain_x, cfg.rbar);
  const factor::FactorScores scores = factor::extract_factors(dp, split.estimation.x);

  nn::FastNnConfig net = cfg.fastnn;
  net.rbar = cfg.rbar;
  net.lambda = cfg.resolve_lambda(data.p(), split.estimation.n());
  return assemble(split.estimation, scores.scores, split.estimation.x, cfg, net, "fiddle");
}

FitOutput fit_vanilla_nn(const Dataset& data, const PipelineConfig& cfg) {
  cfg.validate();
  data.validate();
  nn::FastNnConfig net = cfg.fastnn;
  net.mode = nn::Mode::kRaw;
  net.lambda = 0.0;
  net.l2_weight = net.l2_weight > 0.0 ? net.l2_weight : 1.0;
  const num::Matrix empty;
  return assemble(data, data.x, empty, cfg, net, "vanilla_nn");
}

FitOutput run_method(const Dataset& data, const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.method == "fiddle") return fit_fiddle(data, cfg);
  if (cfg.method == "vanilla_nn") return fit_vanilla_nn(data, cfg);
  FitOutput out;
  if (cfg.method == "oracle_ipw") {
    out.result = oracle_ipw(data, cfg);
    return out;
  }
  out.result = oracle_aipw(data, cfg);
  return out;
}

}  // namespace fiddle::ate
