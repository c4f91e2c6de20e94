#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "ate.hpp"
#include "dgp.hpp"
#include "error.hpp"
#include "rng.hpp"

using fiddle::PipelineConfig;
using fiddle::num::SeededRng;
namespace ate = fiddle::ate;
namespace dgp = fiddle::dgp;

TEST_CASE("truncate_propensity bounds and errors") {
  const std::size_t n = 22026;  // ~ e^10, clamp at 1 - 1/10
  auto out = ate::truncate_propensity(std::vector<double>{0.95, 0.5, 0.01}, n);
  CHECK(out[0] == doctest::Approx(1.0 - 1.0 / std::log(22026.0)).epsilon(1e-12));
  CHECK(out[0] == doctest::Approx(0.9).epsilon(1e-4));
  CHECK(out[1] == 0.5);
  CHECK(out[2] == doctest::Approx(1.0 / std::log(22026.0)).epsilon(1e-12));

  auto tight = ate::truncate_propensity(std::vector<double>{0.99}, 1000);
  CHECK(tight[0] == doctest::Approx(1.0 - 1.0 / std::log(1000.0)).epsilon(1e-12));
  CHECK(tight[0] == doctest::Approx(0.8552351).epsilon(1e-6));

  CHECK_THROWS_AS(ate::truncate_propensity(std::vector<double>{0.5}, 7), fiddle::Error);
}

TEST_CASE("aipw hand example and symmetric cancellation") {
  const std::vector<double> y = {3.0, 1.0};
  const std::vector<int> t = {1, 0};
  const std::vector<double> pi = {0.4, 0.8};
  const std::vector<double> mu1 = {1.0, 2.0};
  const std::vector<double> mu0 = {0.0, 1.0};
  const std::vector<double> psi = ate::aipw_summands(y, t, mu0, mu1, pi);
  CHECK(psi[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(psi[1] == doctest::Approx(1.0).epsilon(1e-12));
  const double est = ate::aipw(y, t, mu0, mu1, pi);
  CHECK(est == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(ate::plugin_variance(y, t, mu0, mu1, pi, est) == doctest::Approx(6.25).epsilon(1e-12));

  // pi = 0.5 everywhere, zero outcome models, one treated / one control
  const std::vector<double> zeros = {0.0, 0.0};
  const std::vector<double> half = {0.5, 0.5};
  CHECK(ate::aipw(std::vector<double>{1.0, 1.0}, t, zeros, zeros, half) ==
        doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(ate::aipw(y, t, mu0, mu1, std::vector<double>{1.0, 0.5}), fiddle::Error);
  CHECK_THROWS_AS(ate::aipw(y, std::vector<int>{1}, mu0, mu1, pi), fiddle::Error);
}

TEST_CASE("plugin variance is zero for identical summands") {
  const std::vector<double> y = {2.0, 2.0};
  const std::vector<int> t = {1, 1};
  const std::vector<double> pi = {0.5, 0.5};
  const std::vector<double> mu = {0.0, 0.0};
  const double est = ate::aipw(y, t, mu, mu, pi);
  CHECK(ate::plugin_variance(y, t, mu, mu, pi, est) == 0.0);
}

TEST_CASE("doubly-robust identity on noiseless synthetic data") {
  dgp::DgpSpec spec;
  spec.n = 500;
  spec.p = 30;
  spec.noise_sd = 0.0;
  spec.seed = 5;
  const auto synth = dgp::generate(spec);
  double truth = 0.0;
  for (double tau : synth.tau_star) truth += tau;
  truth /= spec.n;

  SeededRng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pi(spec.n);
    for (double& v : pi) v = rng.uniform(0.01, 0.99);
    const double est =
        ate::aipw(synth.data.y, synth.data.t, synth.data.mu0_star, synth.data.mu1_star, pi);
    CHECK(std::abs(est - truth) <= 1e-10 * std::abs(truth));
  }
}

TEST_CASE("dual identity: exact propensity with constant outcome models") {
  dgp::DgpSpec spec;
  spec.n = 200;
  spec.p = 12;
  spec.noise_sd = 0.0;
  spec.seed = 9;
  const auto synth = dgp::generate(spec);
  double truth = 0.0;
  for (double tau : synth.tau_star) truth += tau;
  truth /= spec.n;

  const std::vector<double> c0(spec.n, 1.7);
  const std::vector<double> c1(spec.n, -0.4);

  SeededRng rng(10);
  const std::size_t resamples = 20000;
  double sum = 0.0, sumsq = 0.0;
  std::vector<double> y(spec.n);
  std::vector<int> t(spec.n);
  for (std::size_t rep = 0; rep < resamples; ++rep) {
    for (std::size_t i = 0; i < spec.n; ++i) {
      t[i] = rng.bernoulli(synth.data.pi_star[i]) ? 1 : 0;
      y[i] = synth.data.mu0_star[i] + t[i] * synth.tau_star[i];
    }
    const double est = ate::aipw(y, t, c0, c1, synth.data.pi_star);
    sum += est;
    sumsq += est * est;
  }
  const double mean = sum / resamples;
  const double sd = std::sqrt(sumsq / resamples - mean * mean);
  const double se = sd / std::sqrt(static_cast<double>(resamples));
  CHECK(std::abs(mean - truth) <= 3.0 * se);
}

TEST_CASE("translation equivariance") {
  dgp::DgpSpec spec;
  spec.n = 300;
  spec.p = 10;
  spec.seed = 12;
  const auto synth = dgp::generate(spec);
  const double est = ate::aipw(synth.data.y, synth.data.t, synth.data.mu0_star,
                               synth.data.mu1_star, synth.data.pi_star);
  const double c = 3.25;
  std::vector<double> y2 = synth.data.y;
  std::vector<double> mu0 = synth.data.mu0_star;
  std::vector<double> mu1 = synth.data.mu1_star;
  for (double& v : y2) v += c;
  for (double& v : mu0) v += c;
  for (double& v : mu1) v += c;
  const double est2 = ate::aipw(y2, synth.data.t, mu0, mu1, synth.data.pi_star);
  CHECK(est2 == doctest::Approx(est).epsilon(1e-12));
}

TEST_CASE("oracle estimators and CI construction") {
  dgp::DgpSpec spec;
  spec.n = 4000;
  spec.p = 20;
  spec.seed = 14;
  const auto synth = dgp::generate(spec);
  PipelineConfig cfg;
  cfg.method = "oracle_aipw";
  cfg.seed = 123;

  const ate::AteResult r = ate::oracle_aipw(synth.data, cfg);
  CHECK(r.method == "oracle_aipw");
  CHECK(r.n_used == spec.n);
  CHECK(std::abs(r.estimate - 5.0) < 0.2);
  const double half = 1.96 * std::sqrt(r.sigma2_hat / spec.n);
  CHECK(r.ci_lo == doctest::Approx(r.estimate - half).epsilon(1e-12));
  CHECK(r.ci_hi == doctest::Approx(r.estimate + half).epsilon(1e-12));

  const ate::AteResult ipw = ate::oracle_ipw(synth.data, cfg);
  CHECK(std::abs(ipw.estimate - 5.0) < 1.0);
  CHECK(ipw.sigma2_hat > r.sigma2_hat);  // IPW is less efficient

  // pi = 0.5 collapse: estimate equals 2 mean(T y - (1 - T) y)
  fiddle::Dataset flat = synth.data;
  flat.pi_star.assign(spec.n, 0.5);
  const ate::AteResult collapse = ate::oracle_ipw(flat, cfg);
  double expect = 0.0;
  for (std::size_t i = 0; i < flat.n(); ++i)
    expect += flat.t[i] ? 2.0 * flat.y[i] : -2.0 * flat.y[i];
  expect /= static_cast<double>(flat.n());
  CHECK(collapse.estimate == doctest::Approx(expect).epsilon(1e-12));

  // y identically zero gives a zero estimate
  fiddle::Dataset silent = synth.data;
  silent.y.assign(spec.n, 0.0);
  CHECK(ate::oracle_ipw(silent, cfg).estimate == 0.0);

  fiddle::Dataset no_oracle = synth.data;
  no_oracle.pi_star.clear();
  CHECK_THROWS_AS(ate::oracle_ipw(no_oracle, cfg), fiddle::Error);
  CHECK_THROWS_AS(ate::oracle_aipw(no_oracle, cfg), fiddle::Error);
}

TEST_CASE("single treated observation, hand-evaluated") {
  // y/pi - (1-pi) mu1/pi - mu0 for T = 1
  const std::vector<double> y = {2.0};
  const std::vector<int> t = {1};
  const std::vector<double> pi = {0.25};
  const std::vector<double> mu1 = {1.5};
  const std::vector<double> mu0 = {0.5};
  const double expect = 2.0 / 0.25 - 0.75 * (1.5 / 0.25) - 0.5;
  CHECK(ate::aipw(y, t, mu0, mu1, pi) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("result JSON carries the contract fields") {
  ate::AteResult r;
  r.method = "oracle_ipw";
  r.estimate = 4.5;
  r.sigma2_hat = 2.0;
  r.ci_lo = 4.0;
  r.ci_hi = 5.0;
  r.n_used = 100;
  r.seed = 7;
  r.config_digest = "abc";
  const auto j = nlohmann::json::parse(ate::result_to_json(r));
  CHECK(j.at("method") == "oracle_ipw");
  CHECK(j.at("estimate") == doctest::Approx(4.5));
  CHECK(j.at("sigma2") == doctest::Approx(2.0));
  CHECK(j.at("ci")[0] == doctest::Approx(4.0));
  CHECK(j.at("ci")[1] == doctest::Approx(5.0));
  CHECK(j.at("n") == 100);
  CHECK(j.at("seed") == 7);
  CHECK(j.at("config_digest") == "abc");
}

TEST_CASE("fit_fiddle end to end on a small problem") {
  dgp::DgpSpec spec;
  spec.n = 300;
  spec.p = 40;
  spec.seed = 18;
  const auto synth = dgp::generate(spec);

  PipelineConfig cfg;
  cfg.seed = 77;
  cfg.m_pretrain = 20;
  cfg.rbar = 6;
  cfg.fastnn.width = 16;
  cfg.fastnn.epochs = 5;

  const ate::FitOutput fit = ate::fit_fiddle(synth.data, cfg);
  CHECK(fit.result.n_used == spec.n - cfg.m_pretrain);
  CHECK(std::isfinite(fit.result.estimate));
  CHECK(fit.result.ci_lo <= fit.result.estimate);
  CHECK(fit.result.estimate <= fit.result.ci_hi);
  CHECK(fit.result.method == "fiddle");

  // truncation containment on the estimation set
  const double alpha = 1.0 / std::log(static_cast<double>(fit.result.n_used));
  for (double pi : fit.nuisance.pi_hat) {
    CHECK(pi >= alpha);
    CHECK(pi <= 1.0 - alpha);
  }
  // outcome predictions respect their truncation levels
  CHECK(fit.nuisance.mu0_model.has_value());
  for (double m : fit.nuisance.mu0_hat)
    CHECK(std::abs(m) <= fit.nuisance.mu0_model->trunc_level + 1e-12);

  // determinism: bit-identical results for identical config and data
  const ate::FitOutput again = ate::fit_fiddle(synth.data, cfg);
  CHECK(again.result.estimate == fit.result.estimate);
  CHECK(again.result.sigma2_hat == fit.result.sigma2_hat);
  CHECK(again.nuisance.pi_hat == fit.nuisance.pi_hat);
}

TEST_CASE("fit_fiddle raw mode and vanilla baseline") {
  dgp::DgpSpec spec;
  spec.n = 250;
  spec.p = 8;
  spec.seed = 19;
  const auto synth = dgp::generate(spec);

  PipelineConfig cfg;
  cfg.seed = 99;
  cfg.fastnn.width = 12;
  cfg.fastnn.epochs = 4;
  cfg.fastnn.mode = fiddle::nn::Mode::kRaw;
  const ate::FitOutput raw = ate::fit_fiddle(synth.data, cfg);
  CHECK(raw.result.n_used == spec.n);  // no pretraining split in raw mode
  CHECK(raw.nuisance.mu0_model->theta.size() == 0);

  PipelineConfig vcfg;
  vcfg.seed = 99;
  vcfg.method = "vanilla_nn";
  vcfg.fastnn.width = 12;
  vcfg.fastnn.epochs = 4;
  const ate::FitOutput vanilla = ate::fit_vanilla_nn(synth.data, vcfg);
  CHECK(vanilla.result.method == "vanilla_nn");
  CHECK(vanilla.result.n_used == spec.n);
  CHECK(std::isfinite(vanilla.result.estimate));
}

TEST_CASE("fit_fiddle rejects degenerate inputs") {
  dgp::DgpSpec spec;
  spec.n = 60;
  spec.p = 10;
  spec.seed = 20;
  auto synth = dgp::generate(spec);
  PipelineConfig cfg;
  cfg.m_pretrain = 10;
  cfg.rbar = 5;
  cfg.fastnn.width = 8;
  cfg.fastnn.epochs = 1;

  auto all_treated = synth.data;
  all_treated.t.assign(all_treated.n(), 1);
  CHECK_THROWS_AS(ate::fit_fiddle(all_treated, cfg), fiddle::Error);

  PipelineConfig bad = cfg;
  bad.m_pretrain = 60;
  CHECK_THROWS_AS(ate::fit_fiddle(synth.data, bad), fiddle::Error);

  PipelineConfig bad2 = cfg;
  bad2.rbar = 11;  // rbar > m_pretrain
  CHECK_THROWS_AS(ate::fit_fiddle(synth.data, bad2), fiddle::Error);
}
