#include "dgp.hpp"

#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace fiddle::dgp {

namespace {

const double kSqrt3 = std::sqrt(3.0);

}  // namespace

void DgpSpec::validate() const {
  require(n >= 1, ErrorCode::InvalidArgument, "dgp: n must be >= 1");
  // The response/propensity surfaces read f_1..f_4.
  require(r >= 4, ErrorCode::InvalidArgument, "dgp: r must be >= 4");
  require(p >= r, ErrorCode::InvalidArgument, "dgp: p must be >= r");
  // The response/propensity surfaces read u_1..u_5.
  require(p >= 5, ErrorCode::InvalidArgument, "dgp: p must be >= 5");
  require(noise_sd >= 0.0, ErrorCode::InvalidArgument, "dgp: noise_sd must be >= 0");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double trun(double z) { return 0.8 * z + 0.1; }

double mu_star(std::span<const double> f, std::span<const double> u5) {
  return 10.0 + f[0] + f[1] * f[2] + std::sin(f[3]) +
         std::log(5.0 + u5[0] + u5[1] * u5[2]) + std::tan(u5[3]) + u5[4];
}

double tau_star_fn(std::span<const double> f, std::span<const double> u5) {
  return 5.0 + f[0] + f[1] + std::sin(f[2]) + std::tan(f[3]) + u5[0] + u5[1] +
         std::sin(u5[2] + u5[3]) + std::tan(u5[4]);
}

double pi_star_fn(std::span<const double> f, std::span<const double> u5) {
  double s = std::sin(f[0]) + std::tan(f[1]) + f[2] + f[3];
  for (double u : u5.first(5)) s += u;
  return trun(sigmoid(s));
}

SyntheticDataset generate(const DgpSpec& spec) {
  spec.validate();
  num::SeededRng rng(spec.seed);

  const std::size_t n = spec.n, p = spec.p, r = spec.r;
  SyntheticDataset out;
  out.b_true = num::Matrix(p, r);
  for (double& b : out.b_true.data()) b = rng.uniform(-kSqrt3, kSqrt3);

  out.f_true = num::Matrix(n, r);
  for (double& f : out.f_true.data()) f = rng.uniform(-1.0, 1.0);
  out.u_true = num::Matrix(n, p);
  for (double& u : out.u_true.data()) u = rng.uniform(-1.0, 1.0);

  // X = F B^T + U
  out.data.x = num::matmul_nt(out.f_true, out.b_true);
  for (std::size_t i = 0; i < out.data.x.size(); ++i)
    out.data.x.data()[i] += out.u_true.data()[i];

  out.data.y.resize(n);
  out.data.t.resize(n);
  out.data.pi_star.resize(n);
  out.data.mu0_star.resize(n);
  out.data.mu1_star.resize(n);
  out.tau_star.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> f = out.f_true.row_span(i);
    const std::span<const double> u5 = out.u_true.row_span(i).first(5);

    const double mu = mu_star(f, u5);
    const double tau = tau_star_fn(f, u5);
    const double pi = pi_star_fn(f, u5);
    require(pi > 0.1 && pi < 0.9, ErrorCode::Internal, "dgp: pi* escaped (0.1, 0.9)");

    const int treat = rng.bernoulli(pi) ? 1 : 0;
    const double eps = rng.normal(0.0, spec.noise_sd);

    out.data.t[i] = treat;
    out.data.y[i] = mu + treat * tau + eps;
    out.data.pi_star[i] = pi;
    out.data.mu0_star[i] = mu;
    out.data.mu1_star[i] = mu + tau;
    out.tau_star[i] = tau;
  }
  out.data.validate();
  return out;
}

namespace {

/// Shared sampler for the Monte Carlo references: only (f, u_1..u_5) matter.
template <typename Accum>
double mc_over_draws(const DgpSpec& spec, std::size_t draws, Accum&& accum) {
  require(draws >= 1, ErrorCode::InvalidArgument, "mc: draws must be >= 1");
  num::SeededRng rng(spec.seed);
  double f[4], u5[5];
  double total = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    for (double& v : f) v = rng.uniform(-1.0, 1.0);
    for (double& v : u5) v = rng.uniform(-1.0, 1.0);
    total += accum(std::span<const double>(f), std::span<const double>(u5));
  }
  return total / static_cast<double>(draws);
}

}  // namespace

double true_ate_mc(const DgpSpec& spec, std::size_t draws) {
  return mc_over_draws(spec, draws, [](auto f, auto u5) { return tau_star_fn(f, u5); });
}

double efficiency_bound_mc(const DgpSpec& spec, std::size_t draws) {
  const double var_eps = spec.noise_sd * spec.noise_sd;
  return mc_over_draws(spec, draws, [var_eps](auto f, auto u5) {
    const double tau = tau_star_fn(f, u5);
    const double pi = pi_star_fn(f, u5);
    return (tau - 5.0) * (tau - 5.0) + var_eps / pi + var_eps / (1.0 - pi);
  });
}

}  // namespace fiddle::dgp
