#pragma once

#include <cstdint>

#include "dataset.hpp"
#include "matrix.hpp"

namespace fiddle::dgp {

/// Synthetic benchmark configuration: n observations in dimension p with
/// r = 4 latent factors and N(0, noise_sd^2) outcome noise.
struct DgpSpec {
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t r = 4;
  double noise_sd = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Generated data together with the latent truth: factors, loadings,
/// idiosyncratic parts, and the oracle response/propensity surfaces.
struct SyntheticDataset {
  Dataset data;        // y, T, X plus oracle columns filled in
  num::Matrix f_true;  // n x r
  num::Matrix u_true;  // n x p
  num::Matrix b_true;  // p x r, redrawn per replication
  std::vector<double> tau_star;  // per-observation treatment effect
};

double sigmoid(double x);

/// trun{z} = 0.8 z + 0.1, the paper's map into (0.1, 0.9).
double trun(double z);

/// Draws B, f, u, treatment and outcomes for one replication:
///   b_ij ~ U(-sqrt 3, sqrt 3), f_i, u_i ~ U(-1, 1), X = f B^T + u,
///   T ~ Bernoulli(pi*(f, u)), y = mu*(f, u) + T tau*(f, u) + eps.
SyntheticDataset generate(const DgpSpec& spec);

/// Monte Carlo mean of tau*(f, u) over fresh factor/idiosyncratic draws.
double true_ate_mc(const DgpSpec& spec, std::size_t draws);

/// Monte Carlo estimate of the asymptotic variance floor
///   E[(tau* - 5)^2 + Var[y(1)|x]/pi* + Var[y(0)|x]/(1 - pi*)]
/// with Var[y(t)|x] = noise_sd^2 under this process.
double efficiency_bound_mc(const DgpSpec& spec, std::size_t draws);

// Pointwise response/propensity surfaces of the process; exposed so tests and
// the Monte Carlo references evaluate one shared definition. Each takes the
// factor vector and the first five idiosyncratic coordinates.
double mu_star(std::span<const double> f, std::span<const double> u5);
double tau_star_fn(std::span<const double> f, std::span<const double> u5);
double pi_star_fn(std::span<const double> f, std::span<const double> u5);

}  // namespace fiddle::dgp
