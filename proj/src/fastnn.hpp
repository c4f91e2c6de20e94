#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "matrix.hpp"

namespace fiddle::nn {

/// FactorAugmented: inputs are [ftilde, Tr_M(Theta^T x)] with a penalized
/// variable-selection matrix Theta. Raw: a plain fully connected ReLU
/// regressor on the given input, Theta absent.
enum class Mode { kFactorAugmented, kRaw };

struct FastNnConfig {
  std::size_t depth = 4;   // L: number of ReLU hidden layers
  std::size_t width = 400; // N: hidden width and Theta column count
  std::size_t rbar = 10;
  /// Output/selection truncation level M; 0 means data-driven
  /// (1.2 x max |target| on the training subset).
  double trunc_level = 0.0;
  double tau = 0.005;      // clipped-L1 threshold
  double lambda = 0.0;     // clipped-L1 weight on Theta
  double l2_weight = 0.0;  // squared-norm weight penalty (baseline networks)
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  Mode mode = Mode::kFactorAugmented;

  void validate() const;
};

struct FastNnModel {
  Mode mode = Mode::kFactorAugmented;
  std::size_t input_p = 0;  // covariate dimension p (raw input dim in kRaw)
  std::size_t rbar = 0;     // factor slots (kFactorAugmented only)
  num::Matrix theta;        // p x N, empty in kRaw
  /// L+1 linear maps; weights[l] has shape (fan_out x fan_in).
  std::vector<num::Matrix> weights;
  std::vector<std::vector<double>> biases;
  double trunc_level = 1.0;

  std::size_t mlp_input_dim() const;
  std::size_t parameter_count() const;
};

struct TrainReport {
  std::vector<double> loss_per_epoch;  // mean squared residual per epoch
  double penalty_final = 0.0;
  std::size_t steps = 0;
};

/// psi_tau(x) = min(|x| / tau, 1).
double clipped_l1(double x, double tau);

/// Subgradient choice: sign(x)/tau on 0 < |x| < tau, 0 at x = 0 and on the
/// flat region |x| >= tau.
double clipped_l1_subgrad(double x, double tau);

double truncate_scalar(double z, double m);
void truncate(std::span<double> v, double m);

/// Tr_M(g([factors, Tr_M(Theta^T x)])) per the network definition; in kRaw
/// the raw input is passed through `factors` and `x` is ignored.
double forward(const FastNnModel& model, std::span<const double> factors,
               std::span<const double> x);

/// Batched forward over aligned rows.
std::vector<double> predict(const FastNnModel& model, const num::Matrix& factors,
                            const num::Matrix& x);

double penalty_sum(const FastNnModel& model, double tau);

/// Mean squared residual over the given rows plus lambda * sum psi_tau(Theta)
/// (plus the squared-norm term when l2_weight > 0).
double loss(const FastNnModel& model, const num::Matrix& factors,
            const num::Matrix& x, std::span<const double> targets, double lambda,
            double tau, double l2_weight = 0.0);

struct Gradients {
  num::Matrix theta;
  std::vector<num::Matrix> weights;
  std::vector<std::vector<double>> biases;
};

/// Exact gradient of `loss` up to the stated subgradient choices: ReLU kinks
/// take 0, truncation passes through on [-M, M] and is 0 outside.
Gradients grad(const FastNnModel& model, const num::Matrix& factors,
               const num::Matrix& x, std::span<const double> targets,
               double lambda, double tau, double l2_weight = 0.0);

struct AdamState {
  Gradients m;
  Gradients v;
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const FastNnModel& model);
void adam_step(FastNnModel& model, AdamState& state, const Gradients& grads, double lr);

/// Mini-batch training on rows of `data` with t == treatment_arm. `factors`
/// must be row-aligned with `data` (the raw input matrix in kRaw mode).
std::pair<FastNnModel, TrainReport> train_outcome(const Dataset& data,
                                                  const num::Matrix& factors,
                                                  int treatment_arm,
                                                  const FastNnConfig& config);

/// Same loop with targets T_i on all rows; the raw output is left
/// unconstrained (propensity truncation happens downstream).
std::pair<FastNnModel, TrainReport> train_propensity(const Dataset& data,
                                                     const num::Matrix& factors,
                                                     const FastNnConfig& config);

/// {j : max_k |Theta_jk| > threshold}; only meaningful in kFactorAugmented.
std::vector<std::size_t> selected_variables(const FastNnModel& model, double threshold);

/// Versioned JSON blob (shapes + flat weight arrays).
std::string model_to_json(const FastNnModel& model);
FastNnModel model_from_json(const std::string& text);

}  // namespace fiddle::nn
