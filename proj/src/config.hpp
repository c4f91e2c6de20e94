#pragma once

#include <cstdint>
#include <string>

#include "dgp.hpp"
#include "fastnn.hpp"

namespace fiddle {

/// Operator-facing configuration shared by the CLI, the benchmark harness and
/// the fit pipeline. Defaults follow the reference hyperparameters: L = 4,
/// N = 400, lr = 0.001, 100 epochs, batch 64, tau = 0.005, m = 50, rbar = 10,
/// and lambda = 1.3 log(p) / n unless overridden.
struct PipelineConfig {
  std::string method = "fiddle";  // fiddle | vanilla_nn | oracle_ipw | oracle_aipw
  std::size_t m_pretrain = 50;
  std::size_t rbar = 10;
  nn::FastNnConfig fastnn;
  /// When true, the clipped-L1 weight is computed as 1.3 log(p) / n_fit at fit
  /// time; fastnn.lambda is then ignored.
  bool lambda_from_rule = true;
  std::uint64_t seed = 1;
  std::size_t reps = 100;
  dgp::DgpSpec dgp{5000, 500, 4, 0.5, 1};

  double resolve_lambda(std::size_t p, std::size_t n_fit) const;
  void validate() const;
};

/// Canonical JSON rendering (stable key order); the digest is an FNV-1a hash
/// of it, recorded in outputs so runs can be reproduced exactly.
std::string config_to_json(const PipelineConfig& cfg);
std::string config_digest(const PipelineConfig& cfg);

/// Overlay the keys present in `text` onto `base`. Unknown keys are errors.
PipelineConfig config_from_json(const std::string& text, PipelineConfig base = {});

/// "desk" (N = 128, 60 epochs, 20 reps) or "paper" (N = 400, 100 epochs,
/// 100 reps).
void apply_preset(PipelineConfig& cfg, const std::string& name);

std::uint64_t fnv1a64(std::string_view text);

}  // namespace fiddle
