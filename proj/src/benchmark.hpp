#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace fiddle::bench {

struct BenchmarkRow {
  std::string method;
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t reps = 0;
  double rmse = 0.0;
  double se = 0.0;
  double wallclock_s = 0.0;
  std::vector<double> estimates;  // per replication, in rep order
};

struct BenchmarkRequest {
  std::vector<std::size_t> ns;
  std::vector<std::size_t> ps;
  std::vector<std::string> methods;
  PipelineConfig base;
  /// Replication r uses seed derive(base.seed, rep_offset + r); splitting a
  /// run into disjoint seed ranges pools exactly.
  std::size_t rep_offset = 0;
};

/// Independent replications of each (method, n, p) cell against the synthetic
/// process; per-rep error is estimate - 5 (the process's ground-truth ATE).
/// rmse = sqrt(mean squared error); se is the delta-method standard error
/// sd(squared errors) / (2 rmse sqrt(reps)).
std::vector<BenchmarkRow> run_benchmark(const BenchmarkRequest& request,
                                        std::size_t threads = 0);

/// Thread budget: `requested` if nonzero, else FIDDLE_THREADS from the
/// environment, else hardware concurrency.
std::size_t resolve_threads(std::size_t requested);

std::string rows_to_csv(const std::vector<BenchmarkRow>& rows);
std::string rows_to_json(const std::vector<BenchmarkRow>& rows,
                         const PipelineConfig& base);

}  // namespace fiddle::bench
