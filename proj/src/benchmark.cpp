#include "benchmark.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include "rng.hpp"

#include <json.hpp>

#include "ate.hpp"
#include "error.hpp"

namespace fiddle::bench {

namespace {

constexpr double kTrueAte = 5.0;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double run_one_rep(const BenchmarkRequest& req, std::size_t n, std::size_t p,
                   const std::string& method, std::size_t rep) {
  const std::uint64_t rep_seed =
      num::SeededRng::derive(req.base.seed, req.rep_offset + rep);

  dgp::DgpSpec spec = req.base.dgp;
  spec.n = n;
  spec.p = p;
  spec.seed = num::SeededRng::derive(rep_seed, 0);
  const dgp::SyntheticDataset synth = dgp::generate(spec);

  PipelineConfig cfg = req.base;
  cfg.method = method;
  cfg.seed = num::SeededRng::derive(rep_seed, 1);
  return ate::run_method(synth.data, cfg).result.estimate;
}

}  // namespace

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FIDDLE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkRequest& req, std::size_t threads) {
  require(!req.ns.empty() && !req.ps.empty() && !req.methods.empty(),
          ErrorCode::InvalidArgument, "benchmark: empty grid");
  req.base.validate();
  const std::size_t reps = req.base.reps;
  const std::size_t workers = std::min(resolve_threads(threads), reps);

  std::vector<BenchmarkRow> rows;
  for (std::size_t n : req.ns) {
    for (std::size_t p : req.ps) {
      for (const std::string& method : req.methods) {
        BenchmarkRow row;
        row.method = method;
        row.n = n;
        row.p = p;
        row.reps = reps;
        row.estimates.assign(reps, 0.0);

        const auto start = std::chrono::steady_clock::now();
        std::atomic<std::size_t> next{0};
        std::mutex fail_mutex;
        std::string failure;

        auto worker = [&]() {
          while (true) {
            const std::size_t rep = next.fetch_add(1);
            if (rep >= reps) return;
            try {
              row.estimates[rep] = run_one_rep(req, n, p, method, rep);
            } catch (const std::exception& e) {
              std::lock_guard lock(fail_mutex);
              if (failure.empty()) failure = e.what();
              return;
            }
          }
        };

        if (workers <= 1) {
          worker();
        } else {
          std::vector<std::thread> pool;
          for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
          for (std::thread& t : pool) t.join();
        }
        require(failure.empty(), ErrorCode::Internal, "benchmark replication failed: " + failure);

        double sq_sum = 0.0;
        for (double est : row.estimates) {
          const double err = est - kTrueAte;
          sq_sum += err * err;
        }
        const double mean_sq = sq_sum / static_cast<double>(reps);
        row.rmse = std::sqrt(mean_sq);
        if (reps > 1 && row.rmse > 0.0) {
          double var_sq = 0.0;
          for (double est : row.estimates) {
            const double err = est - kTrueAte;
            var_sq += (err * err - mean_sq) * (err * err - mean_sq);
          }
          const double sd_sq = std::sqrt(var_sq / static_cast<double>(reps - 1));
          row.se = sd_sq / (2.0 * row.rmse * std::sqrt(static_cast<double>(reps)));
        }
        row.wallclock_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string rows_to_csv(const std::vector<BenchmarkRow>& rows) {
  std::ostringstream out;
  out << "method,n,p,rmse,se,reps,wallclock\n";
  for (const BenchmarkRow& r : rows)
    out << r.method << ',' << r.n << ',' << r.p << ',' << fmt(r.rmse) << ','
        << fmt(r.se) << ',' << r.reps << ',' << fmt(r.wallclock_s) << "\n";
  return out.str();
}

std::string rows_to_json(const std::vector<BenchmarkRow>& rows, const PipelineConfig& base) {
  nlohmann::ordered_json j;
  j["config_digest"] = config_digest(base);
  j["seed"] = base.seed;
  j["true_ate"] = kTrueAte;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const BenchmarkRow& r : rows) {
    arr.push_back({{"method", r.method},
                   {"n", r.n},
                   {"p", r.p},
                   {"reps", r.reps},
                   {"rmse", r.rmse},
                   {"se", r.se},
                   {"wallclock", r.wallclock_s},
                   {"estimates", r.estimates}});
  }
  j["rows"] = std::move(arr);
  return j.dump(2);
}

}  // namespace fiddle::bench
