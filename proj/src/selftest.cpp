#include "selftest.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ate.hpp"
#include "dgp.hpp"
#include "eig.hpp"
#include "error.hpp"
#include "fastnn.hpp"
#include "rng.hpp"

namespace fiddle::selftest {

namespace {

using num::Matrix;
using num::SeededRng;

struct Checker {
  std::ostringstream log;
  bool ok = true;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      log << what << "; ";
    }
  }
  void expect_near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
      ok = false;
      log << what << " (got " << got << ", want " << want << "); ";
    }
  }
};

Matrix random_symmetric(std::size_t k, SeededRng& rng) {
  Matrix s(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) s(i, j) = s(j, i) = rng.uniform(-1.0, 1.0);
  return s;
}

void check_formulas(Checker& c) {
  c.expect_near(nn::clipped_l1(0.0, 0.005), 0.0, 1e-12, "psi(0)");
  c.expect_near(nn::clipped_l1(0.01, 0.005), 1.0, 1e-12, "psi caps at 1");
  c.expect_near(nn::clipped_l1(0.001, 0.005), 0.2, 1e-12, "psi linear part");
  c.expect_near(nn::clipped_l1_subgrad(0.0, 0.005), 0.0, 1e-12, "psi' at 0");
  c.expect_near(nn::clipped_l1_subgrad(0.001, 0.005), 200.0, 1e-12, "psi' slope");
  c.expect_near(nn::clipped_l1_subgrad(0.01, 0.005), 0.0, 1e-12, "psi' flat");
  c.expect_near(nn::truncate_scalar(7.0, 5.0), 5.0, 1e-12, "Tr clamps above");
  c.expect_near(nn::truncate_scalar(-7.0, 5.0), -5.0, 1e-12, "Tr clamps below");
  c.expect_near(nn::truncate_scalar(3.2, 5.0), 3.2, 1e-12, "Tr identity inside");
  c.expect_near(dgp::sigmoid(0.0), 0.5, 1e-12, "sigmoid(0)");
  c.expect_near(dgp::sigmoid(std::log(3.0)), 0.75, 1e-12, "sigmoid(ln 3)");
  c.expect_near(dgp::trun(0.0), 0.1, 1e-12, "trun(0)");
  c.expect_near(dgp::trun(1.0), 0.9, 1e-12, "trun(1)");
  const std::size_t n = 1000;
  const std::vector<double> tr = ate::truncate_propensity(std::vector<double>{0.99}, n);
  c.expect_near(tr[0], 1.0 - 1.0 / std::log(1000.0), 1e-14, "propensity clamp at n=1000");
}

void check_rng(Checker& c) {
  SeededRng a(42), b(42);
  for (int i = 0; i < 1000; ++i)
    if (a.next_u64() != b.next_u64()) {
      c.expect(false, "same-seed streams diverged");
      break;
    }
  c.expect(SeededRng::derive(7, 0) != SeededRng::derive(7, 1), "derive must split");
  SeededRng r(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform(-1.0, 1.0);
    if (u < -1.0 || u >= 1.0) {
      c.expect(false, "uniform escaped [a, b)");
      break;
    }
  }
  c.expect_near(r.normal(2.5, 0.0), 2.5, 0.0, "normal with sd=0");
}

void check_eigen(Checker& c) {
  SeededRng rng(11);
  const Matrix s = random_symmetric(8, rng);
  const num::EigenPairs pairs = num::sym_eig_topk(s, 8);
  // || S - V diag(lambda) V^T ||_F <= 1e-8 ||S||_F
  Matrix recon(8, 8);
  for (std::size_t k = 0; k < 8; ++k)
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j)
        recon(i, j) += pairs.values[k] * pairs.vectors(i, k) * pairs.vectors(j, k);
  double diff = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double d = recon.data()[i] - s.data()[i];
    diff += d * d;
  }
  c.expect(std::sqrt(diff) <= 1e-8 * num::frobenius_norm(s), "eigen reconstruction");

  Matrix diag(2, 2);
  diag(0, 0) = 4.0;
  diag(1, 1) = 1.0;
  const num::EigenPairs dp = num::sym_eig_topk(diag, 2);
  c.expect_near(dp.values[0], 4.0, 1e-12, "diag eigenvalue 0");
  c.expect_near(dp.values[1], 1.0, 1e-12, "diag eigenvalue 1");
}

void check_gram(Checker& c) {
  SeededRng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 2 + rng.next_u64() % 8;
    const std::size_t p = m + 1 + rng.next_u64() % 8;  // gram regime p > m
    Matrix x(m, p);
    for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
    const std::size_t topk = 1 + rng.next_u64() % m;

    const num::EigenPairs fast = num::gram_topk(x, topk);
    Matrix cov = num::matmul_tn(x, x);
    for (double& v : cov.data()) v /= static_cast<double>(m);
    const num::EigenPairs dense = num::sym_eig_topk(cov, topk);

    for (std::size_t j = 0; j < topk; ++j) {
      c.expect_near(fast.values[j], dense.values[j], 1e-8, "gram eigenvalue");
      double dot_abs = 0.0;
      for (std::size_t i = 0; i < p; ++i) dot_abs += fast.vectors(i, j) * dense.vectors(i, j);
      c.expect(std::abs(std::abs(dot_abs) - 1.0) <= 1e-6, "gram eigenvector alignment");
    }
    if (!c.ok) return;
  }
}

// Scalar re-evaluation of the network, independent of the batched kernels.
double naive_forward(const nn::FastNnModel& model, std::span<const double> factors,
                     std::span<const double> x) {
  std::vector<double> z;
  if (model.mode == nn::Mode::kFactorAugmented) {
    z.assign(factors.begin(), factors.end());
    for (std::size_t k = 0; k < model.theta.cols(); ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < model.theta.rows(); ++j) s += model.theta(j, k) * x[j];
      z.push_back(nn::truncate_scalar(s, model.trunc_level));
    }
  } else {
    z.assign(factors.begin(), factors.end());
  }
  for (std::size_t l = 0; l + 1 < model.weights.size(); ++l) {
    std::vector<double> next(model.weights[l].rows());
    for (std::size_t i = 0; i < next.size(); ++i) {
      double a = model.biases[l][i];
      for (std::size_t j = 0; j < z.size(); ++j) a += model.weights[l](i, j) * z[j];
      next[i] = a > 0.0 ? a : 0.0;
    }
    z = std::move(next);
  }
  double out = model.biases.back()[0];
  for (std::size_t j = 0; j < z.size(); ++j) out += model.weights.back()(0, j) * z[j];
  return nn::truncate_scalar(out, model.trunc_level);
}

// Smallest distance of any pre-activation to a ReLU or truncation kink over
// the given rows; finite differences are only trusted away from kinks.
double min_kink_distance(const nn::FastNnModel& model, const Matrix& factors,
                         const Matrix& x) {
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t row = 0; row < factors.rows(); ++row) {
    std::vector<double> z;
    if (model.mode == nn::Mode::kFactorAugmented) {
      const auto f = factors.row_span(row);
      z.assign(f.begin(), f.end());
      for (std::size_t k = 0; k < model.theta.cols(); ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < model.theta.rows(); ++j) s += model.theta(j, k) * x(row, j);
        dist = std::min(dist, std::abs(std::abs(s) - model.trunc_level));
        z.push_back(nn::truncate_scalar(s, model.trunc_level));
      }
    } else {
      const auto f = factors.row_span(row);
      z.assign(f.begin(), f.end());
    }
    for (std::size_t l = 0; l + 1 < model.weights.size(); ++l) {
      std::vector<double> next(model.weights[l].rows());
      for (std::size_t i = 0; i < next.size(); ++i) {
        double a = model.biases[l][i];
        for (std::size_t j = 0; j < z.size(); ++j) a += model.weights[l](i, j) * z[j];
        dist = std::min(dist, std::abs(a));
        next[i] = a > 0.0 ? a : 0.0;
      }
      z = std::move(next);
    }
    double out = model.biases.back()[0];
    for (std::size_t j = 0; j < z.size(); ++j) out += model.weights.back()(0, j) * z[j];
    dist = std::min(dist, std::abs(std::abs(out) - model.trunc_level));
  }
  return dist;
}

struct TinyProblem {
  nn::FastNnModel model;
  Matrix factors;
  Matrix x;
  std::vector<double> targets;
};

TinyProblem make_tiny_problem(std::uint64_t seed) {
  SeededRng rng(seed);
  const std::size_t p = 5, rbar = 2, width = 4, depth = 2, bsz = 3;

  nn::FastNnConfig cfg;
  cfg.depth = depth;
  cfg.width = width;
  cfg.rbar = rbar;
  cfg.tau = 0.01;
  cfg.trunc_level = 3.0;
  cfg.epochs = 0;
  cfg.seed = rng.next_u64();

  TinyProblem prob;
  prob.factors = Matrix(bsz, rbar);
  for (double& v : prob.factors.data()) v = rng.uniform(-1.0, 1.0);
  prob.x = Matrix(bsz, p);
  for (double& v : prob.x.data()) v = rng.uniform(-1.0, 1.0);
  prob.targets.resize(bsz);
  for (double& v : prob.targets) v = rng.uniform(-1.0, 1.0);

  Dataset dummy;
  dummy.y = prob.targets;
  dummy.t.assign(bsz, 0);
  dummy.x = prob.x;
  auto [model, report] = nn::train_outcome(dummy, prob.factors, 0, cfg);
  prob.model = std::move(model);
  return prob;
}

std::vector<double*> parameter_pointers(nn::FastNnModel& model) {
  std::vector<double*> ptrs;
  for (double& v : model.theta.data()) ptrs.push_back(&v);
  for (Matrix& w : model.weights)
    for (double& v : w.data()) ptrs.push_back(&v);
  for (auto& b : model.biases)
    for (double& v : b) ptrs.push_back(&v);
  return ptrs;
}

void check_gradient(Checker& c) {
  int checked = 0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    TinyProblem prob = make_tiny_problem(500 + trial);
    if (min_kink_distance(prob.model, prob.factors, prob.x) < 5e-4) continue;
    const nn::Gradients grads =
        nn::grad(prob.model, prob.factors, prob.x, prob.targets, 0.0, 0.01);

    std::vector<double> flat;
    for (double v : grads.theta.data()) flat.push_back(v);
    for (const Matrix& w : grads.weights)
      for (double v : w.data()) flat.push_back(v);
    for (const auto& b : grads.biases)
      for (double v : b) flat.push_back(v);

    std::vector<double*> ptrs = parameter_pointers(prob.model);
    const double h = 1e-5;
    for (std::size_t k = 0; k < ptrs.size(); ++k) {
      const double saved = *ptrs[k];
      *ptrs[k] = saved + h;
      const double up = nn::loss(prob.model, prob.factors, prob.x, prob.targets, 0.0, 0.01);
      *ptrs[k] = saved - h;
      const double dn = nn::loss(prob.model, prob.factors, prob.x, prob.targets, 0.0, 0.01);
      *ptrs[k] = saved;
      const double fd = (up - dn) / (2.0 * h);
      const double scale = std::max({std::abs(fd), std::abs(flat[k]), 1e-3});
      if (std::abs(fd - flat[k]) / scale > 1e-4) {
        c.expect(false, "gradient mismatch at coordinate " + std::to_string(k));
        return;
      }
      ++checked;
    }
  }
  c.expect(checked > 0, "no gradient coordinates checked");

  // The batched forward must agree with the scalar re-evaluation.
  TinyProblem prob = make_tiny_problem(900);
  for (std::size_t i = 0; i < prob.targets.size(); ++i) {
    const double fast = nn::forward(prob.model, prob.factors.row_span(i), prob.x.row_span(i));
    const double slow = naive_forward(prob.model, prob.factors.row_span(i), prob.x.row_span(i));
    c.expect_near(fast, slow, 1e-12, "batched vs scalar forward");
  }
}

void check_doubly_robust(Checker& c, bool inject_sign_flip) {
  dgp::DgpSpec spec;
  spec.n = 400;
  spec.p = 20;
  spec.noise_sd = 0.0;  // noiseless so the identity is exact
  spec.seed = 77;
  const dgp::SyntheticDataset synth = dgp::generate(spec);

  double truth = 0.0;
  for (double tau : synth.tau_star) truth += tau;
  truth /= static_cast<double>(spec.n);

  SeededRng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> pi(spec.n);
    for (double& v : pi) v = rng.uniform(0.05, 0.95);
    double est = ate::aipw(synth.data.y, synth.data.t, synth.data.mu0_star,
                           synth.data.mu1_star, pi);
    if (inject_sign_flip) est = -est;
    c.expect(std::abs(est - truth) <= 1e-10 * std::abs(truth),
             "doubly-robust identity with arbitrary propensities");
    if (!c.ok) return;
  }
}

void check_aipw_example(Checker& c) {
  const std::vector<double> y = {3.0, 1.0};
  const std::vector<int> t = {1, 0};
  const std::vector<double> pi = {0.4, 0.8};
  const std::vector<double> mu1 = {1.0, 2.0};
  const std::vector<double> mu0 = {0.0, 1.0};
  const std::vector<double> psi = ate::aipw_summands(y, t, mu0, mu1, pi);
  c.expect_near(psi[0], 6.0, 1e-12, "aipw summand 0");
  c.expect_near(psi[1], 1.0, 1e-12, "aipw summand 1");
  const double est = ate::aipw(y, t, mu0, mu1, pi);
  c.expect_near(est, 3.5, 1e-12, "aipw estimate");
  c.expect_near(ate::plugin_variance(y, t, mu0, mu1, pi, est), 6.25, 1e-12,
                "plug-in variance");
}

void check_adam(Checker& c) {
  nn::FastNnConfig cfg;
  cfg.mode = nn::Mode::kRaw;
  cfg.depth = 1;
  cfg.width = 1;
  cfg.epochs = 0;
  cfg.trunc_level = 1.0;
  Dataset dummy;
  dummy.y = {0.0};
  dummy.t = {0};
  dummy.x = Matrix(1, 1);
  Matrix factors(1, 1);
  auto [model, report] = nn::train_outcome(dummy, factors, 0, cfg);

  nn::AdamState state = nn::make_adam_state(model);
  nn::Gradients g = nn::grad(model, factors, Matrix(), dummy.y, 0.0, 0.01);
  for (Matrix& w : g.weights) w.fill(0.0);
  for (auto& b : g.biases) b.assign(b.size(), 0.0);
  g.weights[0](0, 0) = 0.5;  // single nonzero gradient coordinate
  const double before = model.weights[0](0, 0);
  nn::adam_step(model, state, g, 0.001);
  c.expect_near(model.weights[0](0, 0), before - 0.001, 1e-9,
                "first Adam step moves by -lr sign(g)");
}

}  // namespace

SelftestReport run_selftest(const SelftestOptions& options) {
  SelftestReport report;
  const std::vector<std::pair<std::string, std::function<void(Checker&)>>> checks = {
      {"formula_identities", [](Checker& c) { check_formulas(c); }},
      {"rng_determinism", [](Checker& c) { check_rng(c); }},
      {"eigen_reconstruction", [](Checker& c) { check_eigen(c); }},
      {"gram_trick_equivalence", [](Checker& c) { check_gram(c); }},
      {"gradient_finite_difference", [](Checker& c) { check_gradient(c); }},
      {"doubly_robust_identity",
       [&options](Checker& c) { check_doubly_robust(c, options.inject_aipw_sign_flip); }},
      {"aipw_hand_example", [](Checker& c) { check_aipw_example(c); }},
      {"adam_first_step", [](Checker& c) { check_adam(c); }},
  };

  report.all_passed = true;
  for (const auto& [name, fn] : checks) {
    CheckResult result;
    result.name = name;
    const auto start = std::chrono::steady_clock::now();
    Checker c;
    try {
      fn(c);
      result.passed = c.ok;
      result.detail = c.log.str();
    } catch (const std::exception& e) {
      result.passed = false;
      result.detail = e.what();
    }
    result.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    report.all_passed = report.all_passed && result.passed;
    report.checks.push_back(std::move(result));
  }
  return report;
}

std::string report_to_json(const SelftestReport& report) {
  nlohmann::ordered_json j;
  j["all_passed"] = report.all_passed;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const CheckResult& c : report.checks) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["passed"] = c.passed;
    cj["ms"] = c.millis;
    if (!c.detail.empty()) cj["detail"] = c.detail;
    arr.push_back(std::move(cj));
  }
  j["checks"] = std::move(arr);
  return j.dump(2);
}

}  // namespace fiddle::selftest
