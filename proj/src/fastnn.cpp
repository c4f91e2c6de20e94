#include "fastnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace fiddle::nn {

using num::Matrix;

void FastNnConfig::validate() const {
  require(depth >= 1, ErrorCode::InvalidArgument, "fastnn: depth must be >= 1");
  require(width >= 1, ErrorCode::InvalidArgument, "fastnn: width must be >= 1");
  require(tau > 0.0, ErrorCode::InvalidArgument, "fastnn: tau must be > 0");
  require(lambda >= 0.0, ErrorCode::InvalidArgument, "fastnn: lambda must be >= 0");
  require(l2_weight >= 0.0, ErrorCode::InvalidArgument, "fastnn: l2_weight must be >= 0");
  require(trunc_level >= 0.0, ErrorCode::InvalidArgument,
          "fastnn: trunc_level must be >= 0 (0 = data-driven)");
  require(learning_rate >= 0.0, ErrorCode::InvalidArgument, "fastnn: learning_rate must be >= 0");
  require(batch_size >= 1, ErrorCode::InvalidArgument, "fastnn: batch_size must be >= 1");
  if (mode == Mode::kFactorAugmented)
    require(rbar >= 1, ErrorCode::InvalidArgument, "fastnn: rbar must be >= 1");
}

std::size_t FastNnModel::mlp_input_dim() const {
  return mode == Mode::kFactorAugmented ? rbar + theta.cols() : input_p;
}

std::size_t FastNnModel::parameter_count() const {
  std::size_t count = theta.size();
  for (const Matrix& w : weights) count += w.size();
  for (const auto& b : biases) count += b.size();
  return count;
}

double clipped_l1(double x, double tau) {
  require(tau > 0.0, ErrorCode::InvalidArgument, "clipped_l1: tau must be > 0");
  return std::min(std::abs(x) / tau, 1.0);
}

double clipped_l1_subgrad(double x, double tau) {
  require(tau > 0.0, ErrorCode::InvalidArgument, "clipped_l1_subgrad: tau must be > 0");
  if (x == 0.0 || std::abs(x) >= tau) return 0.0;
  return (x > 0.0 ? 1.0 : -1.0) / tau;
}

double truncate_scalar(double z, double m) {
  if (z > m) return m;
  if (z < -m) return -m;
  return z;
}

void truncate(std::span<double> v, double m) {
  require(m > 0.0, ErrorCode::InvalidArgument, "truncate: M must be > 0");
  for (double& z : v) z = truncate_scalar(z, m);
}

namespace {

// Pass-through inside [-M, M] (ties at the kink take the interior value).
double trunc_mask(double z, double m) { return std::abs(z) <= m ? 1.0 : 0.0; }

void gather_rows(const Matrix& src, std::span<const std::size_t> rows, Matrix& dst) {
  dst = Matrix(rows.size(), src.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    std::copy_n(src.row(rows[k]), src.cols(), dst.row(k));
}

struct ForwardCache {
  Matrix fb;   // batch factor slots (raw input in kRaw)
  Matrix xb;   // batch covariates (kFactorAugmented)
  Matrix s;    // raw Theta^T x per row, B x N
  Matrix z0;   // MLP input
  std::vector<Matrix> acts;  // post-ReLU activations, one per hidden layer
  std::vector<double> out_raw;
  std::vector<double> pred;
};

void batch_forward(const FastNnModel& model, ForwardCache& c) {
  const std::size_t bsz = c.fb.rows();
  const double m_level = model.trunc_level;

  if (model.mode == Mode::kFactorAugmented) {
    require(c.fb.cols() == model.rbar, ErrorCode::Dimension, "fastnn: factor width mismatch");
    require(c.xb.cols() == model.input_p, ErrorCode::Dimension, "fastnn: covariate width mismatch");
    c.s = num::matmul(c.xb, model.theta);
    c.z0 = Matrix(bsz, model.mlp_input_dim());
    for (std::size_t i = 0; i < bsz; ++i) {
      double* z = c.z0.row(i);
      std::copy_n(c.fb.row(i), model.rbar, z);
      const double* srow = c.s.row(i);
      for (std::size_t j = 0; j < model.theta.cols(); ++j)
        z[model.rbar + j] = truncate_scalar(srow[j], m_level);
    }
  } else {
    require(c.fb.cols() == model.input_p, ErrorCode::Dimension, "fastnn: input width mismatch");
    c.z0 = c.fb;
  }

  const std::size_t hidden = model.weights.size() - 1;
  c.acts.resize(hidden);
  const Matrix* prev = &c.z0;
  for (std::size_t l = 0; l < hidden; ++l) {
    Matrix a = num::matmul_nt(*prev, model.weights[l]);
    const std::vector<double>& bias = model.biases[l];
    for (std::size_t i = 0; i < bsz; ++i) {
      double* row = a.row(i);
      for (std::size_t j = 0; j < a.cols(); ++j) {
        const double v = row[j] + bias[j];
        row[j] = v > 0.0 ? v : 0.0;
      }
    }
    c.acts[l] = std::move(a);
    prev = &c.acts[l];
  }

  const Matrix& wout = model.weights.back();
  const double bout = model.biases.back()[0];
  c.out_raw.resize(bsz);
  c.pred.resize(bsz);
  for (std::size_t i = 0; i < bsz; ++i) {
    const double v = num::dot(prev->row_span(i), wout.row_span(0)) + bout;
    c.out_raw[i] = v;
    c.pred[i] = truncate_scalar(v, m_level);
  }
}

Gradients make_zero_like(const FastNnModel& model) {
  Gradients g;
  g.theta = Matrix(model.theta.rows(), model.theta.cols());
  for (const Matrix& w : model.weights) g.weights.emplace_back(w.rows(), w.cols());
  for (const auto& b : model.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

/// Forward (and optionally backward) over gathered rows. Returns the mean
/// squared residual; when `grads` is given it receives the gradient of
/// [batch MSE + lambda * sum psi_tau(Theta) + l2 * sum_w w^2].
double batch_pass(const FastNnModel& model, ForwardCache& c,
                  std::span<const double> targets, double lambda, double tau,
                  double l2, Gradients* grads) {
  const std::size_t bsz = c.fb.rows();
  require(bsz > 0, ErrorCode::InvalidArgument, "fastnn: empty batch");
  require(targets.size() == bsz, ErrorCode::Dimension, "fastnn: target length mismatch");

  batch_forward(model, c);

  double sq = 0.0;
  for (std::size_t i = 0; i < bsz; ++i) {
    const double r = c.pred[i] - targets[i];
    sq += r * r;
  }
  const double mse = sq / static_cast<double>(bsz);
  if (!grads) return mse;

  const std::size_t hidden = model.weights.size() - 1;
  const double m_level = model.trunc_level;

  std::vector<double> dout(bsz);
  for (std::size_t i = 0; i < bsz; ++i)
    dout[i] = 2.0 * (c.pred[i] - targets[i]) / static_cast<double>(bsz) *
              trunc_mask(c.out_raw[i], m_level);

  const Matrix& last_act = hidden > 0 ? c.acts[hidden - 1] : c.z0;
  {
    Matrix& gw = grads->weights.back();
    double gb = 0.0;
    for (std::size_t i = 0; i < bsz; ++i) {
      if (dout[i] != 0.0) num::axpy(dout[i], last_act.row_span(i), {gw.row(0), gw.cols()});
      gb += dout[i];
    }
    grads->biases.back()[0] += gb;
  }

  // dz flows backwards through the hidden stack.
  Matrix dz(bsz, model.weights.back().cols());
  const Matrix& wout = model.weights.back();
  for (std::size_t i = 0; i < bsz; ++i)
    for (std::size_t j = 0; j < dz.cols(); ++j) dz(i, j) = dout[i] * wout(0, j);

  for (std::size_t l = hidden; l-- > 0;) {
    const Matrix& act = c.acts[l];
    for (std::size_t i = 0; i < bsz; ++i) {
      double* drow = dz.row(i);
      const double* arow = act.row(i);
      for (std::size_t j = 0; j < dz.cols(); ++j)
        if (arow[j] <= 0.0) drow[j] = 0.0;
    }
    const Matrix& below = l > 0 ? c.acts[l - 1] : c.z0;
    Matrix gw = num::matmul_tn(dz, below);
    for (std::size_t i = 0; i < gw.size(); ++i)
      grads->weights[l].data()[i] += gw.data()[i];
    std::vector<double>& gb = grads->biases[l];
    for (std::size_t i = 0; i < bsz; ++i) {
      const double* drow = dz.row(i);
      for (std::size_t j = 0; j < dz.cols(); ++j) gb[j] += drow[j];
    }
    const bool need_below = l > 0 || model.mode == Mode::kFactorAugmented;
    if (need_below) dz = num::matmul(dz, model.weights[l]);
  }

  if (model.mode == Mode::kFactorAugmented) {
    // Slice off the factor slots, mask by the selection truncation, and
    // accumulate into Theta.
    Matrix ds(bsz, model.theta.cols());
    for (std::size_t i = 0; i < bsz; ++i) {
      const double* drow = dz.row(i);
      const double* srow = c.s.row(i);
      double* out = ds.row(i);
      for (std::size_t j = 0; j < ds.cols(); ++j)
        out[j] = drow[model.rbar + j] * trunc_mask(srow[j], m_level);
    }
    Matrix gt = num::matmul_tn(c.xb, ds);
    for (std::size_t i = 0; i < gt.size(); ++i)
      grads->theta.data()[i] += gt.data()[i];

    if (lambda > 0.0) {
      for (std::size_t i = 0; i < model.theta.size(); ++i)
        grads->theta.data()[i] += lambda * clipped_l1_subgrad(model.theta.data()[i], tau);
    }
  }

  if (l2 > 0.0) {
    for (std::size_t l = 0; l < model.weights.size(); ++l)
      for (std::size_t i = 0; i < model.weights[l].size(); ++i)
        grads->weights[l].data()[i] += 2.0 * l2 * model.weights[l].data()[i];
  }
  return mse;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

double forward(const FastNnModel& model, std::span<const double> factors,
               std::span<const double> x) {
  ForwardCache c;
  c.fb = Matrix(1, factors.size());
  std::copy(factors.begin(), factors.end(), c.fb.row(0));
  if (model.mode == Mode::kFactorAugmented) {
    c.xb = Matrix(1, x.size());
    std::copy(x.begin(), x.end(), c.xb.row(0));
  }
  batch_forward(model, c);
  return c.pred[0];
}

std::vector<double> predict(const FastNnModel& model, const Matrix& factors,
                            const Matrix& x) {
  const std::size_t n = factors.rows();
  std::vector<double> preds(n);
  constexpr std::size_t kChunk = 1024;
  ForwardCache c;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t stop = std::min(n, start + kChunk);
    rows.resize(stop - start);
    std::iota(rows.begin(), rows.end(), start);
    gather_rows(factors, rows, c.fb);
    if (model.mode == Mode::kFactorAugmented) gather_rows(x, rows, c.xb);
    batch_forward(model, c);
    std::copy(c.pred.begin(), c.pred.end(), preds.begin() + start);
  }
  return preds;
}

double penalty_sum(const FastNnModel& model, double tau) {
  double total = 0.0;
  for (double v : model.theta.data()) total += clipped_l1(v, tau);
  return total;
}

double loss(const FastNnModel& model, const Matrix& factors, const Matrix& x,
            std::span<const double> targets, double lambda, double tau,
            double l2_weight) {
  require(!targets.empty(), ErrorCode::InvalidArgument, "loss: empty batch");
  ForwardCache c;
  const std::vector<std::size_t> rows = iota_rows(targets.size());
  gather_rows(factors, rows, c.fb);
  if (model.mode == Mode::kFactorAugmented) gather_rows(x, rows, c.xb);
  double value = batch_pass(model, c, targets, lambda, tau, l2_weight, nullptr);
  if (model.mode == Mode::kFactorAugmented) value += lambda * penalty_sum(model, tau);
  if (l2_weight > 0.0) {
    double w2 = 0.0;
    for (const Matrix& w : model.weights)
      for (double v : w.data()) w2 += v * v;
    value += l2_weight * w2;
  }
  return value;
}

Gradients grad(const FastNnModel& model, const Matrix& factors, const Matrix& x,
               std::span<const double> targets, double lambda, double tau,
               double l2_weight) {
  require(!targets.empty(), ErrorCode::InvalidArgument, "grad: empty batch");
  ForwardCache c;
  const std::vector<std::size_t> rows = iota_rows(targets.size());
  gather_rows(factors, rows, c.fb);
  if (model.mode == Mode::kFactorAugmented) gather_rows(x, rows, c.xb);
  Gradients g = make_zero_like(model);
  batch_pass(model, c, targets, lambda, tau, l2_weight, &g);
  return g;
}

AdamState make_adam_state(const FastNnModel& model) {
  AdamState state;
  state.m = make_zero_like(model);
  state.v = make_zero_like(model);
  return state;
}

namespace {

void adam_update(std::span<double> param, std::span<double> m, std::span<double> v,
                 std::span<const double> g, double lr, const AdamState& s,
                 double bias1, double bias2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double mhat = m[i] / bias1;
    const double vhat = v[i] / bias2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + s.epsilon);
  }
}

}  // namespace

void adam_step(FastNnModel& model, AdamState& state, const Gradients& grads, double lr) {
  state.step += 1;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  adam_update(model.theta.data(), state.m.theta.data(), state.v.theta.data(),
              grads.theta.data(), lr, state, bias1, bias2);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    adam_update(model.weights[l].data(), state.m.weights[l].data(),
                state.v.weights[l].data(), grads.weights[l].data(), lr, state, bias1, bias2);
    adam_update(model.biases[l], state.m.biases[l], state.v.biases[l],
                grads.biases[l], lr, state, bias1, bias2);
  }
}

namespace {

FastNnModel init_model(const FastNnConfig& cfg, std::size_t input_p) {
  FastNnModel model;
  model.mode = cfg.mode;
  model.input_p = input_p;
  model.rbar = cfg.mode == Mode::kFactorAugmented ? cfg.rbar : 0;

  num::SeededRng rng(num::SeededRng::derive(cfg.seed, 0));
  auto fan_in_uniform = [&rng](Matrix& w) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
  };

  if (cfg.mode == Mode::kFactorAugmented) {
    // The selection matrix starts at zero: entries must begin inside the
    // clipped-L1 tube (-tau, tau) for the penalty to exert any shrinkage, and
    // nonzero starts flood the network with random projections of x that
    // drown the factor inputs.
    model.theta = Matrix(input_p, cfg.width);
  }

  const std::size_t d_in =
      cfg.mode == Mode::kFactorAugmented ? cfg.rbar + cfg.width : input_p;
  model.weights.emplace_back(cfg.width, d_in);
  for (std::size_t l = 1; l < cfg.depth; ++l) model.weights.emplace_back(cfg.width, cfg.width);
  model.weights.emplace_back(1, cfg.width);
  for (Matrix& w : model.weights) fan_in_uniform(w);
  for (const Matrix& w : model.weights) model.biases.emplace_back(w.rows(), 0.0);
  return model;
}

std::pair<FastNnModel, TrainReport> train_rows(const Matrix& factors, const Matrix& x,
                                               std::vector<double> targets,
                                               const FastNnConfig& cfg) {
  cfg.validate();
  const std::size_t n_sub = targets.size();
  require(n_sub > 0, ErrorCode::DegenerateData, "fastnn: empty training subset");

  const std::size_t input_p =
      cfg.mode == Mode::kFactorAugmented ? x.cols() : factors.cols();
  FastNnModel model = init_model(cfg, input_p);

  if (cfg.trunc_level > 0.0) {
    model.trunc_level = cfg.trunc_level;
  } else {
    double max_abs = 0.0;
    for (double y : targets) max_abs = std::max(max_abs, std::abs(y));
    model.trunc_level = max_abs > 0.0 ? 1.2 * max_abs : 1.0;
  }

  TrainReport report;
  AdamState adam = make_adam_state(model);
  num::SeededRng shuffle_rng(num::SeededRng::derive(cfg.seed, 1));
  std::vector<std::size_t> order = iota_rows(n_sub);

  ForwardCache cache;
  std::vector<std::size_t> batch_rows;
  std::vector<double> batch_targets;
  Gradients grads = make_zero_like(model);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sq = 0.0;
    for (std::size_t start = 0; start < n_sub; start += cfg.batch_size) {
      const std::size_t stop = std::min(n_sub, start + cfg.batch_size);
      batch_rows.assign(order.begin() + start, order.begin() + stop);
      batch_targets.resize(batch_rows.size());
      for (std::size_t k = 0; k < batch_rows.size(); ++k)
        batch_targets[k] = targets[batch_rows[k]];

      gather_rows(factors, batch_rows, cache.fb);
      if (cfg.mode == Mode::kFactorAugmented) gather_rows(x, batch_rows, cache.xb);

      grads.theta.fill(0.0);
      for (Matrix& w : grads.weights) w.fill(0.0);
      for (auto& b : grads.biases) b.assign(b.size(), 0.0);

      const double mse = batch_pass(model, cache, batch_targets, cfg.lambda, cfg.tau,
                                    cfg.l2_weight, &grads);
      epoch_sq += mse * static_cast<double>(batch_rows.size());
      adam_step(model, adam, grads, cfg.learning_rate);
      report.steps += 1;
    }
    report.loss_per_epoch.push_back(epoch_sq / static_cast<double>(n_sub));
  }

  if (cfg.mode == Mode::kFactorAugmented)
    report.penalty_final = penalty_sum(model, cfg.tau);
  num::check_finite(model.theta, "trained theta");
  for (const Matrix& w : model.weights) num::check_finite(w, "trained weights");
  return {std::move(model), std::move(report)};
}

}  // namespace

std::pair<FastNnModel, TrainReport> train_outcome(const Dataset& data,
                                                  const Matrix& factors,
                                                  int treatment_arm,
                                                  const FastNnConfig& config) {
  require(factors.rows() == data.n(), ErrorCode::Dimension,
          "train_outcome: factor rows must align with data");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.n(); ++i)
    if (data.t[i] == treatment_arm) rows.push_back(i);
  require(!rows.empty(), ErrorCode::DegenerateData,
          "train_outcome: no observations with T = " + std::to_string(treatment_arm) +
              " (degenerate treatment assignment)");

  Matrix fsub, xsub;
  gather_rows(factors, rows, fsub);
  if (config.mode == Mode::kFactorAugmented) gather_rows(data.x, rows, xsub);
  std::vector<double> targets(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) targets[k] = data.y[rows[k]];
  return train_rows(fsub, xsub, std::move(targets), config);
}

std::pair<FastNnModel, TrainReport> train_propensity(const Dataset& data,
                                                     const Matrix& factors,
                                                     const FastNnConfig& config) {
  require(factors.rows() == data.n(), ErrorCode::Dimension,
          "train_propensity: factor rows must align with data");
  const std::size_t n1 = data.n_treated();
  require(n1 > 0 && n1 < data.n(), ErrorCode::DegenerateData,
          "train_propensity: both treatment classes must be present");

  std::vector<double> targets(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) targets[i] = static_cast<double>(data.t[i]);
  Matrix fsub = factors, xsub;
  if (config.mode == Mode::kFactorAugmented) xsub = data.x;
  return train_rows(fsub, xsub, std::move(targets), config);
}

std::vector<std::size_t> selected_variables(const FastNnModel& model, double threshold) {
  require(model.mode == Mode::kFactorAugmented, ErrorCode::InvalidArgument,
          "selected_variables: no selection matrix in raw mode");
  std::vector<std::size_t> selected;
  for (std::size_t j = 0; j < model.theta.rows(); ++j) {
    double row_max = 0.0;
    for (std::size_t k = 0; k < model.theta.cols(); ++k)
      row_max = std::max(row_max, std::abs(model.theta(j, k)));
    if (row_max > threshold) selected.push_back(j);
  }
  return selected;
}

std::string model_to_json(const FastNnModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "fastnn";
  j["version"] = 1;
  j["mode"] = model.mode == Mode::kFactorAugmented ? "factor_augmented" : "raw";
  j["input_p"] = model.input_p;
  j["rbar"] = model.rbar;
  j["trunc_level"] = model.trunc_level;
  j["theta"] = {{"rows", model.theta.rows()},
                {"cols", model.theta.cols()},
                {"data", model.theta.data()}};
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    layers.push_back({{"rows", model.weights[l].rows()},
                      {"cols", model.weights[l].cols()},
                      {"data", model.weights[l].data()},
                      {"bias", model.biases[l]}});
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

FastNnModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("model_from_json: ") + e.what());
  }
  require(j.value("format", "") == "fastnn" && j.value("version", 0) == 1,
          ErrorCode::Parse, "model_from_json: unsupported blob format/version");

  auto read_matrix = [](const nlohmann::json& mj) {
    Matrix m(mj.at("rows").get<std::size_t>(), mj.at("cols").get<std::size_t>());
    std::vector<double> data = mj.at("data").get<std::vector<double>>();
    require(data.size() == m.size(), ErrorCode::Parse, "model_from_json: bad matrix payload");
    m.data() = std::move(data);
    return m;
  };

  FastNnModel model;
  model.mode = j.at("mode") == "factor_augmented" ? Mode::kFactorAugmented : Mode::kRaw;
  model.input_p = j.at("input_p").get<std::size_t>();
  model.rbar = j.at("rbar").get<std::size_t>();
  model.trunc_level = j.at("trunc_level").get<double>();
  model.theta = read_matrix(j.at("theta"));
  for (const auto& lj : j.at("layers")) {
    model.weights.push_back(read_matrix(lj));
    model.biases.push_back(lj.at("bias").get<std::vector<double>>());
    require(model.biases.back().size() == model.weights.back().rows(), ErrorCode::Parse,
            "model_from_json: bias length mismatch");
  }
  require(!model.weights.empty(), ErrorCode::Parse, "model_from_json: no layers");
  return model;
}

}  // namespace fiddle::nn
