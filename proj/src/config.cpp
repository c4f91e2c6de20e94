#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "error.hpp"

namespace fiddle {

using nlohmann::json;
using nlohmann::ordered_json;

double PipelineConfig::resolve_lambda(std::size_t p, std::size_t n_fit) const {
  if (!lambda_from_rule) return fastnn.lambda;
  require(p >= 1 && n_fit >= 1, ErrorCode::InvalidArgument, "resolve_lambda: empty data");
  return 1.3 * std::log(static_cast<double>(p)) / static_cast<double>(n_fit);
}

void PipelineConfig::validate() const {
  require(method == "fiddle" || method == "vanilla_nn" || method == "oracle_ipw" ||
              method == "oracle_aipw",
          ErrorCode::InvalidArgument, "config: unknown method '" + method + "'");
  require(m_pretrain >= 1, ErrorCode::InvalidArgument, "config: m_pretrain must be >= 1");
  require(rbar >= 1, ErrorCode::InvalidArgument, "config: rbar must be >= 1");
  require(reps >= 1, ErrorCode::InvalidArgument, "config: reps must be >= 1");
  fastnn.validate();
}

namespace {

std::string mode_name(nn::Mode mode) {
  return mode == nn::Mode::kFactorAugmented ? "factor_augmented" : "raw";
}

nn::Mode mode_from_name(const std::string& name) {
  if (name == "factor_augmented") return nn::Mode::kFactorAugmented;
  if (name == "raw") return nn::Mode::kRaw;
  fail(ErrorCode::Parse, "config: unknown fastnn mode '" + name + "'");
}

}  // namespace

std::string config_to_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["method"] = cfg.method;
  j["m_pretrain"] = cfg.m_pretrain;
  j["rbar"] = cfg.rbar;
  j["seed"] = cfg.seed;
  j["reps"] = cfg.reps;
  j["lambda_from_rule"] = cfg.lambda_from_rule;
  j["fastnn"] = {{"depth", cfg.fastnn.depth},
                 {"width", cfg.fastnn.width},
                 {"learning_rate", cfg.fastnn.learning_rate},
                 {"epochs", cfg.fastnn.epochs},
                 {"batch_size", cfg.fastnn.batch_size},
                 {"tau", cfg.fastnn.tau},
                 {"lambda", cfg.fastnn.lambda},
                 {"l2_weight", cfg.fastnn.l2_weight},
                 {"trunc_level", cfg.fastnn.trunc_level},
                 {"mode", mode_name(cfg.fastnn.mode)}};
  j["dgp"] = {{"n", cfg.dgp.n},
              {"p", cfg.dgp.p},
              {"r", cfg.dgp.r},
              {"noise_sd", cfg.dgp.noise_sd},
              {"seed", cfg.dgp.seed}};
  return j.dump();
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string config_digest(const PipelineConfig& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(cfg))));
  return buf;
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void overlay_fastnn(const json& j, nn::FastNnConfig& cfg) {
  static const std::set<std::string> known = {
      "depth",      "width",    "learning_rate", "epochs", "batch_size",
      "tau",        "lambda",   "l2_weight",     "trunc_level", "mode"};
  for (const auto& [key, _] : j.items())
    require(known.count(key) > 0, ErrorCode::Parse,
            "config: unknown fastnn key '" + key + "'");
  maybe(j, "depth", cfg.depth);
  maybe(j, "width", cfg.width);
  maybe(j, "learning_rate", cfg.learning_rate);
  maybe(j, "epochs", cfg.epochs);
  maybe(j, "batch_size", cfg.batch_size);
  maybe(j, "tau", cfg.tau);
  maybe(j, "lambda", cfg.lambda);
  maybe(j, "l2_weight", cfg.l2_weight);
  maybe(j, "trunc_level", cfg.trunc_level);
  if (j.contains("mode")) cfg.mode = mode_from_name(j.at("mode").get<std::string>());
}

void overlay_dgp(const json& j, dgp::DgpSpec& spec) {
  static const std::set<std::string> known = {"n", "p", "r", "noise_sd", "seed"};
  for (const auto& [key, _] : j.items())
    require(known.count(key) > 0, ErrorCode::Parse, "config: unknown dgp key '" + key + "'");
  maybe(j, "n", spec.n);
  maybe(j, "p", spec.p);
  maybe(j, "r", spec.r);
  maybe(j, "noise_sd", spec.noise_sd);
  maybe(j, "seed", spec.seed);
}

}  // namespace

PipelineConfig config_from_json(const std::string& text, PipelineConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("config: invalid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::Parse, "config: top-level JSON must be an object");

  static const std::set<std::string> known = {"method", "m_pretrain",       "rbar",
                                              "seed",   "reps",             "preset",
                                              "fastnn", "lambda_from_rule", "dgp"};
  for (const auto& [key, _] : j.items())
    require(known.count(key) > 0, ErrorCode::Parse, "config: unknown key '" + key + "'");

  // Preset first so explicit keys in the same document override it.
  if (j.contains("preset")) apply_preset(base, j.at("preset").get<std::string>());
  maybe(j, "method", base.method);
  maybe(j, "m_pretrain", base.m_pretrain);
  maybe(j, "rbar", base.rbar);
  maybe(j, "seed", base.seed);
  maybe(j, "reps", base.reps);
  maybe(j, "lambda_from_rule", base.lambda_from_rule);
  if (j.contains("fastnn")) overlay_fastnn(j.at("fastnn"), base.fastnn);
  if (j.contains("dgp")) overlay_dgp(j.at("dgp"), base.dgp);
  base.validate();
  return base;
}

void apply_preset(PipelineConfig& cfg, const std::string& name) {
  if (name == "desk") {
    cfg.fastnn.width = 128;
    cfg.fastnn.epochs = 60;
    cfg.reps = 20;
    return;
  }
  if (name == "paper") {
    cfg.fastnn.width = 400;
    cfg.fastnn.epochs = 100;
    cfg.reps = 100;
    return;
  }
  fail(ErrorCode::InvalidArgument, "config: unknown preset '" + name + "'");
}

}  // namespace fiddle
