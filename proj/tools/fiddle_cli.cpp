// Command-line front end for the FIDDLE shared library. Talks to the core
// exclusively through the C API in fiddle/fiddle.h.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fiddle/fiddle.h"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct ConfigDeleter {
  void operator()(fiddle_config* p) const { fiddle_config_free(p); }
};
struct DatasetDeleter {
  void operator()(fiddle_dataset* p) const { fiddle_dataset_free(p); }
};
struct ResultDeleter {
  void operator()(fiddle_result* p) const { fiddle_result_free(p); }
};

using ConfigPtr = std::unique_ptr<fiddle_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<fiddle_dataset, DatasetDeleter>;
using ResultPtr = std::unique_ptr<fiddle_result, ResultDeleter>;

[[noreturn]] void die(const std::string& context) {
  std::cerr << "fiddle: " << context << ": " << fiddle_last_error() << "\n";
  std::exit(1);
}

void check(fiddle_status status, const std::string& context) {
  if (status != FIDDLE_OK) die(context);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    std::cerr << "fiddle: cannot read '" << path << "'\n";
    std::exit(1);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out.good()) {
    std::cerr << "fiddle: cannot write '" << path << "'\n";
    std::exit(1);
  }
  out << text;
}

// Shared flags that overlay the config file (flags win).
struct CommonOpts {
  std::string config_path;
  std::string method;
  std::string preset;
  std::int64_t seed = -1;
  std::int64_t reps = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--method", opts.method,
                  "fiddle | vanilla_nn | oracle_ipw | oracle_aipw");
  cmd->add_option("--preset", opts.preset, "desk | paper");
  cmd->add_option("--seed", opts.seed, "base seed");
  cmd->add_option("--reps", opts.reps, "replications per grid cell");
}

ConfigPtr build_config(const CommonOpts& opts) {
  fiddle_config* raw = nullptr;
  check(fiddle_config_create(&raw), "config");
  ConfigPtr cfg(raw);
  if (!opts.config_path.empty())
    check(fiddle_config_update_json(cfg.get(), read_file(opts.config_path).c_str()),
          "config file");
  if (!opts.preset.empty())
    check(fiddle_config_apply_preset(cfg.get(), opts.preset.c_str()), "preset");
  ordered_json overlay;
  if (!opts.method.empty()) overlay["method"] = opts.method;
  if (opts.seed >= 0) overlay["seed"] = static_cast<std::uint64_t>(opts.seed);
  if (opts.reps > 0) overlay["reps"] = static_cast<std::uint64_t>(opts.reps);
  if (!overlay.empty())
    check(fiddle_config_update_json(cfg.get(), overlay.dump().c_str()), "flags");
  return cfg;
}

// "n=1000,2000;p=10,500" -> {"n":[...],"p":[...]}
ordered_json parse_grid(const std::string& grid) {
  ordered_json out;
  std::stringstream parts(grid);
  std::string part;
  while (std::getline(parts, part, ';')) {
    const std::size_t eq = part.find('=');
    if (eq == std::string::npos) {
      std::cerr << "fiddle: bad --grid component '" << part << "' (want key=v1,v2)\n";
      std::exit(1);
    }
    const std::string key = part.substr(0, eq);
    if (key != "n" && key != "p") {
      std::cerr << "fiddle: --grid keys must be n or p, got '" << key << "'\n";
      std::exit(1);
    }
    std::vector<std::uint64_t> values;
    std::stringstream items(part.substr(eq + 1));
    std::string item;
    while (std::getline(items, item, ',')) values.push_back(std::stoull(item));
    out[key] = values;
  }
  return out;
}

int cmd_fit(const CommonOpts& common, const std::string& data_path,
            const std::string& out_path, const std::string& models_path) {
  ConfigPtr cfg = build_config(common);
  fiddle_dataset* draw = nullptr;
  check(fiddle_dataset_from_csv(data_path.c_str(), &draw), "load data");
  DatasetPtr data(draw);

  fiddle_result* rraw = nullptr;
  check(fiddle_fit(cfg.get(), data.get(), &rraw), "fit");
  ResultPtr result(rraw);

  const std::string text = fiddle_result_json(result.get());
  if (out_path.empty())
    std::cout << text << "\n";
  else
    write_file(out_path, text + "\n");
  if (!models_path.empty()) {
    const char* models = fiddle_result_models_json(result.get());
    if (!models) {
      std::cerr << "fiddle: method has no trained models to save\n";
      return 1;
    }
    write_file(models_path, models);
  }
  return 0;
}

int cmd_simulate(const CommonOpts& common, const std::string& grid,
                 const std::string& methods_csv, const std::string& out_prefix,
                 int threads) {
  ConfigPtr cfg = build_config(common);
  ordered_json grid_json = grid.empty() ? ordered_json::object() : parse_grid(grid);
  if (!methods_csv.empty()) {
    std::vector<std::string> methods;
    std::stringstream items(methods_csv);
    std::string item;
    while (std::getline(items, item, ',')) methods.push_back(item);
    grid_json["methods"] = methods;
  }

  fiddle_result* rraw = nullptr;
  check(fiddle_benchmark(cfg.get(), grid_json.dump().c_str(), threads, &rraw),
        "benchmark");
  ResultPtr result(rraw);

  const char* csv = fiddle_result_csv(result.get());
  if (out_prefix.empty()) {
    std::cout << csv;
  } else {
    write_file(out_prefix + ".csv", csv);
    write_file(out_prefix + ".json", std::string(fiddle_result_json(result.get())) + "\n");
    std::cout << csv;
  }
  return 0;
}

int cmd_export_dgp(const CommonOpts& common, std::int64_t n, std::int64_t p,
                   const std::string& out_path, bool no_oracle) {
  ConfigPtr cfg = build_config(common);
  // The dgp block of the resolved config, with CLI-level n/p overrides.
  json resolved = json::parse(fiddle_config_json(cfg.get()));
  json dgp = resolved.at("dgp");
  if (n > 0) dgp["n"] = n;
  if (p > 0) dgp["p"] = p;
  if (common.seed >= 0) dgp["seed"] = static_cast<std::uint64_t>(common.seed);

  fiddle_dataset* draw = nullptr;
  check(fiddle_dataset_generate(dgp.dump().c_str(), &draw), "generate");
  DatasetPtr data(draw);
  check(fiddle_dataset_to_csv(data.get(), out_path.c_str(), no_oracle ? 0 : 1),
        "write csv");
  std::cout << "wrote " << fiddle_dataset_rows(data.get()) << " rows x "
            << fiddle_dataset_cols(data.get()) << " covariates to " << out_path << "\n";
  return 0;
}

int cmd_selftest() {
  fiddle_result* rraw = nullptr;
  int all_passed = 0;
  check(fiddle_selftest(&rraw, &all_passed), "selftest");
  ResultPtr result(rraw);

  const json report = json::parse(fiddle_result_json(result.get()));
  for (const auto& c : report.at("checks")) {
    std::printf("%-32s %s  (%.1f ms)\n", c.at("name").get<std::string>().c_str(),
                c.at("passed").get<bool>() ? "PASS" : "FAIL",
                c.at("ms").get<double>());
    if (c.contains("detail"))
      std::printf("    %s\n", c.at("detail").get<std::string>().c_str());
  }
  std::printf("selftest: %s\n", all_passed ? "all checks passed" : "FAILURES");
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FIDDLE: factor-informed double deep learning ATE estimation"};
  app.require_subcommand(1);

  CommonOpts fit_opts, sim_opts, exp_opts;

  auto* fit = app.add_subcommand("fit", "Estimate the ATE on one CSV dataset");
  std::string fit_data, fit_out, fit_models;
  add_common(fit, fit_opts);
  fit->add_option("--data", fit_data, "input CSV (y,T,x1,...)")->required();
  fit->add_option("--out", fit_out, "write the result JSON here (default stdout)");
  fit->add_option("--save-models", fit_models, "write the fitted networks as JSON");

  auto* sim = app.add_subcommand("simulate", "Replication benchmark on synthetic data");
  std::string sim_grid, sim_methods, sim_out;
  int sim_threads = 0;
  add_common(sim, sim_opts);
  sim->add_option("--grid", sim_grid, "grid, e.g. n=2000;p=10,500");
  sim->add_option("--methods", sim_methods, "comma-separated method list");
  sim->add_option("--out", sim_out, "output prefix (<out>.csv and <out>.json)");
  sim->add_option("--threads", sim_threads, "replication parallelism (default FIDDLE_THREADS)");

  auto* exp = app.add_subcommand("export-dgp", "Write one synthetic dataset as CSV");
  std::int64_t exp_n = 0, exp_p = 0;
  std::string exp_out;
  bool exp_no_oracle = false;
  add_common(exp, exp_opts);
  exp->add_option("--n", exp_n, "observations");
  exp->add_option("--p", exp_p, "covariate dimension");
  exp->add_option("--out", exp_out, "output CSV path")->required();
  exp->add_flag("--no-oracle", exp_no_oracle, "omit pi_star/mu0_star/mu1_star columns");

  auto* self = app.add_subcommand("selftest", "Run the fast invariant suite");

  CLI11_PARSE(app, argc, argv);

  if (fit->parsed()) return cmd_fit(fit_opts, fit_data, fit_out, fit_models);
  if (sim->parsed()) return cmd_simulate(sim_opts, sim_grid, sim_methods, sim_out, sim_threads);
  if (exp->parsed()) return cmd_export_dgp(exp_opts, exp_n, exp_p, exp_out, exp_no_oracle);
  if (self->parsed()) return cmd_selftest();
  return 1;
}
