// End-to-end exercises of the installed CLI binary; the path arrives through
// the FIDDLE_CLI environment variable set by CTest.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;

namespace {

std::string cli() {
  const char* path = std::getenv("FIDDLE_CLI");
  REQUIRE_MESSAGE(path != nullptr, "FIDDLE_CLI must point at the CLI binary");
  return path;
}

int run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), path.c_str());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Cleanup {
  std::vector<std::string> paths;
  ~Cleanup() {
    for (const auto& p : paths) std::remove(p.c_str());
  }
};

}  // namespace

TEST_CASE("export-dgp then fit twice is byte-identical") {
  Cleanup tmp{{"/tmp/fiddle_cli_data.csv", "/tmp/fiddle_cli_fit1.json",
               "/tmp/fiddle_cli_fit2.json", "/tmp/fiddle_cli_models.json"}};

  REQUIRE(run("export-dgp --n 220 --p 12 --seed 3 --out /tmp/fiddle_cli_data.csv") == 0);

  std::ofstream("/tmp/fiddle_cli_cfg.json")
      << R"({"m_pretrain":20,"rbar":5,"fastnn":{"width":12,"epochs":3}})";
  Cleanup tmp2{{"/tmp/fiddle_cli_cfg.json"}};

  REQUIRE(run("fit --data /tmp/fiddle_cli_data.csv --method fiddle --seed 7 "
              "--config /tmp/fiddle_cli_cfg.json --out /tmp/fiddle_cli_fit1.json "
              "--save-models /tmp/fiddle_cli_models.json") == 0);
  REQUIRE(run("fit --data /tmp/fiddle_cli_data.csv --method fiddle --seed 7 "
              "--config /tmp/fiddle_cli_cfg.json --out /tmp/fiddle_cli_fit2.json") == 0);

  CHECK(slurp("/tmp/fiddle_cli_fit1.json") == slurp("/tmp/fiddle_cli_fit2.json"));

  const json result = json::parse(slurp("/tmp/fiddle_cli_fit1.json"));
  CHECK(result.at("method") == "fiddle");
  CHECK(result.at("ci")[0].get<double>() <= result.at("estimate").get<double>());

  const json models = json::parse(slurp("/tmp/fiddle_cli_models.json"));
  CHECK(models.at("mu1").at("format") == "fastnn");
}

TEST_CASE("oracle fit requires the oracle columns") {
  Cleanup tmp{{"/tmp/fiddle_cli_plain.csv"}};
  REQUIRE(run("export-dgp --n 80 --p 8 --seed 5 --no-oracle "
              "--out /tmp/fiddle_cli_plain.csv") == 0);
  CHECK(run("fit --data /tmp/fiddle_cli_plain.csv --method oracle_ipw") != 0);
}

TEST_CASE("simulate writes the benchmark table") {
  Cleanup tmp{{"/tmp/fiddle_cli_bench.csv", "/tmp/fiddle_cli_bench.json"}};
  REQUIRE(run("simulate --grid 'n=250;p=8' --methods oracle_aipw,oracle_ipw --reps 3 "
              "--seed 11 --out /tmp/fiddle_cli_bench") == 0);

  const std::string csv = slurp("/tmp/fiddle_cli_bench.csv");
  CHECK(csv.find("method,n,p,rmse,se,reps,wallclock") == 0);
  CHECK(csv.find("oracle_aipw,250,8,") != std::string::npos);
  CHECK(csv.find("oracle_ipw,250,8,") != std::string::npos);

  const json j = json::parse(slurp("/tmp/fiddle_cli_bench.json"));
  CHECK(j.at("rows").size() == 2);
  CHECK(j.at("seed") == 11);

  // byte-identical rerun modulo the wallclock column
  Cleanup tmp2{{"/tmp/fiddle_cli_bench2.csv", "/tmp/fiddle_cli_bench2.json"}};
  REQUIRE(run("simulate --grid 'n=250;p=8' --methods oracle_aipw,oracle_ipw --reps 3 "
              "--seed 11 --out /tmp/fiddle_cli_bench2") == 0);
  auto strip_wallclock = [](const json& doc) {
    json out = doc;
    for (auto& row : out.at("rows")) row.erase("wallclock");
    return out;
  };
  CHECK(strip_wallclock(j) == strip_wallclock(json::parse(slurp("/tmp/fiddle_cli_bench2.json"))));
}

TEST_CASE("bad arguments exit nonzero") {
  CHECK(run("fit") != 0);                                  // --data required
  CHECK(run("fit --data /nope/missing.csv") != 0);
  CHECK(run("simulate --grid 'q=1'") != 0);
  CHECK(run("export-dgp --n 10 --p 3 --out /tmp/x.csv") != 0);  // p too small
  CHECK(run("nonsense") != 0);
}
