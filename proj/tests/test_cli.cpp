#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "saflab/cli.hpp"

namespace fs = std::filesystem;
using saflab::run_cli;

namespace {

struct Captured {
  int code = 0;
  std::string out, err;
};

Captured run(std::vector<std::string> args) {
  args.insert(args.begin(), "saflab");
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  Captured c;
  c.code = run_cli(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  c.out = out.str();
  c.err = err.str();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("saflab_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("help and bad flags", "[cli]") {
  auto r = run({"--help"});
  REQUIRE(r.code == 0);
  REQUIRE(r.out.find("simulate") != std::string::npos);
  REQUIRE(run({"simulate", "--help"}).code == 0);
  REQUIRE(run({"simulate", "--no-such-flag"}).code == 2);
  REQUIRE(run({}).code == 2);
  REQUIRE(run({"simulate", "--trials", "0"}).code == 2);
  REQUIRE(run({"simulate", "--algo", "lms9"}).code == 2);
}

TEST_CASE("theory subcommand reports the mean-square bound", "[cli]") {
  auto r = run({"theory", "--l", "128", "--theta", "1", "--h-norm-sq", "1"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["ms_bound"].get<double>() == 4.0);
  REQUIRE(j["stable_bound"].get<double>() <= 4.0);
  REQUIRE_FALSE(j.contains("predicted_msd"));
  REQUIRE(j["config_hash"].get<std::string>().size() == 16);

  r = run({"theory", "--l", "32", "--theta", "1", "--h-norm-sq", "1", "--mu", "0.5"});
  REQUIRE(r.code == 0);
  REQUIRE(nlohmann::json::parse(r.out).contains("predicted_msd"));
  r = run({"theory", "--l", "32", "--theta", "1", "--h-norm-sq", "1", "--mu", "1e6"});
  REQUIRE(r.code == 0);
  REQUIRE(nlohmann::json::parse(r.out)["unstable"] == true);
}

TEST_CASE("simulate writes hashed, reproducible outputs", "[cli]") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  const std::vector<std::string> common{"simulate", "--algo", "tls_nsaf,tlmm_nsaf", "--l", "32",
                                        "--iters", "300", "--trials", "2", "--seed", "5", "--plot"};
  auto args = common;
  args.insert(args.end(), {"--out", a.string()});
  REQUIRE(run(args).code == 0);
  args = common;
  args.insert(args.end(), {"--out", b.string()});
  REQUIRE(run(args).code == 0);
  const auto summary_b = slurp(b / "summary.json");
  REQUIRE(run(args).code == 0);
  REQUIRE(slurp(b / "summary.json") == summary_b);

  const auto csv = slurp(a / "nmsd.csv");
  REQUIRE(csv.rfind("# config=", 0) == 0);
  REQUIRE(csv.find("iter,tls_nsaf,tlmm_nsaf\n") != std::string::npos);
  REQUIRE(csv == slurp(b / "nmsd.csv"));
  REQUIRE(fs::exists(a / "nmsd.svg"));
  const std::string hash = csv.substr(9, 16);
  REQUIRE(slurp(a / "nmsd.svg").find(hash) != std::string::npos);
  REQUIRE(slurp(a / "summary.json").find(hash) != std::string::npos);
}

TEST_CASE("config file plus overriding flags", "[cli]") {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "good.json") << R"({"filter_len": 16, "iters": 100, "trials": 1,
      "algorithms": ["nsaf"], "input_noise": {"variance": 0.0}})";
    std::ofstream(dir / "bad.json") << R"({"filter_len": 16, "iterz": 100})";
    std::ofstream(dir / "broken.json") << "{ not json";
  }
  REQUIRE(run({"simulate", "--config", (dir / "good.json").string(), "--out", (dir / "o1").string()}).code == 0);
  REQUIRE(run({"simulate", "--config", (dir / "bad.json").string(), "--out", (dir / "o2").string()}).code == 2);
  REQUIRE(run({"simulate", "--config", (dir / "broken.json").string(), "--out", (dir / "o3").string()}).code == 2);
  REQUIRE(run({"simulate", "--config", (dir / "missing.json").string()}).code == 2);

  // --iters beats the file's value
  REQUIRE(run({"simulate", "--config", (dir / "good.json").string(), "--iters", "40", "--out",
               (dir / "o4").string()})
              .code == 0);
  const auto csv = slurp(dir / "o4" / "nmsd.csv");
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 2 + 40);
}

TEST_CASE("divergence-only runs fail", "[cli]") {
  const auto dir = scratch("div");
  REQUIRE(run({"simulate", "--algo", "nlms", "--mu", "4", "--l", "16", "--iters", "400",
               "--trials", "1", "--out", dir.string()})
              .code == 1);
}

TEST_CASE("sweep and aec subcommands", "[cli]") {
  const auto dir = scratch("sweep");
  auto r = run({"sweep", "--l", "16", "--steps", "0.05,0.1", "--noise-vars", "0.05", "--iters",
                "500", "--trials", "1", "--out", dir.string()});
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(dir / "sweep.csv"));
  REQUIRE(fs::exists(dir / "sweep.json"));

  const auto adir = scratch("aec");
  r = run({"aec", "--l", "32", "--iters", "500", "--trials", "1", "--out", adir.string()});
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(adir / "aec_nmsd.csv"));
  REQUIRE(fs::exists(adir / "residual_tlmm_nsaf.wav"));
  REQUIRE(fs::exists(adir / "aec_summary.json"));
}
