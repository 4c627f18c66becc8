#include "catch_amalgamated.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

const fs::path cli = MSP_CLI_PATH;
const fs::path scenarios = MSP_SCENARIO_DIR;

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "msp_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Run {
  int code = -1;
  std::string out;
};

Run invoke(const std::string& args) {
  const auto log = work_dir() / "last.log";
  const std::string cmd = "\"" + cli.string() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream s;
  s << in.rdbuf();
  r.out = s.str();
  return r;
}

/// Maximum of one diagnostics column over the rows where it has a value.
double column_max(const fs::path& csv, const std::string& column) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "# msp-diagnostics v1");
  std::getline(in, line);
  std::vector<std::string> header;
  for (std::stringstream ss(line); std::getline(ss, line, ',');) header.push_back(line);
  const auto idx = std::find(header.begin(), header.end(), column) - header.begin();
  REQUIRE(idx < static_cast<long>(header.size()));
  double m = 0.0;
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (static_cast<std::size_t>(idx) < cells.size() && !cells[idx].empty()) m = std::max(m, std::stod(cells[idx]));
    ++rows;
  }
  REQUIRE(rows > 0);
  return m;
}

}  // namespace

TEST_CASE("free-particle scenario", "[cli]") {
  const auto out = work_dir() / "free-particle";
  const auto r = invoke("run \"" + (scenarios / "free-particle.json").string() + "\" --output-dir \"" + out.string() + "\"");
  INFO(r.out);
  REQUIRE(r.code == 0);
  CHECK(column_max(out / "diagnostics.csv", "l2_drift") <= 1e-8);
  CHECK(column_max(out / "diagnostics.csv", "div_residual_A") <= 1e-9);
  CHECK(fs::exists(out / "convergence.csv"));
  CHECK(nlohmann::json::parse(std::ifstream(out / "summary.json"))["status"] == "converged");
}

TEST_CASE("n2-fermion scenario keeps the antisymmetry", "[cli]") {
  const auto out = work_dir() / "n2-fermion";
  const auto r = invoke("run \"" + (scenarios / "n2-fermion.json").string() + "\" -o \"" + out.string() + "\"");
  INFO(r.out);
  REQUIRE(r.code == 0);
  CHECK(column_max(out / "diagnostics.csv", "symmetry_residual") <= 1e-7);
  CHECK(column_max(out / "diagnostics.csv", "l2_drift") <= 1e-8);
}

TEST_CASE("seed override and snapshot info", "[cli]") {
  const auto a = work_dir() / "small-a", b = work_dir() / "small-b", c = work_dir() / "small-c";
  const auto config = (scenarios / "small-data.json").string();
  REQUIRE(invoke("run \"" + config + "\" -o \"" + a.string() + "\"").code == 0);
  REQUIRE(invoke("run \"" + config + "\" -o \"" + b.string() + "\"").code == 0);
  REQUIRE(invoke("run \"" + config + "\" -o \"" + c.string() + "\" --seed 99").code == 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  CHECK(slurp(a / "diagnostics.csv") == slurp(b / "diagnostics.csv"));
  CHECK(slurp(a / "psi_final.msp") == slurp(b / "psi_final.msp"));
  CHECK(slurp(a / "diagnostics.csv") != slurp(c / "diagnostics.csv"));

  const auto info = invoke("info \"" + (a / "psi_final.msp").string() + "\"");
  CHECK(info.code == 0);
  CHECK(info.out.find("\"kind\": \"wavefunction\"") != std::string::npos);
  const auto at = info.out.find("l2_norm ");
  REQUIRE(at != std::string::npos);
  CHECK(std::abs(std::stod(info.out.substr(at + 8)) - 1.0) <= 1e-8);
  const auto field = invoke("info \"" + (a / "A_final.msp").string() + "\"");
  CHECK(field.code == 0);
  CHECK(field.out.find("divergence_residual") != std::string::npos);
  CHECK(invoke("info \"" + (a / "missing.msp").string() + "\"").code == 1);
}

TEST_CASE("malformed configuration", "[cli]") {
  auto j = nlohmann::json::parse(std::ifstream(scenarios / "free-particle.json"));
  j["grid"]["points"] = 31;
  j["physics"]["c"] = -1.0;
  const auto bad = work_dir() / "odd.json";
  const auto out = work_dir() / "odd-out";
  std::ofstream(bad) << j.dump();
  const auto r = invoke("run \"" + bad.string() + "\" -o \"" + out.string() + "\"");
  CHECK(r.code == 2);
  CHECK(r.out.find("2 problems") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
  CHECK(invoke("run \"" + (work_dir() / "nowhere.json").string() + "\"").code == 2);
  CHECK(invoke("launch").code == 2);
}

TEST_CASE("verify subcommand", "[cli]") {
  const auto empty = invoke("verify --subset");
  CHECK(empty.code == 0);
  CHECK(empty.out.find("0 checks, 0 failed") != std::string::npos);
  const auto clean = invoke("verify --subset helmholtz,klein_gordon");
  CHECK(clean.code == 0);
  CHECK(clean.out.find("FAIL") == std::string::npos);
  const auto faulty = invoke("verify --subset coupler --inject-fault divergence");
  CHECK(faulty.code == 6);
  CHECK(faulty.out.find("FAIL coupler       initial_divergence") != std::string::npos);
  CHECK(invoke("verify --subset unknown").code == 2);
}
