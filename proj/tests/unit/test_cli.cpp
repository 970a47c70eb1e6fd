#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "regdet/errors.hpp"
#include "regdet/io.hpp"

using namespace regdet;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "regdet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / ("regdet_test_" + name); }

}  // namespace

TEST_CASE("grid parsing") {
  auto g = cli::parse_grid("16:4096:x2");
  CHECK(g.start == 16);
  CHECK(g.stop == 4096);
  CHECK(g.ratio == 2);
  CHECK(cli::integer_grid(g).size() == 9);
  CHECK_THROWS_AS(cli::parse_grid("16:4096:2"), InputError);
  CHECK_THROWS_AS(cli::parse_grid("16:4096:x1.1"), InputError);
  CHECK_THROWS_AS(cli::parse_grid("16:8:x2"), InputError);
  CHECK_THROWS_AS(cli::parse_grid("16"), InputError);
}

TEST_CASE("expansion JSON round trip") {
  Expansion e(Direction::ToZero, {{-1, 1, 2.5}, {0, 0, -1.0}}, Remainder{1.0, 0});
  auto back = expansion_from_json(expansion_to_json(e));
  CHECK(back.direction() == Direction::ToZero);
  REQUIRE(back.terms().size() == 2);
  CHECK(back.coefficient(-1, 1) == 2.5);
  CHECK(back.remainder().alpha == 1.0);
  CHECK_THROWS_AS(expansion_from_json(json{{"direction", "sideways"}, {"terms", json::array()}}), InputError);
}

TEST_CASE("fnv1a") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("cli examples") {
  auto a = run({"main-theorem", "--m", "1", "--n-grid", "16:4096:x2"});
  CHECK(a.code == cli::kOk);
  CHECK(a.out.find("PASS") != std::string::npos);
  CHECK(a.out.find("3.675754") != std::string::npos);
  auto b = run({"logdet", "--m", "1", "--n", "3"});
  CHECK(b.code == cli::kOk);
  CHECK(b.out.find("-0.7598345") != std::string::npos);
  auto c = run({"interchange-check", "--all", "--tol", "1e-6"});
  CHECK(c.code == cli::kOk);
}

TEST_CASE("cli exit codes") {
  CHECK(run({}).code == cli::kInvalidInput);
  CHECK(run({"logdet", "--m", "0", "--n", "3"}).code == cli::kInvalidInput);
  CHECK(run({"main-theorem", "--n-grid", "16:4096:x1.1"}).code == cli::kInvalidInput);
  CHECK(run({"logdet", "--n", "3", "--tol", "-1"}).code == cli::kInvalidInput);
  CHECK(run({"--help"}).code == cli::kOk);
  // A tail basis that cannot describe the integrand.
  CHECK(run({"regint", "--integrand", "lorentz", "--basis-inf", "-1:0"}).code == cli::kNumericalFailure);
  // Pass/fail against a reference with an impossible tolerance.
  CHECK(run({"main-theorem", "--m", "1", "--n-grid", "16:1024:x2", "--tol", "1e-15"}).code == cli::kAcceptanceFail);
}

TEST_CASE("cli reports are reproducible and carry a criterion") {
  auto j1 = tmp("a.json"), j2 = tmp("b.json"), csv = tmp("s.csv");
  auto r1 = run({"logdet", "--m", "2", "--n-grid", "4:64:x2", "--json", j1.string(), "--csv", csv.string()});
  auto r2 = run({"logdet", "--m", "2", "--n-grid", "4:64:x2", "--json", j2.string()});
  REQUIRE(r1.code == cli::kOk);
  REQUIRE(r2.code == cli::kOk);
  auto d1 = json::parse(slurp(j1)), d2 = json::parse(slurp(j2));
  d1.erase("timing_s");
  d2.erase("timing_s");
  CHECK(d1.dump() == d2.dump());
  CHECK(d1["criterion"] == "AC1");
  CHECK(d1["pass"] == true);
  std::string text = slurp(csv);
  CHECK(text.rfind("# config-hash " + d1["config_hash"].get<std::string>() + "\nn,value\n4,", 0) == 0);
  fs::remove(j1);
  fs::remove(j2);
  fs::remove(csv);
}

TEST_CASE("cli config file with flag override") {
  auto cfg = tmp("c.toml"), j = tmp("c.json");
  {
    std::ofstream out(cfg);
    out << "# main theorem run\nm = 1\nn-grid = \"16:64:x2\"\n";
  }
  // Three grid points cannot fit four basis terms.
  CHECK(run({"main-theorem", "--config", cfg.string()}).code == cli::kInvalidInput);
  auto r = run({"main-theorem", "--config", cfg.string(), "--n-grid", "16:4096:x2", "--json", j.string()});
  CHECK(r.code == cli::kOk);
  auto d = json::parse(slurp(j));
  CHECK(d["inputs"]["n-grid"] == "16:4096:x2");
  CHECK(d["criterion"] == "AC2");
  fs::remove(cfg);
  fs::remove(j);
}
