#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "brownlab/cli.hpp"
#include "brownlab/errors.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace brownlab;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI binary named by BROWNLAB_CLI with stderr discarded.
Run run_cli(const std::string& args) {
  const char* bin = std::getenv("BROWNLAB_CLI");
  REQUIRE_MESSAGE(bin != nullptr, "BROWNLAB_CLI must point at the brownlab binary");
  const std::string cmd = std::string("\"") + bin + "\" " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Run r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("brownlab_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  return line;
}

// Parses the one-line summary and checks its schema.
json summary(const Run& r, const std::string& cmd) {
  REQUIRE(!r.out.empty());
  CHECK(r.out.find('\n') == r.out.size() - 1);
  const json j = json::parse(r.out);
  CHECK(j.size() == 4);
  CHECK(j.at("cmd") == cmd);
  CHECK(j.at("elapsed_ms").is_number());
  CHECK(j.at("outputs").is_array());
  CHECK(j.at("status").is_string());
  for (const auto& p : j.at("outputs")) CHECK(fs::exists(p.get<std::string>()));
  return j;
}

}  // namespace

TEST_CASE("parse_complex") {
  CHECK(parse_complex("1+0.5i") == cplx(1, 0.5));
  CHECK(parse_complex("1-0.5i") == cplx(1, -0.5));
  CHECK(parse_complex("2") == cplx(2, 0));
  CHECK(parse_complex("-3.5") == cplx(-3.5, 0));
  CHECK(parse_complex("i") == cplx(0, 1));
  CHECK(parse_complex("-i") == cplx(0, -1));
  CHECK(parse_complex("+2j") == cplx(0, 2));
  CHECK(parse_complex("1+i") == cplx(1, 1));
  CHECK(parse_complex("1e-3+2e+1i") == cplx(1e-3, 20));
  CHECK(parse_complex(" 1 + 1i ") == cplx(1, 1));
  for (const char* bad : {"", "abc", "1+", "1+2k", "1,5", "1+2i3", "--1"}) CHECK_THROWS_AS(parse_complex(bad), ValidationError);
}

TEST_CASE("resolve_measure") {
  CHECK(resolve_measure("delta1").size() == 1);
  CHECK(resolve_measure("four_points").size() == 4);
  CHECK(resolve_measure(R"({"atoms":[{"angle":0,"weight":1},{"angle":1,"weight":3}]})").weights()(1) ==
        doctest::Approx(0.75));
  const fs::path dir = scratch("measure");
  fs::create_directories(dir);
  std::ofstream(dir / "m.json") << R"({"atoms":[{"angle":0.5,"weight":2}]})";
  CHECK(resolve_measure((dir / "m.json").string()).angles()(0) == 0.5);
  CHECK_THROWS_AS(resolve_measure("no_such_measure"), ValidationError);
}

TEST_CASE("invalid input exits with 2") {
  const fs::path dir = scratch("invalid");
  // |τ − s| > s
  Run r = run_cli("domain --measure delta1 --s 1 --tau 3 --out " + dir.string());
  CHECK(r.code == 2);
  CHECK(summary(r, "domain").at("status") == "invalid_input");
  CHECK(run_cli("domain --s 1 --tau 1+x --out " + dir.string()).code == 2);
  CHECK(run_cli("domain --measure nowhere --out " + dir.string()).code == 2);
  CHECK(run_cli("simulate --N 1 --out " + dir.string()).code == 2);
  CHECK(run_cli("simulate --N 10 --scheme leapfrog --out " + dir.string()).code == 2);
  CHECK(run_cli("bogus").code == 2);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("--help").code == 0);
}

TEST_CASE("domain writes the profile and the boundary") {
  const fs::path dir = scratch("domain");
  const Run r = run_cli("domain --measure four_points --s 1 --tau 1+0.5i --n 256 --out " + dir.string());
  CHECK(r.code == 0);
  const json j = summary(r, "domain");
  CHECK(j.at("status") == "ok");
  CHECK(first_line(dir / "domain.csv") == "theta,r_s,I_s,R_s,phi_s,delta,v1,v2");
  CHECK(first_line(dir / "boundary.csv") == "x,y,arc");
}

TEST_CASE("density writes CSV and PGM rasters") {
  const fs::path dir = scratch("density");
  const Run r = run_cli("density --measure delta1 --s 3 --tau 1+1i --nx 64 --out " + dir.string());
  CHECK(r.code == 0);
  summary(r, "density");
  CHECK(first_line(dir / "density.csv") == "x,y,density");
  CHECK(first_line(dir / "density.pgm").rfind("P", 0) == 0);
  CHECK(first_line(dir / "log_density.csv") == "rho,theta,density");
  CHECK(fs::exists(dir / "log_density.pgm"));
}

TEST_CASE("sample is deterministic given the seed") {
  const fs::path a = scratch("sample_a"), b = scratch("sample_b"), c = scratch("sample_c");
  const std::string base = "sample --measure four_points --s 1 --tau 1+0.5i --n 500 ";
  CHECK(run_cli(base + "--seed 3 --threads 1 --out " + a.string()).code == 0);
  CHECK(run_cli(base + "--seed 3 --threads 2 --out " + b.string()).code == 0);
  CHECK(run_cli(base + "--seed 4 --out " + c.string()).code == 0);
  CHECK(slurp(a / "sample.csv") == slurp(b / "sample.csv"));
  CHECK(slurp(a / "sample.csv") != slurp(c / "sample.csv"));
  CHECK(first_line(a / "sample.csv") == "x,y");
}

TEST_CASE("potential, pde-check, pushforward and moments") {
  const fs::path dir = scratch("misc");
  const std::string common = " --measure delta1 --s 1 --tau 1+0.5i --out " + dir.string();
  Run r = run_cli("potential --nx 6 --lambda 0.3+0.1i --lambda 2" + common);
  CHECK(r.code == 0);
  summary(r, "potential");
  CHECK(first_line(dir / "potential.csv") == "x,y,eps,S,dS_dx,dS_dy,dS_deps");

  r = run_cli("pde-check --n 4 --fd-step 2e-3" + common);
  CHECK(r.code == 0);
  summary(r, "pde-check");
  CHECK(first_line(dir / "pde_check.csv") == "lambda_x,lambda_y,eps,residual_tau,residual_r");

  r = run_cli("pushforward --n 2000" + common);
  CHECK(r.code == 0);
  summary(r, "pushforward");
  CHECK(json::parse(slurp(dir / "pushforward.json")).contains("sup_discrepancy"));

  r = run_cli("moments --max-len 3 --steps 64" + common);
  CHECK(r.code == 0);
  summary(r, "moments");
  CHECK(json::parse(slurp(dir / "moments.json")).is_array());
  CHECK(run_cli("moments --max-len 11" + common).code == 2);
}

TEST_CASE("simulate and compare") {
  const fs::path dir = scratch("sim");
  const std::string common = " --measure four_points --s 1 --tau 1+0.5i --out " + dir.string();
  Run r = run_cli("simulate --N 20 --samples 2 --steps 20" + common);
  CHECK(r.code == 0);
  summary(r, "simulate");
  CHECK(first_line(dir / "eigenvalues.csv") == "x,y,sample_index");
  const json sim = json::parse(slurp(dir / "simulate.json"));
  CHECK(sim.contains("inside_fraction"));
  CHECK(sim.contains("chi2"));

  r = run_cli("compare --N 20 --samples 4 --steps 20 --max-len 2 --lambda 2" + common);
  CHECK(r.code == 0);
  summary(r, "compare");
  const json cmp = json::parse(slurp(dir / "compare.json"));
  CHECK(cmp.contains("moments_max_z"));
  CHECK(cmp.contains("potential_max_z"));
}
