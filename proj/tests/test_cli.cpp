#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "convagg/csv_io.hpp"
#include "convagg/risk.hpp"

namespace fs = std::filesystem;
using namespace convagg;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(CONVAGG_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("convagg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("rates table") {
  const auto r = cli("rates --n-grid 100,1000 --m-grid 5,500");
  CHECK(r.code == 0);
  CHECK(count_lines(r.out) == 5);
  CHECK(r.out.rfind("n,M,psi,phi,regime,gap_ratio\n", 0) == 0);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(cli("rates --bogus").code == 1);
  CHECK(cli("").code == 1);
  CHECK(cli("solve --dict /nonexistent --samples /nonexistent").code == 1);
  CHECK(cli("rates --n-grid 10,x").code == 1);
}

TEST_CASE("generate, solve and sparsify") {
  const auto dir = scratch("solve");
  const auto gen = cli("generate --kind outside-hull --K 12 --M 4 --n 50 --seed 3 --out " + dir.string());
  REQUIRE(gen.code == 0);
  const auto weights = dir / "w.csv";
  const auto r = cli("solve --dict " + (dir / "dictionary.csv").string() + " --samples " +
                     (dir / "samples.csv").string() + " --tol 1e-10 --weights-out " + weights.string());
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["M"] == 4);
  CHECK(doc["n"] == 50);
  CHECK(doc["converged"] == true);

  const auto dict = io::load_dictionary((dir / "dictionary.csv").string());
  const auto sample = io::load_samples((dir / "samples.csv").string());
  const auto w = io::load_weights(weights.string());
  CHECK(empirical_risk(combine(dict, SimplexWeights(w)), sample) ==
        doctest::Approx(doc["empirical_risk"].get<double>()).epsilon(1e-10));

  const auto sp = cli("sparsify --dict " + (dir / "dictionary.csv").string() + " --weights " +
                      weights.string() + " --m 3 --problem " + (dir / "problem.csv").string());
  CHECK(sp.code == 0);
  CHECK(sp.out.rfind("metric,value\n", 0) == 0);
}

TEST_CASE("isomorphism subcommand") {
  const auto dir = scratch("iso");
  REQUIRE(cli("generate --K 8 --M 5 --seed 1 --out " + dir.string()).code == 0);
  const auto r = cli("isomorphism --problem " + (dir / "problem.csv").string() + " --dict " +
                     (dir / "dictionary.csv").string() + " --n 32 --segments 3 --reps 200 --x 1,2");
  CHECK(r.code == 0);
  CHECK(count_lines(r.out) == 3);
}

TEST_CASE("experiment writes trials and report") {
  const auto dir = scratch("exp");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "grid = 64:2, 128:4\nreplications = 3\natoms_K = 16\n";
  }
  const auto r = cli("experiment --config " + (dir / "run.cfg").string() + " --out " + dir.string());
  CHECK(r.code == 0);
  std::ifstream trials(dir / "trials.csv");
  std::stringstream ss;
  ss << trials.rdbuf();
  CHECK(count_lines(ss.str()) == 7);
  std::ifstream report(dir / "report.json");
  const auto doc = nlohmann::json::parse(report);
  CHECK(doc["cells"].size() == 2);

  std::ofstream(dir / "bad.cfg") << "grid = 64:2\nmystery = 4\n";
  CHECK(cli("experiment --config " + (dir / "bad.cfg").string() + " --out " + dir.string()).code == 1);
}
