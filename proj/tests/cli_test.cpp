// Drives the amod executable end to end and checks exit codes and outputs.
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int amod(const std::string& args) {
  const std::string cmd = std::string(AMOD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("amod_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("hindsight optimum at full scale is a capacity error") {
  CHECK(amod("run --mechanism optimal-hindsight --preset full --out ''") == 3);
}

TEST_CASE("invalid configuration exits with a diagnostic code") {
  CHECK(amod("run --preset enormous --out ''") == 2);
  CHECK(amod("run --settlement sometimes --out ''") == 2);
  CHECK(amod("run --config /nonexistent.json --out ''") == 2);
  CHECK(amod("bogus-verb") != 0);
}

TEST_CASE("two identical runs write byte-identical outputs") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(amod("run --replicates 1 --seed 7 --rounds 15 --no-timing --out " + a.string()) == 0);
  REQUIRE(amod("run --replicates 1 --seed 7 --rounds 15 --no-timing --out " + b.string()) == 0);
  for (const char* f : {"iors/seed_7.trace.jsonl", "iors/seed_7.metrics.csv", "iors/summary.json"}) {
    const std::string x = slurp(a / f);
    CHECK_FALSE(x.empty());
    CHECK(x == slurp(b / f));
  }
  CHECK(amod("replay " + (a / "iors/seed_7.trace.jsonl").string()) == 0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("config file overlays the preset and flags win") {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"demand": {"rounds": 6, "fleet_size": 7}, "settlement": "epoch"})";
  REQUIRE(amod("run --config " + (dir / "c.json").string() + " --vehicles 9 --no-timing --out " +
               (dir / "out").string()) == 0);
  const std::string summary = slurp(dir / "out/iors/summary.json");
  CHECK(summary.find("\"fleet_size\": 9") != std::string::npos);
  CHECK(summary.find("\"rounds\": 6") != std::string::npos);
  CHECK(summary.find("\"settlement\": \"epoch\"") != std::string::npos);
  std::ofstream(dir / "bad.json") << "{not json";
  CHECK(amod("run --config " + (dir / "bad.json").string() + " --out ''") == 2);
  fs::remove_all(dir);
}

TEST_CASE("compare needs at least two matching summaries") {
  const fs::path dir = scratch("compare");
  REQUIRE(amod("run --rounds 10 --replicates 2 --no-timing --out " + dir.string()) == 0);
  REQUIRE(amod("run --mechanism auction --rounds 10 --replicates 2 --no-timing --out " + dir.string()) == 0);
  const std::string iors = (dir / "iors/summary.json").string(), auction = (dir / "auction/summary.json").string();
  CHECK(amod("compare " + iors) == 2);
  CHECK(amod("compare " + iors + " " + auction + " --out " + (dir / "cmp.csv").string()) == 0);
  CHECK(slurp(dir / "cmp.csv").rfind("round,w_iors,w_auction\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("audit with zero manipulations exits cleanly") {
  CHECK(amod("audit --seeds 2 --per-seed 0 --rounds 10") == 0);
}

TEST_CASE("audit of the gate-removed fixture finds a gain and writes a repro bundle") {
  const fs::path dir = scratch("ungated");
  CHECK(amod("audit --mechanism iors-ungated --seeds 2 --per-seed 25 --rounds 40 --out " + dir.string()) == 1);
  const fs::path bundle = dir / "repro/gain_0.json";
  REQUIRE(fs::exists(bundle));
  CHECK(amod("audit --repro " + bundle.string()) == 1);
  fs::remove_all(dir);
}

}  // TEST_SUITE
