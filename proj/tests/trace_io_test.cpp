#include "amod/experiment.hpp"
#include "amod/trace_io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace amod;

TEST_SUITE("trace_io") {

TEST_CASE("decimal rendering is exact and rounds half up") {
  CHECK(decimal(Money(28, 5)) == "5.6");
  CHECK(decimal(Money(2, 3), 3) == "0.667");
  CHECK(decimal(Money(-1, 8), 2) == "-0.13");
  CHECK(decimal(Money(7)) == "7");
  CHECK(decimal(Money(0)) == "0");
}

TEST_CASE("money strings round-trip") {
  CHECK(parse_money("5.6") == Money(28, 5));
  CHECK(parse_money("20/7") == Money(20, 7));
  CHECK(parse_money(to_string(Money(-40, 63))) == Money(-40, 63));
}

TEST_CASE("config round-trips through JSON") {
  SimConfig c = preset("desk");
  c.mechanism = MechanismKind::Auction;
  c.settlement = SettlementMode::Epoch;
  c.grid.cost_per_block = Money(3, 2);
  c.max_accept_rate = Money(9, 4);
  c.demand.fleet_size = 2;
  c.initial_positions = {{1, 2}, {3, 4}};
  const Grid g(c.grid);
  c.scripted = std::vector<Request>{make_request(g, 9, {0, 0}, {2, 2}, 3, 8)};
  const SimConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.initial_positions == c.initial_positions);
  CHECK(back.scripted->front().effective_demand == 4);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"grid", {{"rows", "many"}}}}), ConfigError);
}

TEST_CASE("trace text round-trips every event") {
  SimConfig c = preset("desk");
  c.demand.rounds = 8;
  c.settlement = SettlementMode::Epoch;
  const SimTrace t = run(c);
  std::istringstream in(trace_text(t));
  const LoadedTrace loaded = read_trace(in);
  CHECK(loaded.mechanism == "iors");
  CHECK(config_to_json(loaded.config) == config_to_json(c));
  CHECK(loaded.events == t.events);
}

TEST_CASE("malformed traces are input errors") {
  std::istringstream empty("");
  CHECK_THROWS_AS(read_trace(empty), InputError);
  std::istringstream wrong(R"({"schema":"other"})" "\n");
  CHECK_THROWS_AS(read_trace(wrong), InputError);
  std::istringstream bad(R"({"schema":"amod-trace","schema_version":1,"config":{}})" "\n{nope\n");
  CHECK_THROWS_AS(read_trace(bad), InputError);
}

TEST_CASE("metrics CSV carries provenance and the fixed header") {
  SimConfig c = preset("desk");
  c.demand.rounds = 4;
  const SimTrace t = run(c);
  std::ostringstream out;
  write_metrics_csv(out, t);
  std::istringstream lines(out.str());
  std::string l1, l2, l3;
  std::getline(lines, l1);
  std::getline(lines, l2);
  std::getline(lines, l3);
  CHECK(l1.rfind("# amod 1.0.0 mechanism=iors seed=1", 0) == 0);
  CHECK(l2.rfind("# config {", 0) == 0);
  CHECK(l3 == "round,total_cost,served_demand,w_prime,w,revenue,open_requests,expired,rejected");
  int rows = 0;
  for (std::string l; std::getline(lines, l);) ++rows;
  CHECK(rows == static_cast<int>(t.rows.size()));
}

TEST_CASE("experiment summary and compare") {
  RunConfig rc;
  rc.sim = preset("desk");
  rc.sim.demand.rounds = 15;
  rc.replicates = 3;
  rc.jobs = 1;
  rc.timing = false;
  const auto dir = std::filesystem::temp_directory_path() / "amod_experiment_test";
  std::filesystem::remove_all(dir);
  rc.out = dir.string();
  const ExperimentResult a = run_experiment(rc);
  CHECK(a.files.size() == 7);
  const auto& s = a.summary;
  CHECK(s.at("seeds") == nlohmann::json::array({1, 2, 3}));
  for (const char* key : {"mechanism", "config", "w_mean", "w_std", "revenue_mean", "served_demand_mean",
                          "runtime_ms_mean", "artifact_version"})
    CHECK(s.contains(key));
  CHECK(s.at("runtime_ms_mean").is_null());

  double mean = 0;
  for (const auto& r : a.replicates) mean += to_double(*r.final.w);
  CHECK(s.at("w_mean").get<double>() == doctest::Approx(mean / 3));

  // Self-comparison gives ratio 1; a single summary is refused.
  const std::string table = compare({s, s});
  CHECK(table.find("iors,") != std::string::npos);
  CHECK(table.find(",1.000000\niors,") != std::string::npos);
  CHECK_THROWS_AS(compare({s}), InputError);

  RunConfig other = rc;
  other.sim.mechanism = MechanismKind::Auction;
  other.out.clear();
  const auto b = run_experiment(other);
  CHECK_NOTHROW(compare({s, b.summary}));
  other.sim.demand.rounds = 16;
  CHECK_THROWS_AS(compare({s, run_experiment(other).summary}), InputError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("parallel replicates write byte-identical files") {
  RunConfig rc;
  rc.sim = preset("desk");
  rc.sim.demand.rounds = 15;
  rc.replicates = 3;
  rc.timing = false;
  const auto base = std::filesystem::temp_directory_path() / "amod_jobs_test";
  std::filesystem::remove_all(base);
  rc.jobs = 1;
  rc.out = (base / "one").string();
  const auto a = run_experiment(rc);
  rc.jobs = 3;
  rc.out = (base / "three").string();
  const auto b = run_experiment(rc);
  REQUIRE(a.files.size() == b.files.size());
  const auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  for (std::size_t i = 0; i < a.files.size(); ++i) CHECK(slurp(a.files[i]) == slurp(b.files[i]));
  std::filesystem::remove_all(base);
}

}  // TEST_SUITE
