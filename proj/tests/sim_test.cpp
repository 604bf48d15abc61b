#include "amod/audit.hpp"
#include "amod/experiment.hpp"
#include "amod/sim.hpp"
#include "amod/trace_io.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

using namespace amod;

namespace {

SimConfig desk(Round rounds, MechanismKind m = MechanismKind::Iors, SettlementMode s = SettlementMode::Literal) {
  SimConfig c = preset("desk");
  c.demand.rounds = rounds;
  c.mechanism = m;
  c.settlement = s;
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Properties every finished trace must satisfy.
void check_trace_invariants(const SimTrace& t) {
  const Money& cpb = t.config.grid.cost_per_block;
  Money prev_cost = 0;
  for (const MetricRow& r : t.rows) {
    REQUIRE(r.served + r.expired + r.rejected + r.open_requests == r.generated);
    REQUIRE(r.total_cost >= prev_cost);
    prev_cost = r.total_cost;
    if (r.w) REQUIRE(*r.w >= 0);
    if (r.served_demand == 0) REQUIRE_FALSE(r.w_prime);
  }
  std::int64_t assigned_blocks = 0;
  for (const Event& e : t.events)
    if (e.type == EventType::Assign) assigned_blocks += *e.delta_blocks;
  CHECK(cpb * assigned_blocks == t.final.total_cost);
  for (const auto& [id, r] : t.records) {
    if (r.status != RequestStatus::Delivered) continue;
    CHECK(r.pickup_round <= r.request.latest_departure);
    CHECK(r.pickup_round >= r.request.arrival);
    REQUIRE(r.payment);
    if (r.quote) CHECK(*r.payment <= *r.quote);
  }
  const IrBbReport rep = check_ir_and_bb(t);
  CHECK(rep.ir_violations.empty());
  CHECK(rep.epoch_mismatches.empty());
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("demand pool: zero deviation gives the mean everywhere") {
  DemandConfig d;
  d.pool_mean = 37;
  d.pool_stddev = 0;
  const auto pool = build_demand_pool(d);
  REQUIRE(pool.size() == 500);
  CHECK(std::all_of(pool.begin(), pool.end(), [](std::int64_t x) { return x == 37; }));
}

TEST_CASE("demand pool: full-scale parameters stay within the three-sigma band") {
  DemandConfig d;  // N(1000, 100), 500 values
  const auto pool = build_demand_pool(d);
  REQUIRE(pool.size() == 500);
  const auto inside = std::count_if(pool.begin(), pool.end(), [](std::int64_t x) { return x >= 700 && x <= 1300; });
  CHECK(std::all_of(pool.begin(), pool.end(), [](std::int64_t x) { return x >= 0; }));
  CHECK(inside >= 495);  // expected 498.65; 5 or more outside has probability < 1e-3
  double mean = 0;
  for (auto x : pool) mean += static_cast<double>(x);
  mean /= 500;
  CHECK(mean == doctest::Approx(1000).epsilon(0.02));
}

TEST_CASE("demand pool: negative draws are clamped and seeds are reproducible") {
  DemandConfig d;
  d.pool_mean = 1;
  d.pool_stddev = 5;
  const auto pool = build_demand_pool(d);
  CHECK(std::all_of(pool.begin(), pool.end(), [](std::int64_t x) { return x >= 0; }));
  CHECK(std::count(pool.begin(), pool.end(), 0) > 100);
  CHECK(build_demand_pool(d) == pool);
  d.seed = 2;
  CHECK(build_demand_pool(d) != pool);
}

TEST_CASE("request generation examples") {
  GridConfig g;
  g.rows = g.cols = 101;
  DemandConfig d;  // waiting 10..100, radius 50
  CHECK(generate_requests(g, d, 3, 0).empty());
  const auto reqs = generate_requests(g, d, 7, 2000);
  REQUIRE(reqs.size() == 2000);
  const Grid grid(g);
  std::set<RequestId> ids;
  Round min_wait = 1000, max_wait = 0;
  for (const Request& r : reqs) {
    CHECK(r.arrival == 7);
    const Round wait = r.latest_departure - r.arrival;
    min_wait = std::min(min_wait, wait);
    max_wait = std::max(max_wait, wait);
    REQUIRE(wait >= 10);
    REQUIRE(wait <= 100);
    REQUIRE(oracle::manhattan(r.origin, {50, 50}) <= 50);
    REQUIRE(oracle::manhattan(r.destination, {50, 50}) <= 50);
    REQUIRE(r.origin != r.destination);
    REQUIRE(r.effective_demand == oracle::manhattan(r.origin, r.destination));
    ids.insert(r.id);
  }
  CHECK(ids.size() == reqs.size());
  CHECK(min_wait <= 12);
  CHECK(max_wait >= 98);
}

TEST_CASE("request draws are keyed per request, not sequential") {
  GridConfig g;
  DemandConfig d = preset("desk").demand;
  const auto ten = generate_requests(g, d, 4, 10);
  const auto five = generate_requests(g, d, 4, 5);
  for (std::size_t i = 0; i < five.size(); ++i) {
    CHECK(five[i].origin == ten[i].origin);
    CHECK(five[i].destination == ten[i].destination);
    CHECK(five[i].latest_departure == ten[i].latest_departure);
  }
}

TEST_CASE("demand config validation") {
  SimConfig c = preset("desk");
  c.demand.waiting_min = 20;
  c.demand.waiting_max = 10;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = preset("desk");
  c.demand.od_radius = 40;  // exceeds the 21x21 grid
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(preset("huge"), ConfigError);
  CHECK_THROWS_AS(parse_mechanism("greedy"), ConfigError);
}

TEST_CASE("zero rounds gives an empty run") {
  const SimTrace t = run(desk(0));
  CHECK(t.rows.empty());
  CHECK(t.final.total_cost == 0);
  CHECK(t.final.generated == 0);
  CHECK(std::none_of(t.events.begin(), t.events.end(), [](const Event& e) { return e.type == EventType::Request; }));
}

TEST_CASE("idle rounds leave the cost unchanged") {
  SimConfig c = desk(5);
  c.scripted = std::vector<Request>{};
  const SimTrace t = run(c);
  REQUIRE(t.rows.size() == 5);
  for (const MetricRow& r : t.rows) {
    CHECK(r.total_cost == 0);
    CHECK_FALSE(r.w);
  }
}

TEST_CASE("single passenger lifecycle event order") {
  SimConfig c = desk(3);
  const Grid g(c.grid);
  c.scripted = std::vector<Request>{make_request(g, 1, {10, 12}, {14, 12}, 1, 30)};
  const SimTrace t = run(c);
  std::vector<EventType> seen;
  for (const Event& e : t.events)
    if (e.request == 1) seen.push_back(e.type);
  const std::vector<EventType> expected{EventType::Request, EventType::Quote,   EventType::Assign,
                                        EventType::Pickup,  EventType::Dropoff, EventType::Payment};
  CHECK(seen == expected);
  const RequestRecord& r = t.records.at(1);
  CHECK(*r.quote == 6);  // deadhead 2 + trip 4 from the centre depot
  CHECK(*r.payment == 6);
  CHECK(r.pickup_round == 1 + 4);
  CHECK(r.dropoff_round == 1 + 4 + 8);
  for (std::size_t i = 1; i < t.events.size(); ++i) {
    CHECK(t.events[i].seq == t.events[i - 1].seq + 1);
    CHECK(t.events[i].round >= t.events[i - 1].round);
  }
}

TEST_CASE("desk runs satisfy the trace invariants for every mechanism") {
  for (MechanismKind m : {MechanismKind::Iors, MechanismKind::Auction, MechanismKind::OptimalRound})
    for (SettlementMode s : {SettlementMode::Literal, SettlementMode::Epoch}) {
      CAPTURE(to_string(m));
      CAPTURE(to_string(s));
      const SimTrace t = run(desk(30, m, s));
      check_trace_invariants(t);
      CHECK(t.final.generated > 300);
      CHECK(t.final.served_count > 0);
      CHECK(t.horizon_end >= 29);
      if (t.config.effective_settlement() == SettlementMode::Epoch) CHECK(check_ir_and_bb(t).residual == 0);
    }
}

TEST_CASE("same seed gives identical traces; different seeds differ") {
  SimConfig c = desk(25);
  const std::string a = trace_text(run(c));
  CHECK(trace_text(run(c)) == a);
  c.demand.seed = 2;
  const SimTrace other = run(c);
  check_trace_invariants(other);
  CHECK(trace_text(other) != a);
}

TEST_CASE("golden trace is reproduced byte for byte") {
  SimConfig c = desk(10);
  c.demand.seed = 1;
  const std::string golden = read_file(std::string(AMOD_TEST_DATA_DIR) + "/golden/desk10_iors_seed1.trace.jsonl");
  REQUIRE_FALSE(golden.empty());
  CHECK(trace_text(run(c)) == golden);
}

TEST_CASE("a branched simulation equals a full rerun with the same demand") {
  SimConfig base = desk(30);
  base.demand.seed = 4;
  std::vector<Request> demand;
  {
    const DemandModel model(base.grid, base.demand);
    demand = model.generate_all();
  }
  // Alter one round-12 report: arrive two rounds later.
  auto it = std::find_if(demand.begin(), demand.end(), [](const Request& r) { return r.arrival == 12; });
  REQUIRE(it != demand.end());
  it->arrival += 2;
  it->latest_departure = std::max(it->latest_departure, it->arrival);

  Simulation sim(base);
  while (sim.now() < 12) sim.step();
  Simulation branch(sim);
  std::vector<Request> future;
  for (const Request& r : demand)
    if (r.arrival >= 12) future.push_back(r);
  branch.set_demand(future);
  const SimTrace branched = branch.finish();

  SimConfig full = base;
  full.scripted = demand;
  const SimTrace rerun = run(full);
  CHECK(branched.events == rerun.events);
  CHECK(branched.records.size() == rerun.records.size());
  CHECK(branched.final.total_cost == rerun.final.total_cost);

  // The trunk is unaffected by the branch.
  const SimTrace trunk = sim.finish();
  CHECK(trace_text(trunk) == trace_text(run(base)));
}

TEST_CASE("hindsight mechanism is refused as a per-round policy and capped") {
  SimConfig c = desk(5, MechanismKind::OptimalHindsight);
  CHECK_THROWS_AS(make_mechanism(c), ConfigError);
  CHECK_THROWS_AS(run(c), CapacityError);
}

}  // TEST_SUITE
