#pragma once

#include "amod/benchmarks.hpp"
#include "amod/grid.hpp"
#include "amod/mechanism.hpp"
#include "amod/model.hpp"
#include "amod/world.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace amod {

struct DemandConfig {
  int pool_size = 500;
  double pool_mean = 1000;
  double pool_stddev = 100;
  Round waiting_min = 10;
  Round waiting_max = 100;
  int od_radius = 50;
  Round rounds = 500;
  int fleet_size = 1000;
  int capacity = 4;
  std::uint64_t seed = 1;

  void validate(const GridConfig& grid) const;
};

enum class MechanismKind : std::uint8_t { Iors, IorsUngated, Auction, OptimalRound, OptimalHindsight };

std::string to_string(MechanismKind k);
MechanismKind parse_mechanism(const std::string& s);

struct SimConfig {
  MechanismKind mechanism = MechanismKind::Iors;
  SettlementMode settlement = SettlementMode::Literal;
  GridConfig grid;
  DemandConfig demand;
  Round auction_window = 5;
  std::optional<Money> max_ride_factor;
  std::optional<Money> max_accept_rate;
  std::vector<Cell> initial_positions;  // empty: all vehicles at the center
  /// When set, replaces generated demand (used by replays with an altered report).
  std::optional<std::vector<Request>> scripted;
  ExactCaps caps;

  /// Checks every field; the auction baseline always settles per epoch.
  void validate() const;
  SettlementMode effective_settlement() const;
};

/// Seeded demand: a pool of per-round counts and per-request draws keyed by
/// (seed, round, index), so altering one request never shifts another.
class DemandModel {
 public:
  DemandModel(const GridConfig& grid, const DemandConfig& config);

  const std::vector<std::int64_t>& pool() const { return pool_; }
  std::int64_t count_for(Round now) const;
  std::vector<Request> generate(Round now, std::int64_t count) const;
  std::vector<Request> generate_round(Round now) const { return generate(now, count_for(now)); }
  /// Every request of the horizon, in arrival order.
  std::vector<Request> generate_all() const;
  const std::vector<Cell>& ball() const { return ball_; }

 private:
  Grid grid_;
  DemandConfig config_;
  std::vector<std::int64_t> pool_;
  std::vector<Cell> ball_;  // cells within od_radius of the center
};

std::vector<std::int64_t> build_demand_pool(const DemandConfig& config);
std::vector<Request> generate_requests(const GridConfig& grid, const DemandConfig& config, Round now,
                                       std::int64_t count);

constexpr RequestId kRoundStride = RequestId{1} << 20;

struct MetricRow {
  Round round = 0;
  Money total_cost = 0;
  std::int64_t served_demand = 0;
  std::optional<Money> w_prime;  // absent until the first admission
  std::optional<Money> w;
  Money revenue = 0;
  std::int64_t open_requests = 0;
  std::int64_t expired = 0;
  std::int64_t rejected = 0;
  std::int64_t served = 0;
  std::int64_t generated = 0;
  std::int64_t active_vehicles = 0;
};

struct Metrics {
  std::optional<Money> w_prime;
  std::optional<Money> w;
  Money revenue = 0;
  Money total_cost = 0;
  std::int64_t served_demand = 0;
  std::int64_t served_count = 0;
  std::int64_t delivered_count = 0;
  std::int64_t rejected_count = 0;
  std::int64_t expired_count = 0;
  std::int64_t generated = 0;
};

struct SimTrace {
  SimConfig config;
  std::string mechanism;
  std::vector<Event> events;
  std::vector<MetricRow> rows;
  std::map<RequestId, RequestRecord> records;
  Metrics final;
  Round horizon_end = 0;        // last simulated round, drain included
  std::vector<double> round_ms;  // wall clock per round; never serialized into traces
};

std::unique_ptr<Mechanism> make_mechanism(const SimConfig& config);

/// Round-by-round driver. Copies are independent, so a run can be branched at
/// any round (used to replay one altered report without re-simulating the
/// shared prefix).
class Simulation {
 public:
  explicit Simulation(SimConfig config);
  Simulation(const Simulation& other);
  Simulation& operator=(const Simulation&) = delete;

  Round now() const { return now_; }
  bool finished() const;
  /// Executes round now(): motion, arrivals, mechanism, metrics.
  void step();
  /// Replaces demand from round now() on with `requests` (by arrival round).
  void set_demand(std::vector<Request> requests);
  /// Steps to completion, runs the end-of-run checks and returns the trace.
  SimTrace finish();

 private:
  SimConfig config_;
  World world_;
  std::unique_ptr<Mechanism> mechanism_;
  std::optional<DemandModel> demand_;
  std::map<Round, std::vector<Request>> schedule_;
  std::vector<MetricRow> rows_;
  std::vector<double> round_ms_;
  Round now_ = 0;
  Round drain_limit_ = 0;
};

/// Runs T rounds, then drains (no new demand) until every vehicle is idle and
/// no request is open. Inline invariants abort with InvariantViolation.
SimTrace run(const SimConfig& config);

}  // namespace amod
