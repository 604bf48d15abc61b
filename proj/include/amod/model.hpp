#pragma once

#include "amod/common.hpp"
#include "amod/grid.hpp"

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace amod {

inline constexpr Round kNoDeadline = std::numeric_limits<Round>::max();

struct Request {
  RequestId id = 0;
  Cell origin;
  Cell destination;
  Round arrival = 0;
  Round latest_departure = 0;
  std::int64_t effective_demand = 0;  // blocks

  friend bool operator==(const Request&, const Request&) = default;
};

/// Shortest distance between origin and destination; throws InputError for a
/// degenerate request (origin == destination).
std::int64_t effective_demand(const Grid& grid, Cell origin, Cell destination);

/// Builds a validated request with its effective demand filled in.
Request make_request(const Grid& grid, RequestId id, Cell origin, Cell destination,
                     Round arrival, Round latest_departure);

enum class StopKind : std::uint8_t { Pickup, Dropoff };

struct Stop {
  StopKind kind = StopKind::Pickup;
  RequestId request = 0;
  Cell cell;
  Round deadline = kNoDeadline;  // latest pickup round; dropoffs carry none
  std::int64_t demand = 0;

  friend bool operator==(const Stop&, const Stop&) = default;
};

struct Vehicle {
  VehicleId id = 0;
  RoutePosition position;
  int capacity = 4;
  std::vector<RequestId> onboard;  // sorted
  std::vector<RequestId> pending;  // sorted; committed but not yet picked up
  std::vector<Stop> route;

  int seats() const { return capacity - static_cast<int>(onboard.size() + pending.size()); }
  bool idle() const { return route.empty(); }
  std::vector<Cell> stop_cells() const;
};

/// Cost per unit demand as an exact fraction of blocks over blocks. A zero
/// denominator is the +infinity rate of an empty coalition.
struct BlockRate {
  std::int64_t num = 0;
  std::int64_t den = 0;

  bool infinite() const { return den == 0; }
  Money to_money(const Money& cost_per_block) const;
  friend std::strong_ordering operator<=>(const BlockRate& a, const BlockRate& b);
  friend bool operator==(const BlockRate& a, const BlockRate& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }
};

/// A vehicle's passenger group and its shared cost/demand ledger.
struct Coalition {
  VehicleId vehicle_id = 0;
  std::int64_t delta_blocks = 0;  // cumulative marginal cost, in blocks
  std::int64_t demand = 0;        // cumulative effective demand
  std::vector<RequestId> members;

  BlockRate block_rate() const { return {delta_blocks, demand}; }
  /// Rate after hypothetically admitting a request with these numbers.
  BlockRate rate_with(std::int64_t delta, std::int64_t demand_added) const {
    return {delta_blocks + delta, demand + demand_added};
  }
  Money marginal_cost(const Money& cost_per_block) const { return cost_per_block * delta_blocks; }
  bool contains(RequestId id) const;
};

/// Rate as money per block; std::nullopt is the +infinity sentinel.
std::optional<Money> coalition_rate(const Coalition& c, const Money& cost_per_block);

/// Adds a request and its marginal cost (in blocks) to the coalition.
/// Throws StateError on duplicate admission.
void admit(Coalition& c, const Request& r, std::int64_t delta_blocks);

struct CostLedger {
  Money cost_per_block = 1;
  std::int64_t total_delta_blocks = 0;  // C^t / cost_per_block
  std::int64_t served_demand = 0;       // effective demand of admitted requests
  std::vector<std::int64_t> vehicle_delta_blocks;
  std::vector<std::int64_t> vehicle_units_traveled;  // 1/speed_den blocks

  explicit CostLedger(std::size_t fleet = 0, Money cpb = 1)
      : cost_per_block(std::move(cpb)),
        vehicle_delta_blocks(fleet, 0),
        vehicle_units_traveled(fleet, 0) {}

  Money total_cost() const { return cost_per_block * total_delta_blocks; }
  void record_admission(VehicleId v, std::int64_t delta_blocks, std::int64_t demand);
  void record_travel(VehicleId v, std::int64_t units) { vehicle_units_traveled.at(v) += units; }
};

struct InsertionOptions {
  /// Optional cap on in-vehicle distance as a multiple of effective demand,
  /// applied to every passenger not yet picked up. Off by default.
  std::optional<Money> max_ride_factor;
};

struct InsertionResult {
  std::vector<Stop> new_route;
  std::int64_t delta_blocks = 0;
  Round pickup_eta = 0;

  Money marginal_cost(const Money& cost_per_block) const { return cost_per_block * delta_blocks; }
};

/// Cheapest insertion of the request's pickup and dropoff into the vehicle's
/// route. Pickup precedes dropoff, capacity holds along the route, and every
/// pickup (new and already committed) meets its deadline. Ties on length go
/// to the earlier pickup, then to the earliest insertion positions.
std::optional<InsertionResult> best_insertion(const Grid& grid, const Vehicle& vehicle,
                                              const Request& request, Round now,
                                              const InsertionOptions& options = {});

/// Checks a candidate stop sequence for the vehicle: capacity, pickup
/// deadlines and ride cap. Returns the route length in blocks when feasible.
std::optional<std::int64_t> route_feasible_blocks(const Grid& grid, const Vehicle& vehicle,
                                                  const std::vector<Stop>& stops, Round now,
                                                  const InsertionOptions& options = {});

Stop pickup_stop(const Request& r);
Stop dropoff_stop(const Request& r);

}  // namespace amod
