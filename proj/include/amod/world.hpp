#pragma once

#include "amod/common.hpp"
#include "amod/grid.hpp"
#include "amod/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace amod {

enum class SettlementMode : std::uint8_t {
  Literal,  // pay l * lifetime coalition rate at drop-off
  Epoch,    // pay l * epoch rate when the vehicle next becomes empty
};

std::string to_string(SettlementMode m);
SettlementMode parse_settlement(const std::string& s);

enum class EventType : std::uint8_t {
  Request,
  Quote,
  Reject,
  Assign,
  Expire,
  Pickup,
  Dropoff,
  Payment,
  Move,
};

std::string to_string(EventType t);

/// One trace record. Fields not meaningful for the type stay empty.
struct Event {
  std::int64_t seq = 0;
  Round round = 0;
  EventType type = EventType::Request;
  std::optional<RequestId> request;
  std::optional<VehicleId> vehicle;
  std::optional<Money> amount;  // quote or payment
  std::optional<Money> rate;    // coalition rate after admission / at settlement
  std::optional<std::int64_t> delta_blocks;
  std::optional<Round> eta;
  std::optional<std::int64_t> epoch;
  std::optional<Request> details;  // on Request events
  std::optional<std::int64_t> units;  // Move: fleet travel in 1/speed_den blocks
  std::optional<std::int64_t> count;  // Move: vehicles that moved
  std::string note;

  friend bool operator==(const Event&, const Event&) = default;
};

class EventLog {
 public:
  Event& emit(Round round, EventType type);
  const std::vector<Event>& events() const { return events_; }
  std::vector<Event>&& take() { return std::move(events_); }

 private:
  std::vector<Event> events_;
};

enum class RequestStatus : std::uint8_t { Open, Rejected, Expired, Assigned, PickedUp, Delivered };

struct RequestRecord {
  Request request;
  RequestStatus status = RequestStatus::Open;
  std::optional<Money> quote;  // binding upper bound on the payment
  std::optional<VehicleId> vehicle;
  std::int64_t delta_blocks = 0;
  std::int64_t epoch = 0;
  Round assigned_round = -1;
  Round pickup_eta = -1;
  Round pickup_round = -1;
  Round dropoff_round = -1;
  std::optional<Money> payment;
};

struct FleetSpec {
  int size = 50;
  int capacity = 4;
  std::vector<Cell> initial_positions;  // empty: every vehicle starts at the grid center
};

/// Per-vehicle epoch: the span from the vehicle leaving empty to its next
/// return to empty.
struct Epoch {
  std::int64_t index = 0;
  std::int64_t delta_blocks = 0;
  std::int64_t demand = 0;
  std::vector<RequestId> members;
};

struct WorldCounters {
  std::int64_t generated = 0;
  std::int64_t rejected = 0;
  std::int64_t expired = 0;
  std::int64_t served = 0;  // admitted to a vehicle
  std::int64_t delivered = 0;
  Money revenue = 0;
  std::int64_t ir_violations = 0;  // payments above quote; only non-zero when not strict
};

/// Mutable state of one simulation: fleet, pricing coalitions, cost ledger,
/// request bookkeeping and the event log.
class World {
 public:
  World(Grid grid, const FleetSpec& fleet, SettlementMode mode, InsertionOptions insertion = {});

  const Grid& grid() const { return grid_; }
  const Money& cost_per_block() const { return grid_.config().cost_per_block; }
  SettlementMode mode() const { return mode_; }
  const InsertionOptions& insertion() const { return insertion_; }

  std::vector<Vehicle>& fleet() { return fleet_; }
  const std::vector<Vehicle>& fleet() const { return fleet_; }
  /// Coalition used for pricing: lifetime in literal mode, current epoch in epoch mode.
  const Coalition& coalition(VehicleId v) const { return coalitions_.at(v); }
  const std::vector<Coalition>& coalitions() const { return coalitions_; }
  const CostLedger& ledger() const { return ledger_; }
  const WorldCounters& counters() const { return counters_; }
  const Epoch& epoch(VehicleId v) const { return epochs_.at(v); }

  EventLog& log() { return log_; }
  const EventLog& log() const { return log_; }

  /// Registers a newly arrived request and emits its Request event.
  void arrive(Round now, const Request& r);
  const RequestRecord& record(RequestId id) const;
  bool has_record(RequestId id) const { return records_.count(id) != 0; }
  const std::map<RequestId, RequestRecord>& records() const { return records_; }

  void set_quote(Round now, RequestId id, const Money& amount);
  void reject(Round now, RequestId id, const std::string& reason);
  void expire(Round now, RequestId id);

  /// Admits the request to the vehicle's coalition and ledger, marks it
  /// pending, and emits the Assign event. The caller installs the route.
  void commit(Round now, VehicleId v, const Request& r, std::int64_t delta_blocks, Round eta);
  void set_route(VehicleId v, std::vector<Stop> route);

  /// Moves every vehicle one round and processes the stops it reaches.
  void advance(Round now);
  /// Processes stops at vehicles' current cells without moving.
  void serve_in_place(Round now);

  bool all_idle() const;

  /// When strict (the default) a payment above its quote aborts the run.
  void set_strict_ir(bool strict) { strict_ir_ = strict; }

 private:
  void process_motion(Round now, Vehicle& v, const Motion& m);
  void on_dropoff(Round now, Vehicle& v, RequestId id);
  void close_epoch(Round now, Vehicle& v);
  RequestRecord& rec(RequestId id);
  void check_ir(const RequestRecord& r, const Money& amount);

  Grid grid_;
  SettlementMode mode_;
  InsertionOptions insertion_;
  std::vector<Vehicle> fleet_;
  std::vector<Coalition> coalitions_;
  std::vector<Epoch> epochs_;
  CostLedger ledger_;
  WorldCounters counters_;
  std::map<RequestId, RequestRecord> records_;
  EventLog log_;
  bool strict_ir_ = true;
};

}  // namespace amod
