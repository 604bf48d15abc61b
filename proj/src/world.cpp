#include "amod/world.hpp"

#include "amod/iors.hpp"

#include <algorithm>
#include <string>

namespace amod {

std::string to_string(SettlementMode m) { return m == SettlementMode::Literal ? "literal" : "epoch"; }

SettlementMode parse_settlement(const std::string& s) {
  if (s == "literal") return SettlementMode::Literal;
  if (s == "epoch") return SettlementMode::Epoch;
  throw ConfigError("unknown settlement mode '" + s + "' (expected literal|epoch)");
}

std::string to_string(EventType t) {
  switch (t) {
    case EventType::Request: return "request";
    case EventType::Quote: return "quote";
    case EventType::Reject: return "reject";
    case EventType::Assign: return "assign";
    case EventType::Expire: return "expire";
    case EventType::Pickup: return "pickup";
    case EventType::Dropoff: return "dropoff";
    case EventType::Payment: return "payment";
    case EventType::Move: return "move";
  }
  return "?";
}

Event& EventLog::emit(Round round, EventType type) {
  Event& e = events_.emplace_back();
  e.seq = static_cast<std::int64_t>(events_.size()) - 1;
  e.round = round;
  e.type = type;
  return e;
}

namespace {

void insert_sorted(std::vector<RequestId>& v, RequestId id) {
  v.insert(std::lower_bound(v.begin(), v.end(), id), id);
}

void erase_sorted(std::vector<RequestId>& v, RequestId id) {
  auto it = std::lower_bound(v.begin(), v.end(), id);
  AMOD_CHECK(it != v.end() && *it == id, "request missing from vehicle set");
  v.erase(it);
}

}  // namespace

World::World(Grid grid, const FleetSpec& fleet, SettlementMode mode, InsertionOptions insertion)
    : grid_(std::move(grid)),
      mode_(mode),
      insertion_(std::move(insertion)),
      ledger_(static_cast<std::size_t>(fleet.size), grid_.config().cost_per_block) {
  if (fleet.size < 0) throw ConfigError("fleet size must be non-negative");
  if (fleet.capacity < 1) throw ConfigError("vehicle capacity must be at least 1");
  if (!fleet.initial_positions.empty() &&
      fleet.initial_positions.size() != static_cast<std::size_t>(fleet.size))
    throw ConfigError("initial_positions must list one cell per vehicle");
  fleet_.resize(static_cast<std::size_t>(fleet.size));
  coalitions_.resize(fleet_.size());
  epochs_.resize(fleet_.size());
  for (std::size_t i = 0; i < fleet_.size(); ++i) {
    Vehicle& v = fleet_[i];
    v.id = static_cast<VehicleId>(i);
    v.capacity = fleet.capacity;
    v.position.at = fleet.initial_positions.empty() ? grid_.center() : fleet.initial_positions[i];
    if (!grid_.contains(v.position.at)) throw ConfigError("initial vehicle position outside grid");
    coalitions_[i].vehicle_id = v.id;
  }
}

RequestRecord& World::rec(RequestId id) {
  auto it = records_.find(id);
  if (it == records_.end()) throw InputError("unknown request id " + std::to_string(id));
  return it->second;
}

const RequestRecord& World::record(RequestId id) const {
  auto it = records_.find(id);
  if (it == records_.end()) throw InputError("unknown request id " + std::to_string(id));
  return it->second;
}

void World::arrive(Round now, const Request& r) {
  if (records_.count(r.id)) throw StateError("duplicate request id " + std::to_string(r.id));
  records_.emplace(r.id, RequestRecord{r});
  ++counters_.generated;
  Event& e = log_.emit(now, EventType::Request);
  e.request = r.id;
  e.details = r;
}

void World::set_quote(Round now, RequestId id, const Money& amount) {
  AMOD_CHECK(amount > 0, "quotes are positive");
  rec(id).quote = amount;
  Event& e = log_.emit(now, EventType::Quote);
  e.request = id;
  e.amount = amount;
}

void World::reject(Round now, RequestId id, const std::string& reason) {
  RequestRecord& r = rec(id);
  AMOD_CHECK(r.status == RequestStatus::Open, "only open requests can be rejected");
  r.status = RequestStatus::Rejected;
  ++counters_.rejected;
  Event& e = log_.emit(now, EventType::Reject);
  e.request = id;
  e.note = reason;
}

void World::expire(Round now, RequestId id) {
  RequestRecord& r = rec(id);
  AMOD_CHECK(r.status == RequestStatus::Open, "only open requests can expire");
  r.status = RequestStatus::Expired;
  ++counters_.expired;
  Event& e = log_.emit(now, EventType::Expire);
  e.request = id;
}

void World::commit(Round now, VehicleId vid, const Request& r, std::int64_t delta_blocks, Round eta) {
  RequestRecord& rr = rec(r.id);
  AMOD_CHECK(rr.status == RequestStatus::Open, "only open requests can be assigned");
  AMOD_CHECK(eta <= r.latest_departure, "assignment misses the latest departure");
  AMOD_CHECK(eta >= now, "pickup cannot precede the current round");
  Vehicle& v = fleet_.at(vid);
  AMOD_CHECK(v.seats() >= 1, "vehicle has no free seat");

  admit(coalitions_[vid], r, delta_blocks);
  ledger_.record_admission(vid, delta_blocks, r.effective_demand);
  Epoch& ep = epochs_[vid];
  ep.delta_blocks += delta_blocks;
  ep.demand += r.effective_demand;
  ep.members.push_back(r.id);
  insert_sorted(v.pending, r.id);

  rr.status = RequestStatus::Assigned;
  rr.vehicle = vid;
  rr.delta_blocks = delta_blocks;
  rr.epoch = ep.index;
  rr.assigned_round = now;
  rr.pickup_eta = eta;
  ++counters_.served;

  Event& e = log_.emit(now, EventType::Assign);
  e.request = r.id;
  e.vehicle = vid;
  e.delta_blocks = delta_blocks;
  e.eta = eta;
  e.rate = coalitions_[vid].block_rate().to_money(cost_per_block());
  e.epoch = ep.index;
}

void World::set_route(VehicleId v, std::vector<Stop> route) { fleet_.at(v).route = std::move(route); }

void World::advance(Round now) {
  std::int64_t units = 0;
  std::int64_t moved = 0;
  for (Vehicle& v : fleet_) {
    if (v.route.empty()) continue;
    const Motion m = grid_.advance(v.position, v.stop_cells(), 1);
    ledger_.record_travel(v.id, m.units_traveled);
    units += m.units_traveled;
    if (m.units_traveled > 0) ++moved;
    process_motion(now, v, m);
  }
  Event& e = log_.emit(now, EventType::Move);
  e.units = units;
  e.count = moved;
}

void World::serve_in_place(Round now) {
  for (Vehicle& v : fleet_) {
    if (v.route.empty()) continue;
    const Motion m = grid_.advance(v.position, v.stop_cells(), 0);
    process_motion(now, v, m);
  }
}

void World::process_motion(Round now, Vehicle& v, const Motion& m) {
  v.position = m.position;
  if (m.stops_reached == 0) return;
  const std::vector<Stop> reached(v.route.begin(), v.route.begin() + static_cast<std::ptrdiff_t>(m.stops_reached));
  v.route.erase(v.route.begin(), v.route.begin() + static_cast<std::ptrdiff_t>(m.stops_reached));
  for (const Stop& s : reached) {
    RequestRecord& r = rec(s.request);
    if (s.kind == StopKind::Pickup) {
      AMOD_CHECK(now <= r.request.latest_departure, "pickup after latest departure");
      erase_sorted(v.pending, s.request);
      insert_sorted(v.onboard, s.request);
      r.status = RequestStatus::PickedUp;
      r.pickup_round = now;
      Event& e = log_.emit(now, EventType::Pickup);
      e.request = s.request;
      e.vehicle = v.id;
    } else {
      on_dropoff(now, v, s.request);
    }
  }
  if (v.route.empty()) {
    AMOD_CHECK(v.onboard.empty() && v.pending.empty(), "empty route with passengers");
    close_epoch(now, v);
  }
}

void World::on_dropoff(Round now, Vehicle& v, RequestId id) {
  RequestRecord& r = rec(id);
  erase_sorted(v.onboard, id);
  r.status = RequestStatus::Delivered;
  r.dropoff_round = now;
  ++counters_.delivered;
  Event& e = log_.emit(now, EventType::Dropoff);
  e.request = id;
  e.vehicle = v.id;
  if (mode_ == SettlementMode::Literal) {
    const Payment p = settle_payment(r, coalitions_[v.id], now, cost_per_block());
    r.payment = p.amount;
    counters_.revenue += p.amount;
    check_ir(r, p.amount);
    Event& pe = log_.emit(now, EventType::Payment);
    pe.request = id;
    pe.vehicle = v.id;
    pe.amount = p.amount;
    pe.rate = coalitions_[v.id].block_rate().to_money(cost_per_block());
    pe.epoch = r.epoch;
  }
}

void World::close_epoch(Round now, Vehicle& v) {
  Epoch& ep = epochs_[v.id];
  if (mode_ == SettlementMode::Epoch) {
    const Coalition& c = coalitions_[v.id];
    AMOD_CHECK(c.delta_blocks == ep.delta_blocks && c.demand == ep.demand,
               "epoch coalition out of sync with epoch ledger");
    for (RequestId id : ep.members) {
      RequestRecord& r = rec(id);
      const Payment p = settle_payment(r, c, r.dropoff_round, cost_per_block());
      r.payment = p.amount;
      counters_.revenue += p.amount;
      check_ir(r, p.amount);
      Event& pe = log_.emit(now, EventType::Payment);
      pe.request = id;
      pe.vehicle = v.id;
      pe.amount = p.amount;
      pe.rate = c.block_rate().to_money(cost_per_block());
      pe.epoch = ep.index;
    }
    coalitions_[v.id] = Coalition{v.id, 0, 0, {}};
  }
  const std::int64_t next = ep.index + 1;
  ep = Epoch{};
  ep.index = next;
}

void World::check_ir(const RequestRecord& r, const Money& amount) {
  if (!r.quote || amount <= *r.quote) return;
  ++counters_.ir_violations;
  AMOD_CHECK(!strict_ir_, "payment exceeds quote for request " + std::to_string(r.request.id));
}

bool World::all_idle() const {
  return std::all_of(fleet_.begin(), fleet_.end(), [](const Vehicle& v) { return v.route.empty(); });
}

}  // namespace amod
