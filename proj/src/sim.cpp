#include "amod/sim.hpp"

#include "amod/iors.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace amod {

namespace {

// Purposes for keyed draws.
constexpr std::uint64_t kPool = 1;
constexpr std::uint64_t kCount = 2;
constexpr std::uint64_t kOrigin = 3;
constexpr std::uint64_t kDestination = 4;
constexpr std::uint64_t kWaiting = 5;

using Engine = boost::random::mt19937_64;

Engine keyed_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return Engine(keyed_hash(seed, keys));
}

template <class T>
T uniform(Engine& e, T lo, T hi) {
  return boost::random::uniform_int_distribution<T>(lo, hi)(e);
}

}  // namespace

void DemandConfig::validate(const GridConfig& grid) const {
  if (pool_size < 1) throw ConfigError("pool_size must be at least 1");
  if (!(pool_stddev >= 0) || !std::isfinite(pool_mean)) throw ConfigError("invalid demand pool distribution");
  if (waiting_min < 0 || waiting_min > waiting_max) throw ConfigError("need 0 <= waiting_min <= waiting_max");
  if (rounds < 0) throw ConfigError("rounds must be non-negative");
  if (fleet_size < 0) throw ConfigError("fleet_size must be non-negative");
  if (capacity < 1) throw ConfigError("capacity must be at least 1");
  if (od_radius < 1) throw ConfigError("od_radius must be at least 1");
  const int cr = grid.rows / 2, cc = grid.cols / 2;
  if (cr - od_radius < 0 || cc - od_radius < 0 || cr + od_radius >= grid.rows || cc + od_radius >= grid.cols)
    throw ConfigError("od_radius " + std::to_string(od_radius) + " does not fit the " +
                      std::to_string(grid.rows) + "x" + std::to_string(grid.cols) + " grid");
}

std::string to_string(MechanismKind k) {
  switch (k) {
    case MechanismKind::Iors: return "iors";
    case MechanismKind::IorsUngated: return "iors-ungated";
    case MechanismKind::Auction: return "auction";
    case MechanismKind::OptimalRound: return "optimal-round";
    case MechanismKind::OptimalHindsight: return "optimal-hindsight";
  }
  return "?";
}

MechanismKind parse_mechanism(const std::string& s) {
  for (auto k : {MechanismKind::Iors, MechanismKind::IorsUngated, MechanismKind::Auction,
                 MechanismKind::OptimalRound, MechanismKind::OptimalHindsight})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown mechanism '" + s +
                    "' (expected iors|auction|optimal-round|optimal-hindsight|iors-ungated)");
}

void SimConfig::validate() const {
  grid.validate();
  demand.validate(grid);
  if (auction_window < 1) throw ConfigError("auction window must be at least one round");
  if (max_ride_factor && *max_ride_factor < 1) throw ConfigError("max_ride_factor must be >= 1");
  if (max_accept_rate && *max_accept_rate <= 0) throw ConfigError("max_accept_rate must be positive");
  if (!initial_positions.empty() && initial_positions.size() != static_cast<std::size_t>(demand.fleet_size))
    throw ConfigError("initial_positions must list one cell per vehicle");
  const Grid g(grid);
  for (Cell c : initial_positions)
    if (!g.contains(c)) throw ConfigError("initial vehicle position outside grid");
  if (max_ride_factor &&
      (mechanism == MechanismKind::OptimalRound || mechanism == MechanismKind::OptimalHindsight))
    throw ConfigError("exact solvers do not support the ride-length cap");
  if (scripted) {
    for (const Request& r : *scripted) {
      if (!g.contains(r.origin) || !g.contains(r.destination))
        throw ConfigError("scripted request " + std::to_string(r.id) + " outside grid");
      if (r.arrival < 0 || r.arrival >= demand.rounds)
        throw ConfigError("scripted request " + std::to_string(r.id) + " arrives outside the horizon");
      if (r.latest_departure < r.arrival) throw ConfigError("scripted request deadline precedes arrival");
      if (r.effective_demand != g.shortest_distance(r.origin, r.destination) || r.effective_demand <= 0)
        throw ConfigError("scripted request " + std::to_string(r.id) + " has inconsistent demand");
    }
  }
}

SettlementMode SimConfig::effective_settlement() const {
  return mechanism == MechanismKind::Auction ? SettlementMode::Epoch : settlement;
}

// ---------------------------------------------------------------------------

std::vector<std::int64_t> build_demand_pool(const DemandConfig& config) {
  std::vector<std::int64_t> pool;
  pool.reserve(static_cast<std::size_t>(config.pool_size));
  Engine e = keyed_engine(config.seed, {kPool});
  boost::random::normal_distribution<double> normal(config.pool_mean, config.pool_stddev);
  for (int i = 0; i < config.pool_size; ++i) {
    const double x = config.pool_stddev == 0 ? config.pool_mean : normal(e);
    pool.push_back(std::max<std::int64_t>(0, std::llround(x)));
  }
  return pool;
}

DemandModel::DemandModel(const GridConfig& grid, const DemandConfig& config)
    : grid_(grid), config_(config), pool_(build_demand_pool(config)) {
  config_.validate(grid_.config());
  const Cell c = grid_.center();
  for (int r = c.row - config_.od_radius; r <= c.row + config_.od_radius; ++r)
    for (int col = c.col - config_.od_radius; col <= c.col + config_.od_radius; ++col) {
      const Cell x{r, col};
      if (grid_.contains(x) && grid_.shortest_distance(c, x) <= config_.od_radius) ball_.push_back(x);
    }
}

std::int64_t DemandModel::count_for(Round now) const {
  Engine e = keyed_engine(config_.seed, {kCount, static_cast<std::uint64_t>(now)});
  return pool_[uniform<std::size_t>(e, 0, pool_.size() - 1)];
}

std::vector<Request> DemandModel::generate(Round now, std::int64_t count) const {
  if (count < 0) throw InputError("request count must be non-negative");
  if (count >= kRoundStride) throw ConfigError("per-round request count exceeds id space");
  std::vector<Request> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    const RequestId id = now * kRoundStride + k;
    const auto uid = static_cast<std::uint64_t>(id);
    Engine eo = keyed_engine(config_.seed, {kOrigin, uid});
    const Cell origin = ball_[uniform<std::size_t>(eo, 0, ball_.size() - 1)];
    Engine ed = keyed_engine(config_.seed, {kDestination, uid});
    Cell dest = origin;
    while (dest == origin) dest = ball_[uniform<std::size_t>(ed, 0, ball_.size() - 1)];
    Engine ew = keyed_engine(config_.seed, {kWaiting, uid});
    const Round wait = uniform<Round>(ew, config_.waiting_min, config_.waiting_max);
    out.push_back(make_request(grid_, id, origin, dest, now, now + wait));
  }
  return out;
}

std::vector<Request> DemandModel::generate_all() const {
  std::vector<Request> all;
  for (Round t = 0; t < config_.rounds; ++t) {
    auto batch = generate_round(t);
    all.insert(all.end(), batch.begin(), batch.end());
  }
  return all;
}

std::vector<Request> generate_requests(const GridConfig& grid, const DemandConfig& config, Round now,
                                       std::int64_t count) {
  return DemandModel(grid, config).generate(now, count);
}

// ---------------------------------------------------------------------------

std::unique_ptr<Mechanism> make_mechanism(const SimConfig& config) {
  const std::uint64_t seed = config.demand.seed;
  IorsOptions opts;
  opts.max_accept_rate = config.max_accept_rate;
  switch (config.mechanism) {
    case MechanismKind::Iors: return std::make_unique<IorsMechanism>(seed, opts);
    case MechanismKind::IorsUngated:
      opts.improvement_gate = false;
      return std::make_unique<IorsMechanism>(seed, opts);
    case MechanismKind::Auction: return std::make_unique<AuctionMechanism>(seed, config.auction_window);
    case MechanismKind::OptimalRound: return std::make_unique<OptimalRoundMechanism>(config.caps);
    case MechanismKind::OptimalHindsight:
      throw ConfigError("the hindsight optimum is an offline solver, not a per-round mechanism");
  }
  throw ConfigError("unknown mechanism");
}

namespace {

MetricRow make_row(const World& world, Round now, std::int64_t open) {
  MetricRow row;
  row.round = now;
  const CostLedger& l = world.ledger();
  const WorldCounters& c = world.counters();
  row.total_cost = l.total_cost();
  row.served_demand = l.served_demand;
  if (l.served_demand > 0) {
    row.w_prime = row.total_cost / l.served_demand;
    if (*row.w_prime > 0) row.w = 1 / *row.w_prime;
  }
  row.revenue = c.revenue;
  row.open_requests = open;
  row.expired = c.expired;
  row.rejected = c.rejected;
  row.served = c.served;
  row.generated = c.generated;
  row.active_vehicles = std::count_if(world.fleet().begin(), world.fleet().end(),
                                      [](const Vehicle& v) { return !v.route.empty(); });
  return row;
}

Metrics final_metrics(const World& world, const MetricRow& row) {
  Metrics m;
  m.w_prime = row.w_prime;
  m.w = row.w;
  m.revenue = row.revenue;
  m.total_cost = row.total_cost;
  m.served_demand = row.served_demand;
  m.served_count = world.counters().served;
  m.delivered_count = world.counters().delivered;
  m.rejected_count = world.counters().rejected;
  m.expired_count = world.counters().expired;
  m.generated = world.counters().generated;
  return m;
}

std::map<Round, std::vector<Request>> demand_schedule(const SimConfig& config) {
  std::map<Round, std::vector<Request>> by_round;
  if (!config.scripted) return by_round;
  std::vector<Request> sorted = *config.scripted;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Request& a, const Request& b) {
    return std::tie(a.arrival, a.id) < std::tie(b.arrival, b.id);
  });
  for (const Request& r : sorted) by_round[r.arrival].push_back(r);
  return by_round;
}

SimTrace run_hindsight(const SimConfig& config) {
  if (config.demand.fleet_size > config.caps.hindsight_max_vehicles)
    throw CapacityError("hindsight optimum: fleet of " + std::to_string(config.demand.fleet_size) +
                        " exceeds the cap of " + std::to_string(config.caps.hindsight_max_vehicles) +
                        "; use a micro instance");
  const Grid grid(config.grid);
  std::vector<Request> all;
  if (config.scripted) {
    for (auto& [t, rs] : demand_schedule(config)) all.insert(all.end(), rs.begin(), rs.end());
  } else {
    all = DemandModel(config.grid, config.demand).generate_all();
  }
  const FleetSpec fleet{config.demand.fleet_size, config.demand.capacity, config.initial_positions};
  const HindsightPlan plan = optimal_assign_hindsight(grid, fleet, all, config.caps);

  SimTrace trace;
  trace.config = config;
  trace.mechanism = to_string(config.mechanism);
  EventLog log;
  for (const Request& r : all) {
    Event& e = log.emit(r.arrival, EventType::Request);
    e.request = r.id;
    e.details = r;
    RequestRecord rec;
    rec.request = r;
    auto it = plan.served.find(r.id);
    if (it != plan.served.end()) {
      rec.status = RequestStatus::Delivered;
      rec.vehicle = it->second;
      Event& a = log.emit(r.arrival, EventType::Assign);
      a.request = r.id;
      a.vehicle = it->second;
    } else {
      rec.status = RequestStatus::Rejected;
    }
    trace.records.emplace(r.id, rec);
  }
  trace.events = log.take();
  MetricRow row;
  row.round = std::max<Round>(0, config.demand.rounds - 1);
  row.total_cost = config.grid.cost_per_block * plan.total_blocks;
  row.served_demand = plan.total_demand;
  if (auto w = plan.w(config.grid.cost_per_block)) {
    row.w = *w;
    row.w_prime = 1 / *w;
  }
  row.served = static_cast<std::int64_t>(plan.served.size());
  row.generated = static_cast<std::int64_t>(all.size());
  row.rejected = row.generated - row.served;
  trace.rows.push_back(row);
  trace.final.w_prime = row.w_prime;
  trace.final.w = row.w;
  trace.final.total_cost = row.total_cost;
  trace.final.served_demand = row.served_demand;
  trace.final.served_count = row.served;
  trace.final.delivered_count = row.served;
  trace.final.rejected_count = row.rejected;
  trace.final.generated = row.generated;
  trace.horizon_end = row.round;
  return trace;
}

}  // namespace

namespace {

World make_world(const SimConfig& config) {
  config.validate();
  World w(Grid(config.grid), FleetSpec{config.demand.fleet_size, config.demand.capacity, config.initial_positions},
          config.effective_settlement(), InsertionOptions{config.max_ride_factor});
  w.set_strict_ir(config.mechanism != MechanismKind::IorsUngated);
  return w;
}

}  // namespace

Simulation::Simulation(SimConfig config)
    : config_(std::move(config)), world_(make_world(config_)), mechanism_(make_mechanism(config_)) {
  if (config_.scripted)
    schedule_ = demand_schedule(config_);
  else
    demand_.emplace(config_.grid, config_.demand);
  const GridConfig& g = config_.grid;
  drain_limit_ = config_.demand.rounds +
                 4 * (g.rows + g.cols) * (g.speed_den / std::max(1, g.speed_num) + 1) * (config_.demand.capacity + 1) +
                 config_.demand.waiting_max + 16;
}

Simulation::Simulation(const Simulation& o)
    : config_(o.config_),
      world_(o.world_),
      mechanism_(o.mechanism_->clone()),
      demand_(o.demand_),
      schedule_(o.schedule_),
      rows_(o.rows_),
      round_ms_(o.round_ms_),
      now_(o.now_),
      drain_limit_(o.drain_limit_) {}

bool Simulation::finished() const {
  const Round horizon = config_.demand.rounds;
  if (now_ < horizon) return false;
  return horizon == 0 || (world_.all_idle() && mechanism_->open_requests() == 0);
}

void Simulation::set_demand(std::vector<Request> requests) {
  demand_.reset();
  schedule_.clear();
  for (const Request& r : requests)
    if (r.arrival < now_) throw InputError("replacement demand must not arrive in the past");
  config_.scripted = std::move(requests);
  config_.validate();
  schedule_ = demand_schedule(config_);
}

void Simulation::step() {
  const Round t = now_;
  const bool draining = t >= config_.demand.rounds;
  AMOD_CHECK(t < drain_limit_, "drain phase does not terminate");
  const auto t0 = std::chrono::steady_clock::now();
  if (t > 0) world_.advance(t);
  std::vector<Request> arrivals;
  if (!draining) {
    if (demand_) {
      arrivals = demand_->generate_round(t);
    } else if (auto it = schedule_.find(t); it != schedule_.end()) {
      arrivals = it->second;
    }
  }
  mechanism_->on_round(world_, t, std::move(arrivals), draining);
  const auto open = static_cast<std::int64_t>(mechanism_->open_requests());
  const WorldCounters& c = world_.counters();
  AMOD_CHECK(c.served + c.expired + c.rejected + open == c.generated,
             "request conservation at round " + std::to_string(t));
  rows_.push_back(make_row(world_, t, open));
  round_ms_.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  ++now_;
}

SimTrace Simulation::finish() {
  while (!finished()) step();

  const CostLedger& ledger = world_.ledger();
  const std::int64_t den = world_.grid().units_per_block();
  for (const Vehicle& v : world_.fleet()) {
    AMOD_CHECK(v.route.empty() && v.onboard.empty() && v.pending.empty(), "vehicle busy after drain");
    AMOD_CHECK(ledger.vehicle_delta_blocks[static_cast<std::size_t>(v.id)] * den ==
                   ledger.vehicle_units_traveled[static_cast<std::size_t>(v.id)],
               "attributed cost differs from distance traveled by vehicle " + std::to_string(v.id));
  }
  for (const auto& [id, r] : world_.records()) {
    if (r.status == RequestStatus::Delivered) {
      AMOD_CHECK(r.pickup_round <= r.request.latest_departure, "pickup after latest departure");
      AMOD_CHECK(r.payment.has_value(), "delivered request without payment");
    }
    AMOD_CHECK(r.status != RequestStatus::Assigned && r.status != RequestStatus::PickedUp &&
                   r.status != RequestStatus::Open,
               "request unsettled after drain");
  }

  SimTrace trace;
  trace.config = config_;
  trace.mechanism = std::string(mechanism_->name());
  trace.rows = rows_;
  trace.round_ms = round_ms_;
  trace.horizon_end = now_ > 0 ? now_ - 1 : 0;
  trace.final = rows_.empty() ? Metrics{} : final_metrics(world_, rows_.back());
  trace.records = world_.records();
  trace.events = world_.log().events();
  return trace;
}

SimTrace run(const SimConfig& config) {
  config.validate();
  if (config.mechanism == MechanismKind::OptimalHindsight) return run_hindsight(config);
  return Simulation(config).finish();
}

}  // namespace amod
