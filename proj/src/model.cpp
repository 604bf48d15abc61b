#include "amod/model.hpp"

#include <algorithm>
#include <string>

namespace amod {

std::int64_t effective_demand(const Grid& grid, Cell origin, Cell destination) {
  if (origin == destination) throw InputError("degenerate request: origin equals destination");
  return grid.shortest_distance(origin, destination);
}

Request make_request(const Grid& grid, RequestId id, Cell origin, Cell destination,
                     Round arrival, Round latest_departure) {
  if (latest_departure < arrival)
    throw InputError("request " + std::to_string(id) + ": latest departure before arrival");
  Request r;
  r.id = id;
  r.origin = origin;
  r.destination = destination;
  r.arrival = arrival;
  r.latest_departure = latest_departure;
  r.effective_demand = effective_demand(grid, origin, destination);
  return r;
}

Stop pickup_stop(const Request& r) {
  return {StopKind::Pickup, r.id, r.origin, r.latest_departure, r.effective_demand};
}

Stop dropoff_stop(const Request& r) {
  return {StopKind::Dropoff, r.id, r.destination, kNoDeadline, r.effective_demand};
}

std::vector<Cell> Vehicle::stop_cells() const {
  std::vector<Cell> cells;
  cells.reserve(route.size());
  for (const auto& s : route) cells.push_back(s.cell);
  return cells;
}

std::strong_ordering operator<=>(const BlockRate& a, const BlockRate& b) {
  if (a.infinite() || b.infinite()) {
    if (a.infinite() && b.infinite()) return std::strong_ordering::equal;
    return a.infinite() ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  const __int128 lhs = static_cast<__int128>(a.num) * b.den;
  const __int128 rhs = static_cast<__int128>(b.num) * a.den;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Money BlockRate::to_money(const Money& cost_per_block) const {
  if (infinite()) throw StateError("infinite rate has no money value");
  return cost_per_block * Money(num, den);
}

bool Coalition::contains(RequestId id) const {
  return std::find(members.begin(), members.end(), id) != members.end();
}

std::optional<Money> coalition_rate(const Coalition& c, const Money& cost_per_block) {
  if (c.demand == 0) return std::nullopt;
  return c.block_rate().to_money(cost_per_block);
}

void admit(Coalition& c, const Request& r, std::int64_t delta_blocks) {
  if (c.contains(r.id))
    throw StateError("request " + std::to_string(r.id) + " already admitted to vehicle " +
                     std::to_string(c.vehicle_id));
  if (delta_blocks < 0) throw StateError("negative marginal cost");
  c.delta_blocks += delta_blocks;
  c.demand += r.effective_demand;
  c.members.push_back(r.id);
}

void CostLedger::record_admission(VehicleId v, std::int64_t delta_blocks, std::int64_t demand) {
  total_delta_blocks += delta_blocks;
  served_demand += demand;
  vehicle_delta_blocks.at(v) += delta_blocks;
}

namespace {

struct RouteEval {
  std::int64_t blocks = 0;
  Round first_pickup_eta = 0;  // eta of the stop flagged as `probe`
};

// Walks the stop sequence once. Returns nullopt on any violated constraint.
std::optional<RouteEval> evaluate(const Grid& grid, const Vehicle& v, const Stop* stops,
                                  std::size_t n, Round now, const InsertionOptions& opt,
                                  std::size_t probe) {
  const std::int64_t den = grid.units_per_block();
  const std::int64_t offset = v.position.heading ? den - v.position.progress_units : 0;
  Cell cur = grid.anchor(v.position);
  std::int64_t blocks = 0;
  int load = static_cast<int>(v.onboard.size());
  RouteEval out;
  for (std::size_t i = 0; i < n; ++i) {
    const Stop& s = stops[i];
    blocks += grid.shortest_distance(cur, s.cell);
    cur = s.cell;
    if (s.kind == StopKind::Pickup) {
      if (++load > v.capacity) return std::nullopt;
      const Round eta = now + grid.units_to_rounds(offset + den * blocks);
      if (eta > s.deadline) return std::nullopt;
      if (i == probe) out.first_pickup_eta = eta;
      if (opt.max_ride_factor) {
        std::int64_t ride = 0;
        Cell c = s.cell;
        for (std::size_t j = i + 1; j < n; ++j) {
          ride += grid.shortest_distance(c, stops[j].cell);
          c = stops[j].cell;
          if (stops[j].kind == StopKind::Dropoff && stops[j].request == s.request) break;
        }
        if (Money(ride) > *opt.max_ride_factor * s.demand) return std::nullopt;
      }
    } else {
      --load;
    }
  }
  out.blocks = blocks;
  return out;
}

}  // namespace

std::optional<std::int64_t> route_feasible_blocks(const Grid& grid, const Vehicle& vehicle,
                                                  const std::vector<Stop>& stops, Round now,
                                                  const InsertionOptions& options) {
  auto e = evaluate(grid, vehicle, stops.data(), stops.size(), now, options, stops.size());
  if (!e) return std::nullopt;
  return e->blocks;
}

std::optional<InsertionResult> best_insertion(const Grid& grid, const Vehicle& vehicle,
                                              const Request& request, Round now,
                                              const InsertionOptions& options) {
  if (vehicle.seats() < 1) return std::nullopt;
  const std::size_t k = vehicle.route.size();
  const std::int64_t old_blocks = grid.route_blocks(vehicle.position, vehicle.stop_cells());

  // Cheap rejection: even a direct trip to the origin misses the deadline.
  {
    const std::int64_t den = grid.units_per_block();
    const std::int64_t offset = vehicle.position.heading ? den - vehicle.position.progress_units : 0;
    const Round direct = now + grid.units_to_rounds(
                                   offset + den * grid.shortest_distance(grid.anchor(vehicle.position),
                                                                         request.origin));
    if (direct > request.latest_departure) return std::nullopt;
  }

  const Stop pu = pickup_stop(request);
  const Stop dr = dropoff_stop(request);
  std::vector<Stop> buf(k + 2);
  std::optional<RouteEval> best;
  std::size_t best_i = 0, best_j = 0;
  for (std::size_t i = 0; i <= k; ++i) {
    for (std::size_t j = i; j <= k; ++j) {
      // pickup before base stop i, dropoff before base stop j (after pickup)
      std::size_t w = 0;
      for (std::size_t b = 0; b <= k; ++b) {
        if (b == i) buf[w++] = pu;
        if (b == j) buf[w++] = dr;
        if (b < k) buf[w++] = vehicle.route[b];
      }
      auto e = evaluate(grid, vehicle, buf.data(), buf.size(), now, options, i);
      if (!e) continue;
      if (!best || e->blocks < best->blocks ||
          (e->blocks == best->blocks && e->first_pickup_eta < best->first_pickup_eta)) {
        best = e;
        best_i = i;
        best_j = j;
      }
    }
  }
  if (!best) return std::nullopt;

  InsertionResult out;
  out.new_route.reserve(k + 2);
  for (std::size_t b = 0; b <= k; ++b) {
    if (b == best_i) out.new_route.push_back(pu);
    if (b == best_j) out.new_route.push_back(dr);
    if (b < k) out.new_route.push_back(vehicle.route[b]);
  }
  out.delta_blocks = best->blocks - old_blocks;
  out.pickup_eta = best->first_pickup_eta;
  AMOD_CHECK(out.delta_blocks >= 0, "insertion shortened a route");
  return out;
}

}  // namespace amod
