#include "amod/benchmarks.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>

namespace amod {

std::optional<Money> HindsightPlan::w(const Money& cost_per_block) const {
  if (objective.infinite() || objective.num == 0) return std::nullopt;
  // W is the reciprocal of the cost per unit demand.
  return Money(1) / objective.to_money(cost_per_block);
}

namespace {

// Time is measured in ticks: one round is speed_num ticks, one block speed_den.
struct Label {
  std::int64_t blocks;
  std::int64_t ticks;
  std::int32_t parent_state;
  std::int32_t parent_label;
  bool alive;
};

struct VehicleTable {
  // Per served subset of requests (bitmask over request indices): fewest blocks
  // and the terminal (state, label) of a route achieving it.
  std::vector<std::int64_t> best_blocks;
  std::vector<std::pair<std::int32_t, std::int32_t>> best_end;
  std::vector<std::vector<Label>> labels;
  int lasts = 0;
};

VehicleTable solve_vehicle(const Grid& grid, Cell start, int capacity, std::span<const Request> reqs) {
  const int k = static_cast<int>(reqs.size());
  const int stops = 2 * k;
  const int masks = 1 << stops;
  VehicleTable t;
  t.lasts = stops + 1;
  t.labels.assign(static_cast<std::size_t>(masks) * t.lasts, {});
  t.best_blocks.assign(static_cast<std::size_t>(1) << k, -1);
  t.best_end.assign(static_cast<std::size_t>(1) << k, {-1, -1});

  const std::int64_t num = grid.config().speed_num;
  const std::int64_t den = grid.config().speed_den;
  const auto cell_of = [&](int last) {
    if (last == 0) return start;
    const Request& r = reqs[static_cast<std::size_t>((last - 1) / 2)];
    return (last - 1) % 2 == 0 ? r.origin : r.destination;
  };
  const auto state = [&](int mask, int last) { return mask * t.lasts + last; };

  std::vector<int> order;
  for (int mask = 0; mask < masks; ++mask) {
    bool ok = true;
    for (int j = 0; j < k && ok; ++j)
      if ((mask >> (2 * j + 1) & 1) && !(mask >> (2 * j) & 1)) ok = false;
    if (ok) order.push_back(mask);
  }
  std::stable_sort(order.begin(), order.end(), [](int a, int b) {
    return std::popcount(static_cast<unsigned>(a)) < std::popcount(static_cast<unsigned>(b));
  });

  t.labels[static_cast<std::size_t>(state(0, 0))].push_back({0, 0, -1, -1, true});
  for (int mask : order) {
    int load = 0;
    for (int j = 0; j < k; ++j) load += (mask >> (2 * j) & 1) - (mask >> (2 * j + 1) & 1);
    for (int last = 0; last < t.lasts; ++last) {
      const int s = state(mask, last);
      auto& here = t.labels[static_cast<std::size_t>(s)];
      for (std::size_t li = 0; li < here.size(); ++li) {
        if (!here[li].alive) continue;
        const Label from = here[li];
        for (int x = 0; x < stops; ++x) {
          if (mask >> x & 1) continue;
          const bool pickup = x % 2 == 0;
          if (!pickup && !(mask >> (x - 1) & 1)) continue;
          if (pickup && load + 1 > capacity) continue;
          const Request& r = reqs[static_cast<std::size_t>(x / 2)];
          const std::int64_t d = grid.shortest_distance(cell_of(last), cell_of(x + 1));
          Label nl{from.blocks + d, from.ticks + den * d, s, static_cast<std::int32_t>(li), true};
          if (pickup) {
            nl.ticks = std::max(nl.ticks, num * r.arrival);
            if (nl.ticks > num * r.latest_departure) continue;
          }
          auto& there = t.labels[static_cast<std::size_t>(state(mask | (1 << x), x + 1))];
          bool dominated = false;
          for (const Label& o : there)
            if (o.alive && o.blocks <= nl.blocks && o.ticks <= nl.ticks) {
              dominated = true;
              break;
            }
          if (dominated) continue;
          for (Label& o : there)
            if (o.alive && nl.blocks <= o.blocks && nl.ticks <= o.ticks) o.alive = false;
          there.push_back(nl);
        }
      }
      // Complete states: every request untouched or fully served.
      bool complete = true;
      int served = 0;
      for (int j = 0; j < k; ++j) {
        const int p = mask >> (2 * j) & 1, q = mask >> (2 * j + 1) & 1;
        if (p != q) complete = false;
        if (q) served |= 1 << j;
      }
      if (!complete) continue;
      for (std::size_t li = 0; li < here.size(); ++li) {
        if (!here[li].alive) continue;
        auto& bb = t.best_blocks[static_cast<std::size_t>(served)];
        if (bb < 0 || here[li].blocks < bb) {
          bb = here[li].blocks;
          t.best_end[static_cast<std::size_t>(served)] = {s, static_cast<std::int32_t>(li)};
        }
      }
    }
  }
  return t;
}

std::vector<Stop> rebuild(const VehicleTable& t, std::pair<std::int32_t, std::int32_t> end,
                          std::span<const Request> reqs) {
  std::vector<Stop> route;
  auto [s, li] = end;
  while (s >= 0) {
    const Label& l = t.labels[static_cast<std::size_t>(s)][static_cast<std::size_t>(li)];
    const int last = s % t.lasts;
    if (last > 0) {
      const Request& r = reqs[static_cast<std::size_t>((last - 1) / 2)];
      route.push_back((last - 1) % 2 == 0 ? pickup_stop(r) : dropoff_stop(r));
    }
    s = l.parent_state;
    li = l.parent_label;
  }
  std::reverse(route.begin(), route.end());
  return route;
}

}  // namespace

HindsightPlan optimal_assign_hindsight(const Grid& grid, const FleetSpec& fleet,
                                       std::span<const Request> requests, const ExactCaps& caps) {
  if (static_cast<int>(requests.size()) > caps.hindsight_max_requests)
    throw CapacityError("hindsight optimum: " + std::to_string(requests.size()) +
                        " requests exceed the cap of " + std::to_string(caps.hindsight_max_requests) +
                        "; use a micro instance");
  if (fleet.size > caps.hindsight_max_vehicles)
    throw CapacityError("hindsight optimum: fleet of " + std::to_string(fleet.size) +
                        " exceeds the cap of " + std::to_string(caps.hindsight_max_vehicles) +
                        "; use a micro instance");
  if (fleet.capacity < 1) throw ConfigError("vehicle capacity must be at least 1");
  for (const Request& r : requests) {
    if (!grid.contains(r.origin) || !grid.contains(r.destination))
      throw InputError("request " + std::to_string(r.id) + " outside grid");
    if (r.latest_departure < r.arrival) throw InputError("request deadline precedes arrival");
  }

  const int n = static_cast<int>(requests.size());
  const int v = fleet.size;
  std::vector<Cell> starts(static_cast<std::size_t>(v), grid.center());
  if (!fleet.initial_positions.empty()) {
    if (fleet.initial_positions.size() != static_cast<std::size_t>(v))
      throw ConfigError("initial_positions must list one cell per vehicle");
    starts = fleet.initial_positions;
  }

  // Vehicles sharing a start cell share their table.
  std::vector<VehicleTable> tables;
  std::vector<std::size_t> table_of(static_cast<std::size_t>(v));
  for (int i = 0; i < v; ++i) {
    std::size_t found = tables.size();
    for (int u = 0; u < i; ++u)
      if (starts[static_cast<std::size_t>(u)] == starts[static_cast<std::size_t>(i)]) found = table_of[static_cast<std::size_t>(u)];
    if (found == tables.size())
      tables.push_back(solve_vehicle(grid, starts[static_cast<std::size_t>(i)], fleet.capacity, requests));
    table_of[static_cast<std::size_t>(i)] = found;
  }

  HindsightPlan plan;
  BlockRate best{0, 0};
  std::vector<int> best_map(static_cast<std::size_t>(n), -1);

  // Enumerate every request -> vehicle-or-reject map.
  std::vector<int> choice(static_cast<std::size_t>(n), -1);
  std::int64_t total_maps = 1;
  for (int i = 0; i < n; ++i) total_maps *= (v + 1);
  for (std::int64_t code = 0; code < total_maps; ++code) {
    std::int64_t c = code;
    std::vector<int> subset(static_cast<std::size_t>(v), 0);
    std::int64_t demand = 0;
    for (int i = 0; i < n; ++i) {
      const int pick = static_cast<int>(c % (v + 1)) - 1;
      c /= (v + 1);
      choice[static_cast<std::size_t>(i)] = pick;
      if (pick >= 0) {
        subset[static_cast<std::size_t>(pick)] |= 1 << i;
        demand += requests[static_cast<std::size_t>(i)].effective_demand;
      }
    }
    std::int64_t blocks = 0;
    bool feasible = true;
    for (int i = 0; i < v && feasible; ++i) {
      const std::int64_t b =
          tables[table_of[static_cast<std::size_t>(i)]].best_blocks[static_cast<std::size_t>(subset[static_cast<std::size_t>(i)])];
      if (b < 0) feasible = false;
      blocks += b;
    }
    if (!feasible) continue;
    const BlockRate value{blocks, demand};
    if (value < best) {
      best = value;
      best_map = choice;
    }
  }

  plan.objective = best;
  plan.total_blocks = best.infinite() ? 0 : best.num;
  plan.total_demand = best.den;
  std::vector<int> subset(static_cast<std::size_t>(v), 0);
  for (int i = 0; i < n; ++i) {
    const int pick = best_map[static_cast<std::size_t>(i)];
    if (pick < 0) continue;
    subset[static_cast<std::size_t>(pick)] |= 1 << i;
    plan.served.emplace(requests[static_cast<std::size_t>(i)].id, pick);
  }
  for (int i = 0; i < v; ++i) {
    const int s = subset[static_cast<std::size_t>(i)];
    if (s == 0) continue;
    const VehicleTable& t = tables[table_of[static_cast<std::size_t>(i)]];
    plan.routes[i] = rebuild(t, t.best_end[static_cast<std::size_t>(s)], requests);
  }
  return plan;
}

}  // namespace amod
