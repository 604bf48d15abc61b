#include "amod/benchmarks.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>

namespace amod {

std::optional<Money> OptimalPlan::w_prime(const Money& cost_per_block) const {
  if (objective.infinite()) return std::nullopt;
  return objective.to_money(cost_per_block);
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::int64_t kForbidden = std::int64_t{1} << 60;

/// Minimum-cost assignment of every row to a distinct column (rows <= cols),
/// integer costs. Returns the column of each row.
std::vector<int> hungarian(const std::vector<std::vector<std::int64_t>>& cost, int cols) {
  const int n = static_cast<int>(cost.size());
  std::vector<std::int64_t> u(static_cast<std::size_t>(n) + 1, 0), v(static_cast<std::size_t>(cols) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(cols) + 1, 0), way(static_cast<std::size_t>(cols) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> minv(static_cast<std::size_t>(cols) + 1, std::numeric_limits<std::int64_t>::max());
    std::vector<char> used(static_cast<std::size_t>(cols) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      std::int64_t delta = std::numeric_limits<std::int64_t>::max();
      int j1 = 0;
      for (int j = 1; j <= cols; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const std::int64_t cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                 u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> col_of(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= cols; ++j)
    if (p[static_cast<std::size_t>(j)] > 0) col_of[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return col_of;
}

}  // namespace

OptimalPlan optimal_assign_round(const World& world, Round now, std::span<const Request> requests,
                                 const ExactCaps& caps) {
  if (world.insertion().max_ride_factor)
    throw ConfigError("exact solvers do not support the ride-length cap");
  const auto& fleet = world.fleet();
  if (static_cast<int>(requests.size()) > caps.round_max_requests)
    throw CapacityError("exact per-round solver: " + std::to_string(requests.size()) +
                        " open requests exceed the cap of " + std::to_string(caps.round_max_requests) +
                        "; use a desk-scale configuration");
  if (static_cast<int>(fleet.size()) > caps.round_max_vehicles)
    throw CapacityError("exact per-round solver: fleet of " + std::to_string(fleet.size()) +
                        " exceeds the cap of " + std::to_string(caps.round_max_vehicles) +
                        "; use a desk-scale configuration");

  const std::int64_t base_blocks = world.ledger().total_delta_blocks;
  const std::int64_t base_demand = world.ledger().served_demand;

  // Feasible pairs with their cheapest insertion.
  std::vector<VehicleId> rows;
  for (const Vehicle& v : fleet)
    if (v.seats() >= 1) rows.push_back(v.id);
  const int n = static_cast<int>(requests.size());
  std::vector<std::vector<std::optional<InsertionResult>>> ins(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ins[i].resize(requests.size());
    for (int r = 0; r < n; ++r)
      ins[i][static_cast<std::size_t>(r)] =
          best_insertion(world.grid(), fleet[static_cast<std::size_t>(rows[i])], requests[static_cast<std::size_t>(r)], now);
  }

  using Match = std::vector<int>;  // per row: request index or -1
  const auto value_of = [&](const Match& m) {
    BlockRate out{base_blocks, base_demand};
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i] >= 0) {
        out.num += ins[i][static_cast<std::size_t>(m[i])]->delta_blocks;
        out.den += requests[static_cast<std::size_t>(m[i])].effective_demand;
      }
    return out;
  };

  Match best(rows.size(), -1);
  BlockRate lambda = value_of(best);
  if (lambda.infinite()) {
    // Seed with the single best pair so the ratio is finite.
    std::optional<std::pair<std::size_t, int>> seed;
    BlockRate seed_rate;
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int r = 0; r < n; ++r) {
        const auto& x = ins[i][static_cast<std::size_t>(r)];
        if (!x) continue;
        const BlockRate rate{x->delta_blocks, requests[static_cast<std::size_t>(r)].effective_demand};
        if (!seed || rate < seed_rate) {
          seed = {i, r};
          seed_rate = rate;
        }
      }
    if (seed) {
      best[seed->first] = seed->second;
      lambda = value_of(best);
    }
  }

  OptimalPlan plan;
  if (!lambda.infinite() && !rows.empty() && n > 0) {
    // Dinkelbach: minimize q*cost - p*demand at lambda = p/q until no matching
    // beats the current ratio.
    const int cols = n + static_cast<int>(rows.size());
    for (;;) {
      ++plan.iterations;
      AMOD_CHECK(plan.iterations <= 10000, "parametric search failed to converge");
      const std::int64_t p = lambda.num, q = lambda.den;
      std::vector<std::vector<std::int64_t>> cost(rows.size(), std::vector<std::int64_t>(static_cast<std::size_t>(cols), 0));
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (int r = 0; r < n; ++r) {
          const auto& x = ins[i][static_cast<std::size_t>(r)];
          cost[i][static_cast<std::size_t>(r)] =
              x ? q * x->delta_blocks - p * requests[static_cast<std::size_t>(r)].effective_demand : kForbidden;
        }
      const std::vector<int> col = hungarian(cost, cols);
      Match m(rows.size(), -1);
      std::int64_t total = 0, current = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (col[i] < n && cost[i][static_cast<std::size_t>(col[i])] < 0) {
          m[i] = col[i];
          total += cost[i][static_cast<std::size_t>(col[i])];
        }
        if (best[i] >= 0) current += cost[i][static_cast<std::size_t>(best[i])];
      }
      if (total >= current) break;
      best = m;
      lambda = value_of(best);
    }
  }

  plan.objective = lambda;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (best[i] < 0) continue;
    const InsertionResult& x = *ins[i][static_cast<std::size_t>(best[i])];
    const Request& r = requests[static_cast<std::size_t>(best[i])];
    plan.assignments.push_back({rows[i], r.id, x.delta_blocks, x.pickup_eta});
    plan.routes[rows[i]] = x.new_route;
    plan.added_blocks += x.delta_blocks;
    plan.added_demand += r.effective_demand;
  }
  return plan;
}

void apply_plan(World& world, Round now, std::span<const Request> requests, const OptimalPlan& plan) {
  std::unordered_map<RequestId, const Request*> by_id;
  for (const Request& r : requests) by_id.emplace(r.id, &r);
  for (const PlanEntry& e : plan.assignments)
    world.commit(now, e.vehicle_id, *by_id.at(e.request_id), e.delta_blocks, e.pickup_eta);
  for (const auto& [vid, route] : plan.routes) world.set_route(vid, route);
}

void OptimalRoundMechanism::on_round(World& world, Round now, std::vector<Request> arrivals, bool) {
  for (const Request& r : arrivals) world.arrive(now, r);
  std::vector<Request> open = std::move(carried_);
  carried_.clear();
  open.insert(open.end(), arrivals.begin(), arrivals.end());

  const OptimalPlan plan = optimal_assign_round(world, now, open, caps_);
  apply_plan(world, now, open, plan);
  world.serve_in_place(now);

  std::set<RequestId> done;
  for (const PlanEntry& e : plan.assignments) done.insert(e.request_id);
  std::vector<Request> unassigned;
  for (const Request& r : open)
    if (!done.count(r.id)) unassigned.push_back(r);
  carried_ = carryover(world, now, unassigned);
  std::set<RequestId> kept;
  for (const Request& r : carried_) kept.insert(r.id);
  for (const Request& r : unassigned)
    if (!kept.count(r.id)) world.expire(now, r.id);
}

// ---------------------------------------------------------------------------

AuctionResult auction_assign(World& world, Round now, const AuctionBatch& batch, std::uint64_t seed) {
  AuctionResult out;
  IorsOptions open_auction;
  open_auction.improvement_gate = false;

  std::vector<Request> feasible;
  std::vector<RequestId> infeasible;
  for (const Request& r : batch.requests) {
    std::optional<BlockRate> best;
    for (const Vehicle& v : world.fleet()) {
      auto c = make_candidate(world, v, r, now, std::nullopt, seed, open_auction);
      if (c && (!best || c->resulting_rate < *best)) best = c->resulting_rate;
    }
    if (best) {
      out.bids.push_back({r.id, *best});
      feasible.push_back(r);
    } else {
      infeasible.push_back(r.id);
    }
  }
  std::unordered_map<RequestId, std::int64_t> demand;
  for (const Request& r : batch.requests) demand[r.id] = r.effective_demand;
  std::stable_sort(out.bids.begin(), out.bids.end(), [&](const Bid& a, const Bid& b) {
    if (auto c = a.reserve_rate <=> b.reserve_rate; c != 0) return c < 0;
    if (demand[a.request_id] != demand[b.request_id]) return demand[a.request_id] > demand[b.request_id];
    return a.request_id < b.request_id;
  });

  out.assignments = assign(world, now, feasible, {}, seed, open_auction);
  std::set<RequestId> done;
  for (const Assignment& a : out.assignments) done.insert(a.request_id);
  out.dropped = infeasible;
  for (auto it = out.bids.rbegin(); it != out.bids.rend(); ++it)
    if (!done.count(it->request_id)) out.dropped.push_back(it->request_id);
  return out;
}

AuctionMechanism::AuctionMechanism(std::uint64_t seed, Round window) : seed_(seed), window_(window) {
  if (window < 1) throw ConfigError("auction window must be at least one round");
}

void AuctionMechanism::on_round(World& world, Round now, std::vector<Request> arrivals, bool draining) {
  for (const Request& r : arrivals) {
    world.arrive(now, r);
    batch_.push_back(r);
  }
  if (!draining && (now + 1) % window_ != 0) return;
  if (batch_.empty()) return;
  const AuctionResult res = auction_assign(world, now, {window_, batch_}, seed_);
  world.serve_in_place(now);
  for (RequestId id : res.dropped) world.reject(now, id, "auction-dropped");
  batch_.clear();
}

}  // namespace amod
