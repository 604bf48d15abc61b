#include "amod/iors.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>

namespace amod {

namespace {

constexpr std::uint64_t kTiePurpose = 0x7469655f6b6579ULL;  // "tie_key"

std::uint64_t tie_key(std::uint64_t seed, Round now, VehicleId v, RequestId r) {
  return keyed_hash(seed, {kTiePurpose, static_cast<std::uint64_t>(now),
                           static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(r)});
}

}  // namespace

std::optional<CandidateEntry> make_candidate(const World& world, const Vehicle& v,
                                             const Request& r, Round now,
                                             const std::optional<Money>& quote,
                                             std::uint64_t seed, const IorsOptions& options) {
  if (v.seats() < 1) return std::nullopt;
  auto ins = best_insertion(world.grid(), v, r, now, world.insertion());
  if (!ins) return std::nullopt;
  const Coalition& c = world.coalition(v.id);
  const BlockRate post = c.rate_with(ins->delta_blocks, r.effective_demand);
  if (options.improvement_gate && !(post < c.block_rate())) return std::nullopt;
  if (quote && post.to_money(world.cost_per_block()) * r.effective_demand > *quote)
    return std::nullopt;
  CandidateEntry e;
  e.vehicle_id = v.id;
  e.request_id = r.id;
  e.resulting_rate = post;
  e.demand = r.effective_demand;
  e.tie_key = tie_key(seed, now, v.id, r.id);
  e.insertion = std::move(*ins);
  return e;
}

std::vector<Quote> estimate(const World& world, Round now, std::span<const Request> requests,
                            const IorsOptions& options) {
  std::vector<Quote> quotes;
  for (const Request& r : requests) {
    if (r.arrival > now) throw InputError("estimate: request " + std::to_string(r.id) + " not yet arrived");
    std::optional<BlockRate> highest;
    for (const Vehicle& v : world.fleet()) {
      auto cand = make_candidate(world, v, r, now, std::nullopt, 0, options);
      if (!cand) continue;
      if (!highest || *highest < cand->resulting_rate) highest = cand->resulting_rate;
    }
    if (highest)
      quotes.push_back({r.id, highest->to_money(world.cost_per_block()) * r.effective_demand});
  }
  return quotes;
}

std::vector<Assignment> assign(World& world, Round now, std::span<const Request> accepted,
                               const std::map<RequestId, Money>& quotes, std::uint64_t seed,
                               const IorsOptions& options) {
  std::vector<Assignment> out;
  if (accepted.empty()) return out;

  std::unordered_map<RequestId, const Request*> remaining;
  for (const Request& r : accepted) remaining.emplace(r.id, &r);

  const auto quote_of = [&](RequestId id) -> std::optional<Money> {
    auto it = quotes.find(id);
    if (it == quotes.end()) return std::nullopt;
    return it->second;
  };

  // Ordering: ascending resulting rate, then larger demand, then the seeded key.
  struct Key {
    BlockRate rate;
    std::int64_t demand;
    std::uint64_t tie;
    VehicleId v;
    RequestId r;
    bool operator<(const Key& o) const {
      if (auto c = rate <=> o.rate; c != 0) return c < 0;
      if (demand != o.demand) return demand > o.demand;
      return std::tie(tie, v, r) < std::tie(o.tie, o.v, o.r);
    }
  };
  std::set<Key> order;
  std::map<std::pair<VehicleId, RequestId>, CandidateEntry> entries;
  std::unordered_map<VehicleId, std::vector<RequestId>> by_vehicle;
  std::unordered_map<RequestId, std::vector<VehicleId>> by_request;

  const auto add = [&](CandidateEntry e) {
    order.insert({e.resulting_rate, e.demand, e.tie_key, e.vehicle_id, e.request_id});
    by_vehicle[e.vehicle_id].push_back(e.request_id);
    by_request[e.request_id].push_back(e.vehicle_id);
    entries.emplace(std::make_pair(e.vehicle_id, e.request_id), std::move(e));
  };
  const auto drop = [&](VehicleId v, RequestId r) {
    auto it = entries.find({v, r});
    if (it == entries.end()) return;
    const CandidateEntry& e = it->second;
    order.erase({e.resulting_rate, e.demand, e.tie_key, v, r});
    entries.erase(it);
  };
  const auto build_for_vehicle = [&](const Vehicle& v) {
    if (v.seats() < 1) return;
    for (const Request& r : accepted) {
      if (!remaining.count(r.id)) continue;
      if (auto e = make_candidate(world, v, r, now, quote_of(r.id), seed, options)) add(std::move(*e));
    }
  };

  for (const Vehicle& v : world.fleet()) build_for_vehicle(v);

  while (!order.empty() && !remaining.empty()) {
    const Key top = *order.begin();
    CandidateEntry chosen = entries.at({top.v, top.r});
    const Request& req = *remaining.at(top.r);

    const Coalition& c = world.coalition(top.v);
    if (options.improvement_gate)
      AMOD_CHECK(chosen.resulting_rate < c.block_rate(), "admission must lower the coalition rate");
    world.commit(now, top.v, req, chosen.insertion.delta_blocks, chosen.insertion.pickup_eta);
    world.set_route(top.v, chosen.insertion.new_route);
    out.push_back({now, top.v, top.r, chosen.insertion});

    for (VehicleId v : by_request[top.r]) drop(v, top.r);
    by_request.erase(top.r);
    remaining.erase(top.r);
    for (RequestId r : by_vehicle[top.v]) drop(top.v, r);
    by_vehicle.erase(top.v);
    for (auto& [rid, vs] : by_request) std::erase(vs, top.v);
    build_for_vehicle(world.fleet().at(top.v));
  }
  return out;
}

std::vector<Request> carryover(const World& world, Round now, std::span<const Request> unassigned) {
  std::vector<Request> kept;
  const Grid& g = world.grid();
  const std::int64_t den = g.units_per_block();
  for (const Request& r : unassigned) {
    bool reachable = false;
    for (const Vehicle& v : world.fleet()) {
      const std::int64_t offset = v.position.heading ? den - v.position.progress_units : 0;
      const Round eta =
          now + g.units_to_rounds(offset + den * g.shortest_distance(g.anchor(v.position), r.origin));
      if (eta <= r.latest_departure) {
        reachable = true;
        break;
      }
    }
    if (reachable) kept.push_back(r);
  }
  return kept;
}

Payment settle_payment(const RequestRecord& record, const Coalition& coalition, Round completion,
                       const Money& cost_per_block) {
  if (record.status != RequestStatus::Delivered)
    throw StateError("cannot settle request " + std::to_string(record.request.id) +
                     ": not delivered");
  if (coalition.demand == 0) throw StateError("cannot settle against an empty coalition");
  return {record.request.id,
          coalition.block_rate().to_money(cost_per_block) * record.request.effective_demand,
          completion};
}

void IorsMechanism::on_round(World& world, Round now, std::vector<Request> arrivals, bool) {
  for (const Request& r : arrivals) world.arrive(now, r);

  std::vector<Request> open = std::move(carried_);
  carried_.clear();
  open.insert(open.end(), arrivals.begin(), arrivals.end());

  const auto quotes = estimate(world, now, open, options_);
  std::map<RequestId, Money> fresh;
  for (const Quote& q : quotes) fresh.emplace(q.request_id, q.amount);

  std::vector<Request> accepted;
  for (const Request& r : open) {
    auto fq = fresh.find(r.id);
    auto bq = binding_quotes_.find(r.id);
    if (bq == binding_quotes_.end()) {
      // first time seen by the mechanism
      if (fq == fresh.end()) {
        world.reject(now, r.id, "no-quote");
        continue;
      }
      world.set_quote(now, r.id, fq->second);
      if (options_.max_accept_rate &&
          fq->second > *options_.max_accept_rate * r.effective_demand) {
        world.reject(now, r.id, "declined");
        continue;
      }
      binding_quotes_.emplace(r.id, fq->second);
    } else if (fq != fresh.end() && fq->second < bq->second) {
      bq->second = fq->second;
      world.set_quote(now, r.id, fq->second);
    }
    accepted.push_back(r);
  }

  const auto assigned = assign(world, now, accepted, binding_quotes_, seed_, options_);
  std::set<RequestId> done;
  for (const Assignment& a : assigned) {
    done.insert(a.request_id);
    binding_quotes_.erase(a.request_id);
  }
  world.serve_in_place(now);

  std::vector<Request> unassigned;
  for (const Request& r : accepted)
    if (!done.count(r.id)) unassigned.push_back(r);
  carried_ = carryover(world, now, unassigned);
  std::set<RequestId> kept;
  for (const Request& r : carried_) kept.insert(r.id);
  for (const Request& r : unassigned) {
    if (kept.count(r.id)) continue;
    world.expire(now, r.id);
    binding_quotes_.erase(r.id);
  }
}

}  // namespace amod
