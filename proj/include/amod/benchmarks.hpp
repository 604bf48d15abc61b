#pragma once

#include "amod/iors.hpp"
#include "amod/mechanism.hpp"
#include "amod/model.hpp"
#include "amod/world.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace amod {

/// Size limits of the exact solvers. Exceeding one is a CapacityError, never
/// a silent approximation.
struct ExactCaps {
  int round_max_requests = 4096;
  int round_max_vehicles = 128;
  int hindsight_max_requests = 8;
  int hindsight_max_vehicles = 3;
};

struct PlanEntry {
  VehicleId vehicle_id = 0;
  RequestId request_id = 0;
  std::int64_t delta_blocks = 0;
  Round pickup_eta = 0;
};

struct OptimalPlan {
  std::vector<PlanEntry> assignments;             // ascending vehicle id
  std::map<VehicleId, std::vector<Stop>> routes;  // new routes of touched vehicles
  std::int64_t added_blocks = 0;
  std::int64_t added_demand = 0;
  /// System cost per unit demand after the plan, in blocks per block; an
  /// infinite value means nothing has been served.
  BlockRate objective;
  int iterations = 0;

  std::optional<Money> w_prime(const Money& cost_per_block) const;
};

/// Exact minimizer of the resulting system cost per unit demand over every
/// matching of this round's requests to vehicles (each vehicle takes at most
/// one new request; any request may be left out), each pair using its
/// cheapest insertion. Parametric search on the ratio with an exact integer
/// assignment solve per step.
OptimalPlan optimal_assign_round(const World& world, Round now, std::span<const Request> requests,
                                 const ExactCaps& caps = {});

/// Applies a plan: commits each request with its marginal cost and installs
/// the new routes.
void apply_plan(World& world, Round now, std::span<const Request> requests, const OptimalPlan& plan);

/// Clairvoyant optimum over a whole horizon: every request is known in
/// advance, vehicles may wait, pickups fall in [arrival, latest departure].
/// Exhaustive over served subsets, vehicle maps and stop orders.
struct HindsightPlan {
  std::map<RequestId, VehicleId> served;
  std::map<VehicleId, std::vector<Stop>> routes;
  std::int64_t total_blocks = 0;
  std::int64_t total_demand = 0;
  BlockRate objective;  // blocks per block; infinite when nothing is served

  std::optional<Money> w(const Money& cost_per_block) const;
};
HindsightPlan optimal_assign_hindsight(const Grid& grid, const FleetSpec& fleet,
                                       std::span<const Request> requests, const ExactCaps& caps = {});

struct Bid {
  RequestId request_id = 0;
  BlockRate reserve_rate;  // best resulting coalition rate at window close
};

struct AuctionBatch {
  Round window = 5;
  std::vector<Request> requests;
};

struct AuctionResult {
  std::vector<Bid> bids;                 // ascending: best ranked first
  std::vector<Assignment> assignments;
  std::vector<RequestId> dropped;        // lowest ranked first out
};

/// Bottom-up batch auction (documented interpretation of the offline
/// baseline): every feasible (vehicle, request) insertion is ranked by its
/// resulting coalition rate, the best is committed and the vehicle re-ranked,
/// until constraints bind; remaining requests are dropped.
AuctionResult auction_assign(World& world, Round now, const AuctionBatch& batch, std::uint64_t seed);

class OptimalRoundMechanism final : public Mechanism {
 public:
  explicit OptimalRoundMechanism(ExactCaps caps = {}) : caps_(caps) {}
  std::string_view name() const override { return "optimal-round"; }
  void on_round(World& world, Round now, std::vector<Request> arrivals, bool draining) override;
  std::size_t open_requests() const override { return carried_.size(); }
  std::unique_ptr<Mechanism> clone() const override { return std::make_unique<OptimalRoundMechanism>(*this); }

 private:
  ExactCaps caps_;
  std::vector<Request> carried_;
};

class AuctionMechanism final : public Mechanism {
 public:
  AuctionMechanism(std::uint64_t seed, Round window);
  std::string_view name() const override { return "auction"; }
  void on_round(World& world, Round now, std::vector<Request> arrivals, bool draining) override;
  std::size_t open_requests() const override { return batch_.size(); }
  std::unique_ptr<Mechanism> clone() const override { return std::make_unique<AuctionMechanism>(*this); }

 private:
  std::uint64_t seed_;
  Round window_;
  std::vector<Request> batch_;
};

}  // namespace amod
