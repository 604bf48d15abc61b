#pragma once

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

struct Quote {
  RequestId request_id = 0;
  Money amount;
};

struct Assignment {
  Round round = 0;
  VehicleId vehicle_id = 0;
  RequestId request_id = 0;
  InsertionResult insertion;
};

struct Payment {
  RequestId request_id = 0;
  Money amount;
  Round completion_round = 0;
};

/// One (vehicle, request) pairing eligible for commitment this round.
struct CandidateEntry {
  VehicleId vehicle_id = 0;
  RequestId request_id = 0;
  BlockRate resulting_rate;
  std::int64_t demand = 0;
  std::uint64_t tie_key = 0;
  InsertionResult insertion;
};

struct IorsOptions {
  /// Only admit when the coalition rate strictly decreases. Disabling it is a
  /// deliberately broken variant used to self-test the audit harness.
  bool improvement_gate = true;
  /// Passenger acceptance hook: accept iff quote <= max_rate * l. Unset
  /// means every quote is accepted.
  std::optional<Money> max_accept_rate;
};

/// Fare estimation. For each request, over vehicles with a free seat whose
/// cheapest insertion meets the deadline and strictly lowers the coalition
/// rate, the candidate fare is l times the post-admission rate; the quote is
/// the largest candidate fare. Requests without a candidate get no quote.
std::vector<Quote> estimate(const World& world, Round now, std::span<const Request> requests,
                            const IorsOptions& options = {});

/// Pickup assignment. Commits entries in ascending resulting rate (ties: larger
/// effective demand, then a seeded key), recomputing the committed vehicle's
/// entries while it still has seats. An entry is admissible only if l times its
/// resulting rate stays within the request's quote. Commits into `world`.
std::vector<Assignment> assign(World& world, Round now, std::span<const Request> accepted,
                               const std::map<RequestId, Money>& quotes, std::uint64_t seed,
                               const IorsOptions& options = {});

/// Unassigned requests that some vehicle could still reach by their latest
/// departure; the rest expire.
std::vector<Request> carryover(const World& world, Round now, std::span<const Request> unassigned);

/// Payment l * rate of the given coalition. Throws StateError when the
/// request has not been delivered.
Payment settle_payment(const RequestRecord& record, const Coalition& coalition, Round completion,
                       const Money& cost_per_block);

/// Builds the candidate entry for (vehicle, request), or nothing when the
/// insertion is infeasible, fails the gate, or would exceed the quote.
std::optional<CandidateEntry> make_candidate(const World& world, const Vehicle& v,
                                             const Request& r, Round now,
                                             const std::optional<Money>& quote,
                                             std::uint64_t seed, const IorsOptions& options);

class IorsMechanism final : public Mechanism {
 public:
  IorsMechanism(std::uint64_t seed, IorsOptions options = {}) : seed_(seed), options_(options) {}

  std::string_view name() const override {
    return options_.improvement_gate ? "iors" : "iors-ungated";
  }
  void on_round(World& world, Round now, std::vector<Request> arrivals, bool draining) override;
  std::size_t open_requests() const override { return carried_.size(); }
  std::unique_ptr<Mechanism> clone() const override { return std::make_unique<IorsMechanism>(*this); }

 private:
  std::uint64_t seed_;
  IorsOptions options_;
  std::vector<Request> carried_;
  std::map<RequestId, Money> binding_quotes_;
};

}  // namespace amod
