#pragma once

#include "amod/sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace amod {

/// A single altered report; every other passenger stays truthful.
struct Manipulation {
  enum class Kind : std::uint8_t { Delay, Deadline };
  RequestId target = 0;
  Kind kind = Kind::Delay;
  Round delay = 0;              // Delay: submit this many rounds later
  Round reported_deadline = 0;  // Deadline: the misreported latest departure
};

std::string describe(const Manipulation& m);

struct Outcome {
  bool serviced = false;  // picked up no later than the true deadline
  std::optional<Money> payment;
};

/// Strict preference: serviced beats unserviced; among serviced, lower pays better.
bool better_for_passenger(const Outcome& a, const Outcome& b);

struct AuditReport {
  Manipulation manipulation;
  std::uint64_t seed = 0;
  Outcome truthful;
  Outcome manipulated;
  bool gain = false;                // manipulated strictly better than truthful
  bool service_changed = false;     // serviced/unserviced transition
};

nlohmann::json report_to_json(const AuditReport& r);

/// Outcome of one request in a finished trace, judged against `true_deadline`.
Outcome outcome_of(const SimTrace& trace, RequestId id, Round true_deadline);

/// The truthful reports contained in a trace (every Request event).
std::vector<Request> reported_requests(const SimTrace& trace);

/// Re-runs the trace's config with one altered report. Throws InputError for
/// an unknown target or a manipulation that cannot be submitted.
AuditReport replay_with_manipulation(const SimTrace& truthful, const Manipulation& m);

struct SweepOptions {
  int seeds = 20;
  int per_seed = 50;
  std::uint64_t first_seed = 1;
  int jobs = 1;
};

struct SweepReport {
  std::vector<AuditReport> reports;  // ordered by (seed, sample index)
  std::int64_t gains = 0;
  std::int64_t service_changes = 0;
  std::int64_t ir_violations = 0;  // across every trace the sweep produced
};

/// Samples (seed, target, manipulation) triples: delays of 1..10 rounds and
/// deadline reports t̄ ± 1..10, and replays each one.
SweepReport sweep(const SimConfig& config, const SweepOptions& options);

/// Writes one standalone repro file per gain into `dir`; returns the paths.
std::vector<std::string> write_gain_bundles(const SimConfig& config, const SweepReport& report,
                                            const std::string& dir);

struct IrBbReport {
  std::int64_t checked = 0;
  std::vector<RequestId> ir_violations;
  std::int64_t epochs_checked = 0;
  std::vector<std::string> epoch_mismatches;  // epoch mode only
  Money residual = 0;                         // Σ payments − C over the run
};

/// Individual rationality (payment ≤ quote) and budget balance on a drained trace.
IrBbReport check_ir_and_bb(const SimTrace& trace);

}  // namespace amod
