#include "amod/audit.hpp"

#include "amod/trace_io.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace amod {

using nlohmann::json;

std::string describe(const Manipulation& m) {
  if (m.kind == Manipulation::Kind::Delay)
    return "delay request " + std::to_string(m.target) + " by " + std::to_string(m.delay);
  return "report deadline " + std::to_string(m.reported_deadline) + " for request " + std::to_string(m.target);
}

bool better_for_passenger(const Outcome& a, const Outcome& b) {
  if (a.serviced != b.serviced) return a.serviced;
  if (!a.serviced) return false;
  return *a.payment < *b.payment;
}

namespace {

json outcome_json(const Outcome& o) {
  json j = {{"serviced", o.serviced}};
  if (o.payment) j["payment"] = to_string(*o.payment);
  return j;
}

json manipulation_json(const Manipulation& m) {
  json j = {{"target", m.target}, {"kind", m.kind == Manipulation::Kind::Delay ? "delay" : "deadline"}};
  if (m.kind == Manipulation::Kind::Delay)
    j["delay"] = m.delay;
  else
    j["reported_deadline"] = m.reported_deadline;
  return j;
}

}  // namespace

json report_to_json(const AuditReport& r) {
  return {{"seed", r.seed},
          {"manipulation", manipulation_json(r.manipulation)},
          {"truthful", outcome_json(r.truthful)},
          {"manipulated", outcome_json(r.manipulated)},
          {"verdict", r.gain ? "GAIN-FOUND" : "no-gain"},
          {"service_changed", r.service_changed}};
}

Outcome outcome_of(const SimTrace& trace, RequestId id, Round true_deadline) {
  auto it = trace.records.find(id);
  if (it == trace.records.end()) throw InputError("unknown request id " + std::to_string(id));
  const RequestRecord& r = it->second;
  Outcome o;
  if (r.status == RequestStatus::Delivered && r.pickup_round >= 0 && r.pickup_round <= true_deadline &&
      r.payment) {
    o.serviced = true;
    o.payment = r.payment;
  }
  return o;
}

std::vector<Request> reported_requests(const SimTrace& trace) {
  std::vector<Request> out;
  for (const Event& e : trace.events)
    if (e.type == EventType::Request && e.details) out.push_back(*e.details);
  return out;
}

namespace {

/// The altered report list and the first round at which it differs.
std::pair<std::vector<Request>, Round> manipulated_reports(const SimTrace& truthful, const Manipulation& m,
                                                           Round* true_deadline) {
  std::vector<Request> reports = reported_requests(truthful);
  auto it = std::find_if(reports.begin(), reports.end(), [&](const Request& r) { return r.id == m.target; });
  if (it == reports.end()) throw InputError("unknown request id " + std::to_string(m.target));
  *true_deadline = it->latest_departure;
  const Round diverge = it->arrival;
  if (m.kind == Manipulation::Kind::Delay) {
    if (m.delay < 0) throw InputError("delay must be non-negative");
    it->arrival += m.delay;
    if (it->arrival > it->latest_departure || it->arrival >= truthful.config.demand.rounds)
      throw InputError("delayed submission falls past the deadline or the horizon");
  } else {
    if (m.reported_deadline < it->arrival) throw InputError("reported deadline precedes arrival");
    it->latest_departure = m.reported_deadline;
  }
  return {std::move(reports), diverge};
}

/// Finishes a branch of `base` (positioned at the divergence round) under the
/// altered reports.
AuditReport finish_branch(const Simulation& base, const SimTrace& truthful, const Manipulation& m,
                          std::vector<Request> reports, Round true_deadline) {
  Simulation branch(base);
  std::erase_if(reports, [&](const Request& r) { return r.arrival < branch.now(); });
  branch.set_demand(std::move(reports));
  const SimTrace altered = branch.finish();

  AuditReport rep;
  rep.manipulation = m;
  rep.seed = truthful.config.demand.seed;
  rep.truthful = outcome_of(truthful, m.target, true_deadline);
  rep.manipulated = outcome_of(altered, m.target, true_deadline);
  rep.gain = better_for_passenger(rep.manipulated, rep.truthful);
  rep.service_changed = rep.truthful.serviced != rep.manipulated.serviced;
  return rep;
}

}  // namespace

AuditReport replay_with_manipulation(const SimTrace& truthful, const Manipulation& m) {
  Round true_deadline = 0;
  auto [reports, diverge] = manipulated_reports(truthful, m, &true_deadline);
  Simulation base(truthful.config);
  while (base.now() < diverge) base.step();
  return finish_branch(base, truthful, m, std::move(reports), true_deadline);
}

namespace {

constexpr std::uint64_t kAuditPurpose = 0x6175646974ULL;

template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace

SweepReport sweep(const SimConfig& config, const SweepOptions& options) {
  SweepReport out;
  if (options.seeds <= 0 || options.per_seed <= 0) return out;

  std::vector<SimTrace> truthful(static_cast<std::size_t>(options.seeds));
  std::vector<std::vector<Manipulation>> samples(truthful.size());
  std::vector<std::vector<AuditReport>> results(truthful.size());
  parallel_for(truthful.size(), options.jobs, [&](std::size_t s) {
    SimConfig c = config;
    c.demand.seed = options.first_seed + s;
    c.scripted.reset();
    truthful[s] = run(c);
    const SimTrace& t = truthful[s];
    const std::vector<Request> reqs = reported_requests(t);
    if (reqs.empty()) return;
    for (int i = 0; i < options.per_seed; ++i) {
      boost::random::mt19937_64 e(keyed_hash(t.config.demand.seed, {kAuditPurpose, static_cast<std::uint64_t>(i)}));
      for (int attempt = 0; attempt < 64; ++attempt) {
        const Request& r = reqs[boost::random::uniform_int_distribution<std::size_t>(0, reqs.size() - 1)(e)];
        Manipulation m;
        m.target = r.id;
        const int k = boost::random::uniform_int_distribution<int>(1, 10)(e);
        if (boost::random::uniform_int_distribution<int>(0, 1)(e) == 0) {
          m.kind = Manipulation::Kind::Delay;
          m.delay = k;
          if (r.arrival + k > r.latest_departure || r.arrival + k >= t.config.demand.rounds) continue;
        } else {
          m.kind = Manipulation::Kind::Deadline;
          const bool later = boost::random::uniform_int_distribution<int>(0, 1)(e) == 1;
          m.reported_deadline = r.latest_departure + (later ? k : -k);
          if (m.reported_deadline < r.arrival) continue;
        }
        samples[s].push_back(m);
        break;
      }
    }
    // One forward pass; each manipulation branches at its divergence round.
    struct Pending {
      Round diverge;
      std::size_t index;
      std::vector<Request> reports;
      Round true_deadline;
    };
    std::vector<Pending> pending;
    for (std::size_t i = 0; i < samples[s].size(); ++i) {
      Round td = 0;
      auto [reports, diverge] = manipulated_reports(t, samples[s][i], &td);
      pending.push_back({diverge, i, std::move(reports), td});
    }
    std::stable_sort(pending.begin(), pending.end(),
                     [](const Pending& a, const Pending& b) { return a.diverge < b.diverge; });
    results[s].resize(samples[s].size());
    Simulation base(t.config);
    for (Pending& p : pending) {
      while (base.now() < p.diverge) base.step();
      results[s][p.index] = finish_branch(base, t, samples[s][p.index], std::move(p.reports), p.true_deadline);
    }
  });
  for (auto& r : results) out.reports.insert(out.reports.end(), r.begin(), r.end());
  for (const AuditReport& r : out.reports) {
    out.gains += r.gain ? 1 : 0;
    out.service_changes += r.service_changed ? 1 : 0;
  }
  for (const SimTrace& t : truthful)
    out.ir_violations += static_cast<std::int64_t>(check_ir_and_bb(t).ir_violations.size());
  return out;
}

std::vector<std::string> write_gain_bundles(const SimConfig& config, const SweepReport& report,
                                            const std::string& dir) {
  std::vector<std::string> paths;
  std::filesystem::create_directories(dir);
  int n = 0;
  for (const AuditReport& r : report.reports) {
    if (!r.gain) continue;
    SimConfig c = config;
    c.demand.seed = r.seed;
    c.scripted.reset();
    json bundle = {{"kind", "amod-gain-repro"},
                   {"artifact_version", kArtifactVersion},
                   {"config", config_to_json(c)},
                   {"report", report_to_json(r)}};
    const std::string path = (std::filesystem::path(dir) / ("gain_" + std::to_string(n++) + ".json")).string();
    std::ofstream(path) << bundle.dump(2) << '\n';
    paths.push_back(path);
  }
  return paths;
}

IrBbReport check_ir_and_bb(const SimTrace& trace) {
  IrBbReport rep;
  Money paid = 0;
  for (const auto& [id, r] : trace.records) {
    if (!r.payment) continue;
    paid += *r.payment;
    if (!r.quote) continue;
    ++rep.checked;
    if (*r.payment > *r.quote) rep.ir_violations.push_back(id);
  }
  rep.residual = paid - trace.final.total_cost;

  if (trace.config.effective_settlement() == SettlementMode::Epoch &&
      trace.config.mechanism != MechanismKind::OptimalHindsight) {
    std::map<std::pair<VehicleId, std::int64_t>, std::pair<std::int64_t, Money>> epochs;
    for (const Event& e : trace.events) {
      if (e.type == EventType::Assign && e.vehicle && e.epoch)
        epochs[{*e.vehicle, *e.epoch}].first += e.delta_blocks.value_or(0);
      if (e.type == EventType::Payment && e.vehicle && e.epoch)
        epochs[{*e.vehicle, *e.epoch}].second += *e.amount;
    }
    const Money& cpb = trace.config.grid.cost_per_block;
    for (const auto& [key, sums] : epochs) {
      ++rep.epochs_checked;
      if (cpb * sums.first != sums.second)
        rep.epoch_mismatches.push_back("vehicle " + std::to_string(key.first) + " epoch " +
                                       std::to_string(key.second) + ": cost " +
                                       to_string(cpb * sums.first) + " paid " + to_string(sums.second));
    }
  }
  return rep;
}

}  // namespace amod
