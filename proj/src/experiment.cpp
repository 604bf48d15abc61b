#include "amod/experiment.hpp"

#include "amod/trace_io.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace amod {

using nlohmann::json;

SimConfig preset(const std::string& name) {
  SimConfig c;
  if (name == "desk") {
    c.grid.rows = c.grid.cols = 21;
    c.demand.fleet_size = 50;
    c.demand.rounds = 100;
    c.demand.pool_mean = 20;
    c.demand.pool_stddev = 5;
    c.demand.od_radius = 10;
  } else if (name == "full") {
    c.grid.rows = c.grid.cols = 101;
    c.demand.fleet_size = 1000;
    c.demand.rounds = 500;
    c.demand.pool_mean = 1000;
    c.demand.pool_stddev = 100;
    c.demand.od_radius = 50;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected desk|full)");
  }
  return c;
}

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

namespace {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0;
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0;
  const double m = mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

json config_without_mechanism(const json& summary) {
  json c = summary.at("config");
  c.erase("mechanism");
  return c;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& rc) {
  if (rc.replicates < 0) throw ConfigError("replicates must be non-negative");
  rc.sim.validate();
  ExperimentResult out;
  out.replicates.resize(static_cast<std::size_t>(rc.replicates));
  std::vector<SimTrace> traces(out.replicates.size());

  const std::size_t n = out.replicates.size();
  const auto one = [&](std::size_t i) {
    SimConfig c = rc.sim;
    c.demand.seed = rc.first_seed + i;
    const auto t0 = std::chrono::steady_clock::now();
    traces[i] = run(c);
    ReplicateResult& r = out.replicates[i];
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    r.seed = c.demand.seed;
    r.final = traces[i].final;
    r.rows = traces[i].rows;
  };
  const int jobs = std::min<int>(resolve_jobs(rc.jobs), static_cast<int>(std::max<std::size_t>(1, n)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex m;
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < n; i = next++) {
            try {
              one(i);
            } catch (...) {
              std::lock_guard lock(m);
              if (!error) error = std::current_exception();
            }
          }
        });
    }
    if (error) std::rethrow_exception(error);
  }

  // Summary
  std::vector<double> ws, revenues, demands, runtimes;
  json seeds = json::array(), finals = json::array();
  std::size_t longest = 0;
  for (const ReplicateResult& r : out.replicates) {
    seeds.push_back(r.seed);
    json f = {{"seed", r.seed},
              {"w", r.final.w ? json(decimal(*r.final.w)) : json(nullptr)},
              {"w_prime", r.final.w_prime ? json(to_string(*r.final.w_prime)) : json(nullptr)},
              {"revenue", to_string(r.final.revenue)},
              {"total_cost", to_string(r.final.total_cost)},
              {"served_demand", r.final.served_demand},
              {"served", r.final.served_count},
              {"rejected", r.final.rejected_count},
              {"expired", r.final.expired_count},
              {"generated", r.final.generated}};
    finals.push_back(f);
    if (r.final.w) ws.push_back(to_double(*r.final.w));
    revenues.push_back(to_double(r.final.revenue));
    demands.push_back(static_cast<double>(r.final.served_demand));
    runtimes.push_back(r.runtime_ms);
    longest = std::max(longest, r.rows.size());
  }
  json series = json::array();
  for (std::size_t t = 0; t < longest; ++t) {
    std::vector<double> at;
    for (const ReplicateResult& r : out.replicates) {
      if (r.rows.empty()) continue;
      const MetricRow& row = r.rows[std::min(t, r.rows.size() - 1)];
      if (row.w) at.push_back(to_double(*row.w));
    }
    series.push_back(at.empty() ? json(nullptr) : json(mean(at)));
  }
  json summary = {{"mechanism", to_string(rc.sim.mechanism)},
                  {"artifact_version", kArtifactVersion},
                  {"config", config_to_json(rc.sim)},
                  {"seeds", seeds},
                  {"w_mean", mean(ws)},
                  {"w_std", stddev(ws)},
                  {"w_defined", ws.size()},
                  {"revenue_mean", mean(revenues)},
                  {"served_demand_mean", mean(demands)},
                  {"runtime_ms_mean", rc.timing ? json(mean(runtimes)) : json(nullptr)},
                  {"finals", finals},
                  {"w_series", series}};
  if (rc.timing) {
    json per_round = json::array();
    for (const SimTrace& t : traces) per_round.push_back(mean(t.round_ms));
    summary["round_ms_mean"] = per_round;
  }
  out.summary = summary;

  if (!rc.out.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(rc.out) / to_string(rc.sim.mechanism);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string stem = "seed_" + std::to_string(out.replicates[i].seed);
      const fs::path trace_path = dir / (stem + ".trace.jsonl");
      const fs::path csv_path = dir / (stem + ".metrics.csv");
      {
        std::ofstream f(trace_path, std::ios::binary);
        write_trace(f, traces[i]);
      }
      {
        std::ofstream f(csv_path, std::ios::binary);
        write_metrics_csv(f, traces[i]);
      }
      out.files.push_back(trace_path.string());
      out.files.push_back(csv_path.string());
    }
    const fs::path summary_path = dir / "summary.json";
    std::ofstream(summary_path, std::ios::binary) << summary.dump(2) << '\n';
    out.files.push_back(summary_path.string());
  }
  return out;
}

std::string compare(const std::vector<json>& summaries) {
  if (summaries.size() < 2) throw InputError("compare needs at least two summaries");
  const json base = config_without_mechanism(summaries.front());
  for (const json& s : summaries) {
    if (config_without_mechanism(s) != base)
      throw InputError("summaries differ in more than the mechanism; comparison refused");
    if (s.at("seeds") != summaries.front().at("seeds")) throw InputError("summaries use different seeds");
  }
  std::ostringstream out;
  out << "round";
  std::size_t longest = 0;
  for (const json& s : summaries) {
    out << ",w_" << s.at("mechanism").get<std::string>();
    longest = std::max(longest, s.at("w_series").size());
  }
  out << '\n';
  for (std::size_t t = 0; t < longest; ++t) {
    out << t;
    for (const json& s : summaries) {
      const json& series = s.at("w_series");
      out << ',';
      if (series.empty()) continue;
      const json& v = series.at(std::min(t, series.size() - 1));
      if (!v.is_null()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", v.get<double>());
        out << buf;
      }
    }
    out << '\n';
  }
  out << '\n' << "mechanism,w_mean,w_std,ratio_to_" << summaries.front().at("mechanism").get<std::string>() << '\n';
  const double w0 = summaries.front().at("w_mean").get<double>();
  for (const json& s : summaries) {
    const double w = s.at("w_mean").get<double>();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", w0 > 0 ? w / w0 : 0.0);
    out << s.at("mechanism").get<std::string>() << ',' << w << ',' << s.at("w_std").get<double>() << ','
        << buf << '\n';
  }
  return out.str();
}

}  // namespace amod
