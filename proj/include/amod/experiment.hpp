#pragma once

#include "amod/sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace amod {

/// Named configurations: "desk" (21x21, 50 vehicles, 100 rounds, pool N(20,5),
/// radius 10) and "full" (101x101, 1000 vehicles, 500 rounds, N(1000,100), radius 50).
SimConfig preset(const std::string& name);

struct RunConfig {
  SimConfig sim;
  int replicates = 1;
  std::uint64_t first_seed = 1;
  std::string out;     // empty: nothing written
  int jobs = 0;        // 0: hardware concurrency
  bool timing = true;  // false: omit wall-clock fields so outputs are byte-identical
};

struct ReplicateResult {
  std::uint64_t seed = 0;
  Metrics final;
  std::vector<MetricRow> rows;
  double runtime_ms = 0;
};

struct ExperimentResult {
  std::vector<ReplicateResult> replicates;  // ascending seed
  nlohmann::json summary;
  std::vector<std::string> files;
};

ExperimentResult run_experiment(const RunConfig& config);

/// Per-round mean-W series and a final-ratio table relative to the first
/// summary. Throws InputError for fewer than two summaries or configs that
/// differ in anything but the mechanism.
std::string compare(const std::vector<nlohmann::json>& summaries);

int resolve_jobs(int jobs);

}  // namespace amod
