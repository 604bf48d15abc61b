#pragma once

#include "amod/sim.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace amod {

inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr int kTraceSchemaVersion = 1;

nlohmann::json config_to_json(const SimConfig& config);
SimConfig config_from_json(const nlohmann::json& j);

nlohmann::json request_to_json(const Request& r);
Request request_from_json(const nlohmann::json& j);

nlohmann::json event_to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

/// Line-delimited trace: a schema header carrying the config, then one event
/// per line in sequence order.
void write_trace(std::ostream& out, const SimTrace& trace);
std::string trace_text(const SimTrace& trace);

struct LoadedTrace {
  SimConfig config;
  std::string mechanism;
  std::vector<Event> events;
};
LoadedTrace read_trace(std::istream& in);

/// Metric rows as CSV, preceded by `#` provenance lines.
void write_metrics_csv(std::ostream& out, const SimTrace& trace);

/// Decimal rendering used in CSV and summaries.
std::string decimal(const Money& m, int digits = 9);

}  // namespace amod
