#include "amod/trace_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace amod {

using nlohmann::json;

namespace {

json cell_json(Cell c) { return json::array({c.row, c.col}); }
Cell cell_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

json money_json(const Money& m) { return to_string(m); }
Money money_from(const json& j) { return parse_money(j.get<std::string>()); }

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

std::string decimal(const Money& m, int digits) {
  using boost::multiprecision::cpp_int;
  cpp_int scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const bool neg = m < 0;
  const Money a = neg ? Money(-m) : m;
  const Money scaled = a * scale + Money(1, 2);
  const cpp_int q = boost::multiprecision::numerator(scaled) / boost::multiprecision::denominator(scaled);
  std::string s = q.str();
  if (digits > 0) {
    if (s.size() <= static_cast<std::size_t>(digits)) s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
    s.insert(s.size() - static_cast<std::size_t>(digits), ".");
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (neg && s != "0") s.insert(0, "-");
  return s;
}

json request_to_json(const Request& r) {
  return {{"id", r.id},
          {"origin", cell_json(r.origin)},
          {"destination", cell_json(r.destination)},
          {"arrival", r.arrival},
          {"latest_departure", r.latest_departure},
          {"effective_demand", r.effective_demand}};
}

Request request_from_json(const json& j) {
  Request r;
  r.id = j.at("id").get<RequestId>();
  r.origin = cell_from(j.at("origin"));
  r.destination = cell_from(j.at("destination"));
  r.arrival = j.at("arrival").get<Round>();
  r.latest_departure = j.at("latest_departure").get<Round>();
  r.effective_demand = j.at("effective_demand").get<std::int64_t>();
  return r;
}

json config_to_json(const SimConfig& c) {
  json j;
  j["mechanism"] = to_string(c.mechanism);
  j["settlement"] = to_string(c.settlement);
  j["grid"] = {{"rows", c.grid.rows},
               {"cols", c.grid.cols},
               {"speed_num", c.grid.speed_num},
               {"speed_den", c.grid.speed_den},
               {"cost_per_block", money_json(c.grid.cost_per_block)}};
  const DemandConfig& d = c.demand;
  j["demand"] = {{"pool_size", d.pool_size},     {"pool_mean", d.pool_mean},
                 {"pool_stddev", d.pool_stddev}, {"waiting_min", d.waiting_min},
                 {"waiting_max", d.waiting_max}, {"od_radius", d.od_radius},
                 {"rounds", d.rounds},           {"fleet_size", d.fleet_size},
                 {"capacity", d.capacity},       {"seed", d.seed}};
  j["auction_window"] = c.auction_window;
  if (c.max_ride_factor) j["max_ride_factor"] = money_json(*c.max_ride_factor);
  if (c.max_accept_rate) j["max_accept_rate"] = money_json(*c.max_accept_rate);
  if (!c.initial_positions.empty()) {
    json a = json::array();
    for (Cell x : c.initial_positions) a.push_back(cell_json(x));
    j["initial_positions"] = a;
  }
  if (c.scripted) {
    json a = json::array();
    for (const Request& r : *c.scripted) a.push_back(request_to_json(r));
    j["scripted"] = a;
  }
  j["caps"] = {{"round_max_requests", c.caps.round_max_requests},
               {"round_max_vehicles", c.caps.round_max_vehicles},
               {"hindsight_max_requests", c.caps.hindsight_max_requests},
               {"hindsight_max_vehicles", c.caps.hindsight_max_vehicles}};
  return j;
}

SimConfig config_from_json(const json& j) {
  SimConfig c;
  try {
    if (j.contains("mechanism")) c.mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
    if (j.contains("settlement")) c.settlement = parse_settlement(j.at("settlement").get<std::string>());
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      c.grid.rows = g.value("rows", c.grid.rows);
      c.grid.cols = g.value("cols", c.grid.cols);
      c.grid.speed_num = g.value("speed_num", c.grid.speed_num);
      c.grid.speed_den = g.value("speed_den", c.grid.speed_den);
      if (g.contains("cost_per_block")) c.grid.cost_per_block = money_from(g.at("cost_per_block"));
    }
    if (j.contains("demand")) {
      const json& d = j.at("demand");
      DemandConfig& o = c.demand;
      o.pool_size = d.value("pool_size", o.pool_size);
      o.pool_mean = d.value("pool_mean", o.pool_mean);
      o.pool_stddev = d.value("pool_stddev", o.pool_stddev);
      o.waiting_min = d.value("waiting_min", o.waiting_min);
      o.waiting_max = d.value("waiting_max", o.waiting_max);
      o.od_radius = d.value("od_radius", o.od_radius);
      o.rounds = d.value("rounds", o.rounds);
      o.fleet_size = d.value("fleet_size", o.fleet_size);
      o.capacity = d.value("capacity", o.capacity);
      o.seed = d.value("seed", o.seed);
    }
    c.auction_window = j.value("auction_window", c.auction_window);
    if (j.contains("max_ride_factor")) c.max_ride_factor = money_from(j.at("max_ride_factor"));
    if (j.contains("max_accept_rate")) c.max_accept_rate = money_from(j.at("max_accept_rate"));
    if (j.contains("initial_positions"))
      for (const json& x : j.at("initial_positions")) c.initial_positions.push_back(cell_from(x));
    if (j.contains("scripted")) {
      c.scripted.emplace();
      for (const json& x : j.at("scripted")) c.scripted->push_back(request_from_json(x));
    }
    if (j.contains("caps")) {
      const json& k = j.at("caps");
      c.caps.round_max_requests = k.value("round_max_requests", c.caps.round_max_requests);
      c.caps.round_max_vehicles = k.value("round_max_vehicles", c.caps.round_max_vehicles);
      c.caps.hindsight_max_requests = k.value("hindsight_max_requests", c.caps.hindsight_max_requests);
      c.caps.hindsight_max_vehicles = k.value("hindsight_max_vehicles", c.caps.hindsight_max_vehicles);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

json event_to_json(const Event& e) {
  json j;
  j["seq"] = e.seq;
  j["round"] = e.round;
  j["type"] = to_string(e.type);
  put(j, "request", e.request);
  put(j, "vehicle", e.vehicle);
  if (e.amount) j["amount"] = money_json(*e.amount);
  if (e.rate) j["rate"] = money_json(*e.rate);
  put(j, "delta_blocks", e.delta_blocks);
  put(j, "eta", e.eta);
  put(j, "epoch", e.epoch);
  if (e.details) j["details"] = request_to_json(*e.details);
  put(j, "units", e.units);
  put(j, "count", e.count);
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

Event event_from_json(const json& j) {
  static const std::map<std::string, EventType> kTypes = {
      {"request", EventType::Request}, {"quote", EventType::Quote},     {"reject", EventType::Reject},
      {"assign", EventType::Assign},   {"expire", EventType::Expire},   {"pickup", EventType::Pickup},
      {"dropoff", EventType::Dropoff}, {"payment", EventType::Payment}, {"move", EventType::Move}};
  Event e;
  e.seq = j.at("seq").get<std::int64_t>();
  e.round = j.at("round").get<Round>();
  auto t = kTypes.find(j.at("type").get<std::string>());
  if (t == kTypes.end()) throw InputError("unknown event type in trace");
  e.type = t->second;
  if (j.contains("request")) e.request = j.at("request").get<RequestId>();
  if (j.contains("vehicle")) e.vehicle = j.at("vehicle").get<VehicleId>();
  if (j.contains("amount")) e.amount = money_from(j.at("amount"));
  if (j.contains("rate")) e.rate = money_from(j.at("rate"));
  if (j.contains("delta_blocks")) e.delta_blocks = j.at("delta_blocks").get<std::int64_t>();
  if (j.contains("eta")) e.eta = j.at("eta").get<Round>();
  if (j.contains("epoch")) e.epoch = j.at("epoch").get<std::int64_t>();
  if (j.contains("details")) e.details = request_from_json(j.at("details"));
  if (j.contains("units")) e.units = j.at("units").get<std::int64_t>();
  if (j.contains("count")) e.count = j.at("count").get<std::int64_t>();
  if (j.contains("note")) e.note = j.at("note").get<std::string>();
  return e;
}

void write_trace(std::ostream& out, const SimTrace& trace) {
  json header = {{"schema", "amod-trace"},
                 {"schema_version", kTraceSchemaVersion},
                 {"artifact_version", kArtifactVersion},
                 {"mechanism", trace.mechanism},
                 {"seed", trace.config.demand.seed},
                 {"config", config_to_json(trace.config)}};
  out << header.dump() << '\n';
  for (const Event& e : trace.events) out << event_to_json(e).dump() << '\n';
}

std::string trace_text(const SimTrace& trace) {
  std::ostringstream s;
  write_trace(s, trace);
  return s.str();
}

LoadedTrace read_trace(std::istream& in) {
  LoadedTrace out;
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty trace");
  try {
    const json header = json::parse(line);
    if (header.value("schema", "") != "amod-trace") throw InputError("not a trace file");
    if (header.value("schema_version", 0) != kTraceSchemaVersion)
      throw InputError("unsupported trace schema version");
    out.config = config_from_json(header.at("config"));
    out.mechanism = header.value("mechanism", "");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      out.events.push_back(event_from_json(json::parse(line)));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed trace: ") + e.what());
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const SimTrace& trace) {
  out << "# amod " << kArtifactVersion << " mechanism=" << trace.mechanism
      << " seed=" << trace.config.demand.seed << '\n';
  out << "# config " << config_to_json(trace.config).dump() << '\n';
  out << "round,total_cost,served_demand,w_prime,w,revenue,open_requests,expired,rejected\n";
  for (const MetricRow& r : trace.rows) {
    out << r.round << ',' << decimal(r.total_cost) << ',' << r.served_demand << ','
        << (r.w_prime ? decimal(*r.w_prime) : "") << ',' << (r.w ? decimal(*r.w) : "") << ','
        << decimal(r.revenue) << ',' << r.open_requests << ',' << r.expired << ',' << r.rejected << '\n';
  }
}

}  // namespace amod
