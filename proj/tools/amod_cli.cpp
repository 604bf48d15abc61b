// Command-line front end: run experiments, audit incentives, compare
// summaries and replay recorded traces.
#include "amod/audit.hpp"
#include "amod/experiment.hpp"
#include "amod/trace_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace amod;
using nlohmann::json;

enum Exit : int { kOk = 0, kFailure = 1, kBadConfig = 2, kCapacity = 3 };

struct CommonFlags {
  std::string preset = "desk";
  std::string config_file;
  std::optional<std::string> mechanism;
  std::optional<std::string> settlement;
  std::optional<std::uint64_t> seed;
  std::optional<Round> rounds;
  std::optional<int> vehicles;
  std::optional<int> grid;
  int jobs = 0;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "desk | full")->capture_default_str();
    app->add_option("--config", config_file, "JSON config file; flags override it");
    app->add_option("--mechanism", mechanism, "iors | auction | optimal-round | optimal-hindsight");
    app->add_option("--settlement", settlement, "literal | epoch");
    app->add_option("--seed", seed, "first seed");
    app->add_option("--rounds", rounds, "horizon T");
    app->add_option("--vehicles", vehicles, "fleet size");
    app->add_option("--grid", grid, "square grid side");
    app->add_option("--jobs", jobs, "worker threads (0 = all processors)");
  }

  SimConfig build() const {
    SimConfig c = preset_or_file();
    if (mechanism) c.mechanism = parse_mechanism(*mechanism);
    if (settlement) c.settlement = parse_settlement(*settlement);
    if (seed) c.demand.seed = *seed;
    if (rounds) c.demand.rounds = *rounds;
    if (vehicles) c.demand.fleet_size = *vehicles;
    if (grid) c.grid.rows = c.grid.cols = *grid;
    c.validate();
    return c;
  }

 private:
  SimConfig preset_or_file() const {
    if (config_file.empty()) return amod::preset(preset);
    std::ifstream in(config_file);
    if (!in) throw ConfigError("cannot read config file " + config_file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    // A config file overlays the chosen preset.
    json base = config_to_json(amod::preset(preset));
    base.merge_patch(j);
    return config_from_json(base);
  }
};

int cmd_run(const CommonFlags& flags, int replicates, const std::string& out, bool no_timing) {
  RunConfig rc;
  rc.sim = flags.build();
  rc.replicates = replicates;
  rc.first_seed = rc.sim.demand.seed;
  rc.out = out;
  rc.jobs = flags.jobs;
  rc.timing = !no_timing;
  const ExperimentResult res = run_experiment(rc);
  const json& s = res.summary;
  std::cout << "mechanism=" << s.at("mechanism").get<std::string>() << " replicates=" << replicates
            << " w_mean=" << s.at("w_mean").get<double>() << " w_std=" << s.at("w_std").get<double>()
            << " revenue_mean=" << s.at("revenue_mean").get<double>()
            << " served_demand_mean=" << s.at("served_demand_mean").get<double>() << '\n';
  if (!out.empty()) std::cout << "wrote " << res.files.size() << " files under " << out << '\n';
  return kOk;
}

int cmd_audit(const CommonFlags& flags, int seeds, int per_seed, const std::string& out,
              const std::string& repro) {
  if (!repro.empty()) {
    std::ifstream in(repro);
    if (!in) throw ConfigError("cannot read repro bundle " + repro);
    const json bundle = json::parse(in);
    const SimConfig cfg = config_from_json(bundle.at("config"));
    const json& m = bundle.at("report").at("manipulation");
    Manipulation man;
    man.target = m.at("target").get<RequestId>();
    if (m.at("kind") == "delay") {
      man.kind = Manipulation::Kind::Delay;
      man.delay = m.at("delay").get<Round>();
    } else {
      man.kind = Manipulation::Kind::Deadline;
      man.reported_deadline = m.at("reported_deadline").get<Round>();
    }
    const AuditReport r = replay_with_manipulation(run(cfg), man);
    std::cout << report_to_json(r).dump(2) << '\n';
    return r.gain ? kFailure : kOk;
  }

  const SimConfig cfg = flags.build();
  SweepOptions opt;
  opt.seeds = seeds;
  opt.per_seed = per_seed;
  opt.first_seed = cfg.demand.seed;
  opt.jobs = resolve_jobs(flags.jobs);
  const SweepReport rep = sweep(cfg, opt);
  json doc = {{"mechanism", to_string(cfg.mechanism)},
              {"config", config_to_json(cfg)},
              {"manipulations", rep.reports.size()},
              {"gains", rep.gains},
              {"service_changes", rep.service_changes},
              {"ir_violations", rep.ir_violations}};
  json gains = json::array();
  for (const AuditReport& r : rep.reports)
    if (r.gain) gains.push_back(report_to_json(r));
  doc["gain_reports"] = gains;
  std::cout << "manipulations=" << rep.reports.size() << " gains=" << rep.gains
            << " service_changes=" << rep.service_changes << '\n';
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream(std::filesystem::path(out) / "audit_report.json") << doc.dump(2) << '\n';
  }
  if (rep.gains > 0) {
    const std::string dir = out.empty() ? "audit_repro" : (std::filesystem::path(out) / "repro").string();
    const auto paths = write_gain_bundles(cfg, rep, dir);
    std::cerr << "GAIN-FOUND: " << rep.gains << " manipulation(s); first repro bundle: " << paths.front() << '\n';
    return kFailure;
  }
  return kOk;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& out) {
  std::vector<json> summaries;
  for (const std::string& f : files) {
    std::ifstream in(f);
    if (!in) throw InputError("cannot read summary " + f);
    summaries.push_back(json::parse(in));
  }
  const std::string table = compare(summaries);
  if (out.empty())
    std::cout << table;
  else
    std::ofstream(out) << table;
  return kOk;
}

int cmd_replay(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot read trace " + file);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string original = buf.str();
  std::istringstream parse(original);
  const LoadedTrace loaded = read_trace(parse);
  const SimTrace again = run(loaded.config);
  const std::string text = trace_text(again);
  if (text == original) {
    std::cout << "replay identical: " << again.events.size() << " events\n";
    return kOk;
  }
  std::cout << "replay DIFFERS from " << file << '\n';
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ride-sharing fleet dispatch simulator with posted-price coalition fares"};
  app.require_subcommand(1);

  CommonFlags run_flags, audit_flags;
  int replicates = 1;
  std::string run_out = "out";
  bool no_timing = false;
  auto* run_cmd = app.add_subcommand("run", "run replicates of one mechanism");
  run_flags.attach(run_cmd);
  run_cmd->add_option("--replicates", replicates, "number of seeds")->capture_default_str();
  run_cmd->add_option("--out", run_out, "output directory ('' to skip writing)")->capture_default_str();
  run_cmd->add_flag("--no-timing", no_timing, "omit wall-clock fields for byte-identical outputs");

  int seeds = 20, per_seed = 50;
  std::string audit_out, repro;
  auto* audit_cmd = app.add_subcommand("audit", "sweep single-report manipulations");
  audit_flags.attach(audit_cmd);
  audit_cmd->add_option("--seeds", seeds, "traces to manipulate")->capture_default_str();
  audit_cmd->add_option("--per-seed", per_seed, "manipulations per trace")->capture_default_str();
  audit_cmd->add_option("--out", audit_out, "report directory");
  audit_cmd->add_option("--repro", repro, "re-run a GAIN-FOUND bundle");

  std::vector<std::string> summaries;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "align summaries of several mechanisms");
  compare_cmd->add_option("summaries", summaries, "summary.json files")->required();
  compare_cmd->add_option("--out", compare_out, "CSV output file");

  std::string trace_file;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a trace from its header and compare");
  replay_cmd->add_option("trace", trace_file, "trace .jsonl file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_flags, replicates, run_out, no_timing);
    if (*audit_cmd) return cmd_audit(audit_flags, seeds, per_seed, audit_out, repro);
    if (*compare_cmd) return cmd_compare(summaries, compare_out);
    if (*replay_cmd) return cmd_replay(trace_file);
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kCapacity;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
