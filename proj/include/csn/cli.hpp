#pragma once

// Command implementations behind the csnsim executable. Each returns the
// process exit code and writes diagnostics to `err`.

#include <filesystem>
#include <ostream>
#include <string>

#include "csn/config_io.hpp"
#include "csn/engine.hpp"
#include "csn/experiments.hpp"
#include "csn/metrics.hpp"
#include "csn/trace_io.hpp"

namespace csn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitDisconnected = 2;

struct RunFlags {
  bool trace_gz = false;
  ThroughputWindow throughput_window = ThroughputWindow::Total;
};

/// Writes trace.txt (or trace.txt.gz), metrics.txt, topology.csv and
/// delays.csv into out_dir.
inline int cmd_run(const std::string& scenario_path, const std::string& out_dir, const RunFlags& flags,
                   std::ostream& out, std::ostream& err) {
  ScenarioConfig config;
  try {
    config = load_scenario(scenario_path);
  } catch (const ConfigError& e) {
    err << "error: " << scenario_path << ": " << e.what() << "\n";
    return kExitInvalid;
  }
  if (const auto v = validate(config); !v.empty()) {
    err << "error: " << scenario_path << ": invalid scenario\n" << format_violations(v);
    return kExitInvalid;
  }
  try {
    const auto trace = run(config);
    const auto report = compute_metrics(trace, flags.throughput_window);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_trace_file((dir / (flags.trace_gz ? "trace.txt.gz" : "trace.txt")).string(), trace, flags.trace_gz);
    write_text_file((dir / "metrics.txt").string(), format_report(report));
    write_text_file((dir / "topology.csv").string(), topology_csv(trace.topology));
    write_text_file((dir / "delays.csv").string(), decomposition_csv(report));
    out << format_report(report);
  } catch (const ConnectivityUnachievable& e) {
    err << "error: " << e.what() << "\n";
    return kExitDisconnected;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

inline int cmd_table(int which, const std::string& out_csv, std::ostream& out, std::ostream& err) {
  if (which != 2 && which != 3) {
    err << "error: table must be 2 or 3\n";
    return kExitInvalid;
  }
  try {
    const auto rows = run_table(which);
    write_text_file(out_csv, table_csv(rows));
    out << table_csv(rows);
    if (which == 2) {
      out << "verdict: jitter strictly increasing: " << (jitter_strictly_increasing(rows) ? "PASS" : "FAIL")
          << "\n";
    } else {
      out << "verdict: jitter constant within 10% of mean: " << (jitter_constant(rows) ? "PASS" : "FAIL")
          << "\n";
    }
  } catch (const ConnectivityUnachievable& e) {
    err << "error: " << e.what() << "\n";
    return kExitDisconnected;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

inline int cmd_sweep(const std::string& spec_path, const std::string& out_csv, unsigned jobs, std::ostream& err) {
  SweepSpec spec;
  ScenarioConfig base;
  try {
    spec = load_sweep_spec(spec_path);
    base = load_scenario(spec.base_path);
  } catch (const ConfigError& e) {
    err << "error: " << spec_path << ": " << e.what() << "\n";
    return kExitInvalid;
  }
  try {
    write_text_file(out_csv, sweep_csv(spec, run_sweep(base, spec, jobs)));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

}  // namespace csn::cli
