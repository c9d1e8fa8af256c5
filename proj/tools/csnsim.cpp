// csnsim: command-line front end for the concentric sensor network simulator.
//
//   csnsim run <scenario> -o <dir> [--trace-gz] [--throughput-window total|last-delivery]
//   csnsim table <2|3> -o <csv>
//   csnsim sweep <spec> -o <csv> [--jobs N]

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "csn/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Concentric sensor network jitter-buffer simulator"};
  app.require_subcommand(1);

  std::string scenario, run_out, window = "total";
  bool trace_gz = false;
  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("scenario", scenario, "Scenario file")->required();
  run->add_option("-o,--out", run_out, "Output directory")->required();
  run->add_flag("--trace-gz", trace_gz, "gzip the trace file");
  run->add_option("--throughput-window", window, "total|last-delivery")
      ->check(CLI::IsMember({"total", "last-delivery"}));

  int which = 0;
  std::string table_out;
  auto* table = app.add_subcommand("table", "Reproduce the jitter tables (2: no buffers, 3: buffers)");
  table->add_option("which", which, "2 or 3")->required()->check(CLI::IsMember({2, 3}));
  table->add_option("-o,--out", table_out, "Output CSV")->required();

  std::string spec, sweep_out;
  unsigned jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("spec", spec, "Sweep spec file")->required();
  sweep->add_option("-o,--out", sweep_out, "Output CSV")->required();
  sweep->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : csn::cli::kExitInvalid;
  }

  if (*run) {
    csn::cli::RunFlags flags;
    flags.trace_gz = trace_gz;
    flags.throughput_window =
        window == "last-delivery" ? csn::ThroughputWindow::LastDelivery : csn::ThroughputWindow::Total;
    return csn::cli::cmd_run(scenario, run_out, flags, std::cout, std::cerr);
  }
  if (*table) return csn::cli::cmd_table(which, table_out, std::cout, std::cerr);
  return csn::cli::cmd_sweep(spec, sweep_out, jobs, std::cerr);
}
