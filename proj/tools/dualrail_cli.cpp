// dualrail: command-line driver for conclusive dual-rail transfer over two
// disordered Heisenberg chains.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dualrail/harness.hpp"
#include "dualrail/protocol.hpp"
#include "dualrail/tomography.hpp"

namespace {

using namespace dualrail;

constexpr int kUsageError = 1;
constexpr int kIncapable = 2;

struct Options {
  std::vector<int> lengths{20};
  std::vector<double> deltas{0.0};
  std::vector<double> correlations{0.5};
  int samples = 10;
  std::uint64_t seed = 2006;
  std::string out;
  std::string format = "csv";
  std::string convention = "unit-hopping";
  std::string objective = "step-success";
  std::string chain1_path, chain2_path;
  int threads = 0;

  SchedulerConfig scheduler;

  // simulate
  int trials = 1;
  double theta = 1.0;
  double phi = 0.5;

  // fit
  std::string records_path;

  // tomography
  long shots = 0;
  double tomo_dt = 0.01;
  double span = 0.0;
  std::string endpoints_path;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--n", o.lengths, "Chain length(s)")->delimiter(',');
  cmd->add_option("--delta", o.deltas, "Disorder strength(s) Delta in [0,1)")->delimiter(',');
  cmd->add_option("--c", o.correlations, "Sign correlation(s) c in [0,1]")->delimiter(',');
  cmd->add_option("--seed", o.seed, "Base RNG seed");
  cmd->add_option("--convention", o.convention, "Coupling convention")
      ->check(CLI::IsMember({"unit-hopping", "pauli"}));
}

void add_scheduler(CLI::App* cmd, Options& o) {
  auto& s = o.scheduler;
  cmd->add_option("--target-failure", s.target_failure, "Joint failure probability to reach");
  cmd->add_option("--time-step", s.time_step, "Search grid resolution [hbar/J]");
  cmd->add_option("--horizon", s.horizon, "Search window per measurement [hbar/J]; 0 = N");
  cmd->add_option("--tolerance", s.amplitude_tolerance, "Relative tolerance on | |F|-|G| |");
  cmd->add_flag("--slope-match", s.slope_match, "Also require matching slopes of |F| and |G|");
  cmd->add_option("--slope-tolerance", s.slope_tolerance, "Relative tolerance on the slopes");
  cmd->add_option("--max-measurements", s.max_measurements, "Cap on the number of measurements");
  cmd->add_option("--objective", o.objective, "Greedy objective")
      ->check(CLI::IsMember({"step-success", "failure-rate"}));
}

void add_output(CLI::App* cmd, Options& o, const std::string& what) {
  cmd->add_option("--out", o.out, what);
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "svg"}));
}

void finalize(Options& o) { o.scheduler.objective = objective_from_string(o.objective); }

struct ChainPair {
  SpectralPropagator prop1;
  SpectralPropagator prop2;
};

ChainPair make_pair(const Options& o) {
  const auto convention = convention_from_string(o.convention);
  const int n = o.lengths.front();
  const double delta = o.deltas.front();
  const double c = o.correlations.front();
  const auto chain1 = o.chain1_path.empty() ? build_chain(n, {delta, c, derive_seed({o.seed, 1})})
                                            : load_chain(o.chain1_path);
  const auto chain2 = o.chain2_path.empty() ? build_chain(n, {delta, c, derive_seed({o.seed, 2})})
                                            : load_chain(o.chain2_path);
  return {diagonalize(chain1, convention), diagonalize(chain2, convention)};
}

std::ostream& open_or_stdout(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path.empty() || path == "-") return std::cout;
  holder = std::make_unique<std::ofstream>(path);
  if (!*holder) throw std::runtime_error("cannot write " + path);
  return *holder;
}

int cmd_schedule(Options& o) {
  finalize(o);
  const auto pair = make_pair(o);
  const auto schedule = build_schedule(pair.prop1, pair.prop2, o.scheduler);
  std::unique_ptr<std::ofstream> file;
  write_schedule_csv(open_or_stdout(o.out, file), schedule, o.scheduler);
  std::cerr << (schedule.achieved ? "achieved" : "not achieved") << ": M=" << schedule.measurements()
            << " t=" << schedule.total_time() << " P=" << schedule.final_failure() << '\n';
  return 0;
}

int cmd_simulate(Options& o) {
  finalize(o);
  const auto pair = make_pair(o);
  const auto schedule = build_schedule(pair.prop1, pair.prop2, o.scheduler);
  const auto qubit = LogicalQubit::bloch(o.theta, o.phi);
  std::vector<TransferRecord> records;
  int successes = 0;
  double worst = 1.0;
  for (int trial = 0; trial < o.trials; ++trial) {
    CounterRng rng(derive_seed({o.seed, 0x7472616e73666572ULL, static_cast<std::uint64_t>(trial)}));
    auto record = run_transfer(qubit, schedule, pair.prop1, pair.prop2, rng, o.scheduler.amplitude_tolerance);
    if (record.succeeded()) {
      ++successes;
      worst = std::min(worst, record.fidelity);
    }
    records.push_back(std::move(record));
  }
  std::cout << "schedule: M=" << schedule.measurements() << " t=" << schedule.total_time()
            << " P=" << schedule.final_failure() << (schedule.achieved ? " (achieved)" : " (not achieved)") << '\n';
  std::cout << "transfers: " << successes << "/" << o.trials << " succeeded";
  if (successes > 0) std::cout << ", worst fidelity " << worst;
  std::cout << '\n';
  if (!o.out.empty()) {
    std::unique_ptr<std::ofstream> file;
    write_transfer_log(open_or_stdout(o.out, file), records);
  }
  return 0;
}

SweepConfig sweep_config(const Options& o) {
  SweepConfig config;
  config.lengths = o.lengths;
  config.deltas = o.deltas;
  config.correlations = o.correlations;
  config.samples = o.samples;
  config.scheduler = o.scheduler;
  config.convention = convention_from_string(o.convention);
  config.base_seed = o.seed;
  config.threads = o.threads;
  return config;
}

int cmd_sweep(Options& o) {
  finalize(o);
  const auto records = run_sweep(sweep_config(o));
  for (const auto& s : summarize(records)) {
    std::cout << "N=" << s.length << " delta=" << format_number(s.delta) << " c=" << format_number(s.correlation)
              << ": t=" << s.mean_time << "+-" << s.std_time << " M=" << s.mean_measurements << "+-"
              << s.std_measurements << " achieved " << s.achieved << "/" << s.samples << '\n';
  }
  if (!o.out.empty()) {
    ReportOptions report;
    report.directory = o.out;
    report.svg = o.format == "svg";
    for (const auto& path : emit_report(records, {}, report)) std::cerr << "wrote " << path << '\n';
  }
  return 0;
}

int cmd_fit(Options& o) {
  finalize(o);
  std::vector<SweepRecord> records;
  if (!o.records_path.empty()) {
    std::ifstream in(o.records_path);
    if (!in) throw std::runtime_error("cannot open " + o.records_path);
    records = read_records_csv(in);
  } else {
    records = run_sweep(sweep_config(o));
  }
  std::vector<double> deltas;
  for (const auto& r : records)
    if (std::find(deltas.begin(), deltas.end(), r.delta) == deltas.end()) deltas.push_back(r.delta);
  std::vector<ScalingFit> fits;
  for (double d : deltas) {
    std::vector<SweepRecord> subset;
    for (const auto& r : records)
      if (r.delta == d) subset.push_back(r);
    const auto fit = fit_scaling(subset, default_failure_grid());
    std::cout << "delta=" << format_number(d) << ": t(P) = " << fit.prefactor << " N^" << fit.exponent
              << " |ln P|  (rms log residual " << fit.rms_log_residual << ", " << fit.points << " points)\n";
    fits.push_back(fit);
  }
  if (!o.out.empty()) {
    ReportOptions report;
    report.directory = o.out;
    report.svg = o.format == "svg";
    for (const auto& path : emit_report(records, fits, report)) std::cerr << "wrote " << path << '\n';
  }
  return 0;
}

EndpointFunctions endpoints_for(const Options& o, const SpectralPropagator& prop1, const SpectralPropagator& prop2,
                                double span) {
  TomographyGrid grid{o.tomo_dt, span};
  CounterRng rng(derive_seed({o.seed, 0x746f6d6fULL}));
  return estimate_endpoints(prop1, prop2, o.shots, grid, rng);
}

double default_span(const Options& o) {
  // Long enough for the measurement sequences of N=20 disordered runs.
  return o.span > 0.0 ? o.span : 80.0 * o.lengths.front();
}

int cmd_tomography_estimate(Options& o) {
  finalize(o);
  const auto pair = make_pair(o);
  const auto endpoints = endpoints_for(o, pair.prop1, pair.prop2, default_span(o));
  std::unique_ptr<std::ofstream> file;
  write_endpoints_csv(open_or_stdout(o.out, file), endpoints);
  return 0;
}

int cmd_tomography_certify(Options& o) {
  finalize(o);
  EndpointFunctions endpoints;
  if (!o.endpoints_path.empty()) {
    std::ifstream in(o.endpoints_path);
    if (!in) throw std::runtime_error("cannot open " + o.endpoints_path);
    endpoints = read_endpoints_csv(in);
  } else {
    const auto pair = make_pair(o);
    endpoints = endpoints_for(o, pair.prop1, pair.prop2, default_span(o));
  }
  if (endpoints.length1 == 0 && endpoints.length2 == 0 && !(o.scheduler.horizon > 0.0))
    throw CLI::ValidationError("--horizon", "endpoint data carries no chain lengths; pass --horizon");
  const auto report = certify(endpoints, o.scheduler);
  std::cout << report.summary << '\n';
  if (!o.out.empty()) {
    std::unique_ptr<std::ofstream> file;
    write_schedule_csv(open_or_stdout(o.out, file), report.schedule, o.scheduler);
  }
  return report.capable ? 0 : kIncapable;
}

/// Expands `--config FILE` (flat key=value lines, '#' comments) into trailing
/// `--key value` arguments for every key not already given on the command line.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  auto trim = [](std::string x) {
    const auto b = x.find_first_not_of(" \t\r");
    const auto e = x.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : x.substr(b, e - b + 1);
  };
  auto given = [&](const std::string& flag) {
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ConversionError("config line without '=': " + line);
    const std::string flag = "--" + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (given(flag)) continue;
    if (flag == "--slope-match") {
      if (value == "1" || value == "true" || value == "yes") args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    args.push_back(value);
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conclusive dual-rail state transfer over disordered spin chains"};
  app.add_option("--config", "Flat key=value configuration file; command-line flags override it");
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Schedule one chain pair and simulate transfers");
  add_common(simulate, o);
  add_scheduler(simulate, o);
  simulate->add_option("--trials", o.trials, "Number of simulated transfers")->check(CLI::PositiveNumber);
  simulate->add_option("--theta", o.theta, "Bloch polar angle of the input qubit");
  simulate->add_option("--phi", o.phi, "Bloch azimuth of the input qubit");
  simulate->add_option("--chain1", o.chain1_path, "Load chain 1 from a chain file");
  simulate->add_option("--chain2", o.chain2_path, "Load chain 2 from a chain file");
  simulate->add_option("--out", o.out, "Transfer log CSV");

  auto* schedule = app.add_subcommand("schedule", "Emit the measurement schedule for one chain pair");
  add_common(schedule, o);
  add_scheduler(schedule, o);
  schedule->add_option("--chain1", o.chain1_path, "Load chain 1 from a chain file");
  schedule->add_option("--chain2", o.chain2_path, "Load chain 2 from a chain file");
  schedule->add_option("--out", o.out, "Schedule CSV (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Disorder sweep over N, Delta and c with summary tables");
  add_common(sweep, o);
  add_scheduler(sweep, o);
  sweep->add_option("--samples", o.samples, "Disorder samples per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  add_output(sweep, o, "Report directory");

  auto* fit = app.add_subcommand("fit", "Fit t(P) = a N^b |ln P| per Delta");
  add_common(fit, o);
  add_scheduler(fit, o);
  fit->add_option("--samples", o.samples, "Disorder samples per cell")->check(CLI::PositiveNumber);
  fit->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  fit->add_option("--records", o.records_path, "Fit an existing records.csv instead of sweeping");
  add_output(fit, o, "Report directory");

  auto* tomography = app.add_subcommand("tomography", "End-site tomography and capability certification");
  tomography->require_subcommand(1);
  auto* estimate = tomography->add_subcommand("estimate", "Estimate the four endpoint functions");
  auto* certify_cmd = tomography->add_subcommand("certify", "Certify dual-rail capability from endpoint data");
  for (auto* cmd : {estimate, certify_cmd}) {
    add_common(cmd, o);
    cmd->add_option("--shots", o.shots, "Shots per grid point and observable (0 = exact)");
    cmd->add_option("--tomo-dt", o.tomo_dt, "Endpoint grid spacing [hbar/J]");
    cmd->add_option("--span", o.span, "Endpoint grid span [hbar/J] (default 80 N)");
    cmd->add_option("--chain1", o.chain1_path, "Load chain 1 from a chain file");
    cmd->add_option("--chain2", o.chain2_path, "Load chain 2 from a chain file");
  }
  estimate->add_option("--out", o.out, "Endpoint CSV (default stdout)");
  add_scheduler(certify_cmd, o);
  certify_cmd->add_option("--endpoints", o.endpoints_path, "External endpoint CSV (black-box port)");
  certify_cmd->add_option("--out", o.out, "Schedule CSV");

  try {
    auto args = expand_config(argc, argv);
    args.erase(args.begin());
    std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*schedule) return cmd_schedule(o);
    if (*sweep) return cmd_sweep(o);
    if (*fit) return cmd_fit(o);
    if (*estimate) return cmd_tomography_estimate(o);
    if (*certify_cmd) return cmd_tomography_certify(o);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}
