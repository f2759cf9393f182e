#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dualrail/hamiltonians.hpp"
#include "dualrail/scheduler.hpp"

namespace dualrail {

struct SweepConfig {
  std::vector<int> lengths{20};
  std::vector<double> deltas{0.0};
  std::vector<double> correlations{0.5};
  int samples = 10;
  SchedulerConfig scheduler;
  Convention convention = Convention::UnitHopping;
  std::uint64_t base_seed = 2006;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

/// One disorder realization of a chain pair and the schedule found for it.
struct SweepRecord {
  int length = 0;
  double delta = 0.0;
  double correlation = 0.0;
  int sample = 0;
  std::uint64_t seed = 0;
  int measurements = 0;
  double total_time = 0.0;
  bool achieved = false;
  double failure = 1.0;
  /// (cumulative time, joint failure) after each measurement.
  std::vector<std::pair<double, double>> curve;

  /// Elapsed time at which the joint failure first drops to P or below.
  std::optional<double> time_to_reach(double failure_target) const;
};

/// Seeds of the two chains for a given sweep cell and sample.
std::uint64_t sample_seed(std::uint64_t base, int length, double delta, double correlation, int sample);

SweepRecord run_sample(int length, double delta, double correlation, int sample, const SweepConfig& config);

/// Every (N, Delta, c, sample) combination, ordered by cell then sample.
std::vector<SweepRecord> run_sweep(const SweepConfig& config);

struct CellSummary {
  int length = 0;
  double delta = 0.0;
  double correlation = 0.0;
  int samples = 0;
  int achieved = 0;
  double mean_time = 0.0;
  double std_time = 0.0;  // sample standard deviation over achieved samples, 0 if fewer than 2
  double mean_measurements = 0.0;
  double std_measurements = 0.0;

  double junk_fraction() const { return samples > 0 ? 1.0 - static_cast<double>(achieved) / samples : 0.0; }
};

std::vector<CellSummary> summarize(const std::vector<SweepRecord>& records);

/// t(P, N) = a * N^b * |ln P|
struct ScalingFit {
  double delta = 0.0;  // shared Delta of the fitted records; NaN when they mix
  double prefactor = 0.0;
  double exponent = 0.0;
  double rms_log_residual = 0.0;
  int points = 0;

  double predict(int length, double failure) const;
};

/// Least-squares fit of ln(t / |ln P|) = ln a + b ln N over achieved records
/// and the given failure levels.
ScalingFit fit_scaling(const std::vector<SweepRecord>& records, const std::vector<double>& failure_grid);

std::vector<double> default_failure_grid();

struct ReportOptions {
  std::string directory = ".";
  bool svg = false;
  std::vector<double> failure_grid = default_failure_grid();
};

/// Writes cells.csv, records.csv, table_delta_*.csv / table_c_*.csv (summary
/// layout: rows t and M, one column per Delta or c), curves.csv (t against
/// |ln P| per N and Delta), fits.csv and, with svg, curves.svg. Returns the
/// paths written.
std::vector<std::string> emit_report(const std::vector<SweepRecord>& records, const std::vector<ScalingFit>& fits,
                                     const ReportOptions& options);

void write_records_csv(std::ostream& out, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_records_csv(std::istream& in);

/// Summary table: header "quantity,<label>=v1,..." then rows "t" and "M" with "mean+-std" entries.
void write_table_csv(std::ostream& out, const std::string& label, const std::vector<CellSummary>& columns,
                     bool by_correlation);

std::string format_number(double value);

}  // namespace dualrail
