#include "dualrail/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "dualrail/random.hpp"

namespace dualrail {

void SweepConfig::validate() const {
  if (lengths.empty() || deltas.empty() || correlations.empty())
    throw std::invalid_argument("sweep: N, Delta and c lists must be non-empty");
  for (int n : lengths)
    if (n < 2) throw std::invalid_argument("sweep: chain lengths must be >= 2");
  for (double d : deltas)
    if (!(d >= 0.0 && d < 1.0)) throw std::invalid_argument("sweep: Delta must lie in [0, 1)");
  for (double c : correlations)
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("sweep: c must lie in [0, 1]");
  if (samples < 1) throw std::invalid_argument("sweep: samples must be >= 1");
  scheduler.validate();
}

std::optional<double> SweepRecord::time_to_reach(double failure_target) const {
  for (const auto& [t, p] : curve)
    if (p <= failure_target) return t;
  return std::nullopt;
}

std::uint64_t sample_seed(std::uint64_t base, int length, double delta, double correlation, int sample) {
  return derive_seed({base, static_cast<std::uint64_t>(length), std::bit_cast<std::uint64_t>(delta),
                      std::bit_cast<std::uint64_t>(correlation), static_cast<std::uint64_t>(sample)});
}

SweepRecord run_sample(int length, double delta, double correlation, int sample, const SweepConfig& config) {
  SweepRecord record;
  record.length = length;
  record.delta = delta;
  record.correlation = correlation;
  record.sample = sample;
  record.seed = sample_seed(config.base_seed, length, delta, correlation, sample);

  // The two chains always get independent disorder.
  const auto chain1 = build_chain(length, {delta, correlation, derive_seed({record.seed, 1})});
  const auto chain2 = build_chain(length, {delta, correlation, derive_seed({record.seed, 2})});
  const auto prop1 = diagonalize(chain1, config.convention);
  const auto prop2 = diagonalize(chain2, config.convention);
  const auto schedule = build_schedule(prop1, prop2, config.scheduler);

  record.measurements = schedule.measurements();
  record.total_time = schedule.total_time();
  record.achieved = schedule.achieved;
  record.failure = schedule.final_failure();
  double tau = 0.0;
  for (std::size_t l = 0; l < schedule.trace.steps(); ++l) {
    tau += schedule.trace.intervals[l];
    record.curve.emplace_back(tau, schedule.trace.P[l + 1]);
  }
  return record;
}

std::vector<SweepRecord> run_sweep(const SweepConfig& config) {
  config.validate();
  struct Task {
    int length;
    double delta;
    double correlation;
    int sample;
  };
  std::vector<Task> tasks;
  for (int n : config.lengths)
    for (double d : config.deltas)
      for (double c : config.correlations)
        for (int s = 0; s < config.samples; ++s) tasks.push_back({n, d, c, s});

  std::vector<SweepRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& t = tasks[i];
      records[i] = run_sample(t.length, t.delta, t.correlation, t.sample, config);
    }
  };
  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  return records;
}

namespace {

std::pair<double, double> mean_and_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

using CellKey = std::tuple<int, double, double>;

}  // namespace

std::vector<CellSummary> summarize(const std::vector<SweepRecord>& records) {
  std::map<CellKey, std::vector<const SweepRecord*>> cells;
  for (const auto& r : records) cells[{r.length, r.delta, r.correlation}].push_back(&r);

  std::vector<CellSummary> out;
  for (const auto& [key, members] : cells) {
    CellSummary s;
    std::tie(s.length, s.delta, s.correlation) = key;
    s.samples = static_cast<int>(members.size());
    std::vector<double> times, counts;
    for (const auto* r : members) {
      if (!r->achieved) continue;
      ++s.achieved;
      times.push_back(r->total_time);
      counts.push_back(r->measurements);
    }
    std::tie(s.mean_time, s.std_time) = mean_and_std(times);
    std::tie(s.mean_measurements, s.std_measurements) = mean_and_std(counts);
    out.push_back(s);
  }
  return out;
}

double ScalingFit::predict(int length, double failure) const {
  return prefactor * std::pow(static_cast<double>(length), exponent) * std::abs(std::log(failure));
}

std::vector<double> default_failure_grid() { return {0.3, 0.1, 0.03, 0.01}; }

ScalingFit fit_scaling(const std::vector<SweepRecord>& records, const std::vector<double>& failure_grid) {
  if (failure_grid.empty()) throw std::invalid_argument("fit_scaling: empty failure grid");
  for (double p : failure_grid)
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("fit_scaling: failure levels must lie in (0, 1)");

  std::vector<double> xs, ys;
  std::vector<int> lengths;
  std::optional<double> delta;
  bool mixed = false;
  for (const auto& r : records) {
    if (!r.achieved) continue;
    if (delta && *delta != r.delta) mixed = true;
    delta = r.delta;
    for (double p : failure_grid) {
      const auto t = r.time_to_reach(p);
      if (!t || !(*t > 0.0)) continue;
      xs.push_back(std::log(static_cast<double>(r.length)));
      ys.push_back(std::log(*t / std::abs(std::log(p))));
      lengths.push_back(r.length);
    }
  }
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  if (lengths.size() < 4) throw std::invalid_argument("fit_scaling: need achieved data for at least 4 distinct N");

  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  ScalingFit fit;
  fit.delta = mixed ? std::numeric_limits<double>::quiet_NaN() : *delta;
  fit.exponent = sxy / sxx;
  const double intercept = my - fit.exponent * mx;
  fit.prefactor = std::exp(intercept);
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + fit.exponent * xs[i]);
    rss += r * r;
  }
  fit.rms_log_residual = std::sqrt(rss / n);
  fit.points = static_cast<int>(xs.size());
  return fit;
}

// ---------------------------------------------------------------------------

std::string format_number(double value) {
  std::ostringstream s;
  s.precision(10);
  s << value;
  return s.str();
}

namespace {

std::string format_stat(double mean, double stddev, int count) {
  if (count == 0) return "NA";
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(1);
  s << mean << "+-";
  if (count < 2)
    s << "NA";
  else
    s << stddev;
  return s.str();
}

}  // namespace

void write_table_csv(std::ostream& out, const std::string& label, const std::vector<CellSummary>& columns,
                     bool by_correlation) {
  out << "quantity";
  for (const auto& c : columns) out << ',' << label << '=' << format_number(by_correlation ? c.correlation : c.delta);
  out << "\nt";
  for (const auto& c : columns) out << ',' << format_stat(c.mean_time, c.std_time, c.achieved);
  out << "\nM";
  for (const auto& c : columns) out << ',' << format_stat(c.mean_measurements, c.std_measurements, c.achieved);
  out << '\n';
}

void write_records_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << "N,delta,c,sample,seed,M,total_time,achieved,failure,curve\n";
  const auto old = out.precision(17);
  for (const auto& r : records) {
    out << r.length << ',' << r.delta << ',' << r.correlation << ',' << r.sample << ',' << r.seed << ','
        << r.measurements << ',' << r.total_time << ',' << (r.achieved ? 1 : 0) << ',' << r.failure << ',';
    for (std::size_t i = 0; i < r.curve.size(); ++i) {
      if (i) out << ';';
      out << r.curve[i].first << ':' << r.curve[i].second;
    }
    out << '\n';
  }
  out.precision(old);
}

std::vector<SweepRecord> read_records_csv(std::istream& in) {
  std::vector<SweepRecord> records;
  std::string line;
  if (!std::getline(in, line) || line.rfind("N,delta,c", 0) != 0)
    throw std::runtime_error("records csv: missing header");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() == 9) cells.emplace_back();
    if (cells.size() != 10) throw std::runtime_error("records csv: expected 10 columns in '" + line + "'");
    SweepRecord r;
    r.length = std::stoi(cells[0]);
    r.delta = std::stod(cells[1]);
    r.correlation = std::stod(cells[2]);
    r.sample = std::stoi(cells[3]);
    r.seed = std::stoull(cells[4]);
    r.measurements = std::stoi(cells[5]);
    r.total_time = std::stod(cells[6]);
    r.achieved = cells[7] == "1";
    r.failure = std::stod(cells[8]);
    std::istringstream curve(cells[9]);
    std::string point;
    while (std::getline(curve, point, ';')) {
      const auto colon = point.find(':');
      if (colon == std::string::npos) throw std::runtime_error("records csv: bad curve point '" + point + "'");
      r.curve.emplace_back(std::stod(point.substr(0, colon)), std::stod(point.substr(colon + 1)));
    }
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

struct CurvePoint {
  int length;
  double delta;
  double correlation;
  double failure;
  double mean_time;
  int count;
};

std::vector<CurvePoint> curve_points(const std::vector<SweepRecord>& records, const std::vector<double>& grid) {
  std::map<CellKey, std::vector<const SweepRecord*>> cells;
  for (const auto& r : records) cells[{r.length, r.delta, r.correlation}].push_back(&r);
  std::vector<CurvePoint> out;
  for (const auto& [key, members] : cells) {
    auto sorted_grid = grid;
    std::sort(sorted_grid.begin(), sorted_grid.end(), std::greater<>());
    for (double p : sorted_grid) {
      double sum = 0.0;
      int count = 0;
      for (const auto* r : members) {
        if (!r->achieved) continue;
        if (auto t = r->time_to_reach(p)) {
          sum += *t;
          ++count;
        }
      }
      if (count > 0) out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), p, sum / count, count});
    }
  }
  return out;
}

void write_svg(std::ostream& out, const std::vector<CurvePoint>& points) {
  const double width = 640, height = 420, margin = 50;
  double max_x = 1e-9, max_y = 1e-9;
  for (const auto& p : points) {
    max_x = std::max(max_x, std::abs(std::log(p.failure)));
    max_y = std::max(max_y, p.mean_time);
  }
  auto sx = [&](double x) { return margin + (width - 2 * margin) * x / max_x; };
  auto sy = [&](double y) { return height - margin - (height - 2 * margin) * y / max_y; };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">|ln P|</text>\n";
  out << "<text x=\"14\" y=\"" << height / 2 << "\" transform=\"rotate(-90 14 " << height / 2
      << ")\" text-anchor=\"middle\">t [hbar/J]</text>\n";
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
  std::map<CellKey, std::vector<const CurvePoint*>> series;
  for (const auto& p : points) series[{p.length, p.delta, p.correlation}].push_back(&p);
  std::size_t index = 0;
  for (const auto& [key, members] : series) {
    const char* color = colors[index++ % std::size(colors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto* p : members) out << sx(std::abs(std::log(p->failure))) << ',' << sy(p->mean_time) << ' ';
    out << "\"/>\n";
    const auto* last = members.back();
    out << "<text x=\"" << sx(std::abs(std::log(last->failure))) + 4 << "\" y=\"" << sy(last->mean_time)
        << "\" font-size=\"10\" fill=\"" << color << "\">N=" << std::get<0>(key)
        << " D=" << format_number(std::get<1>(key)) << "</text>\n";
  }
  out << "</svg>\n";
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<std::string> emit_report(const std::vector<SweepRecord>& records, const std::vector<ScalingFit>& fits,
                                     const ReportOptions& options) {
  namespace fs = std::filesystem;
  const fs::path dir(options.directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());

  std::vector<std::string> written;
  const auto summaries = summarize(records);

  {
    auto out = open_output(dir / "cells.csv");
    out << "N,delta,c,samples,achieved,junk_fraction,mean_t,std_t,mean_M,std_M\n";
    for (const auto& s : summaries) {
      out << s.length << ',' << format_number(s.delta) << ',' << format_number(s.correlation) << ',' << s.samples
          << ',' << s.achieved << ',' << format_number(s.junk_fraction()) << ',' << format_number(s.mean_time) << ','
          << (s.achieved >= 2 ? format_number(s.std_time) : "NA") << ',' << format_number(s.mean_measurements) << ','
          << (s.achieved >= 2 ? format_number(s.std_measurements) : "NA") << '\n';
    }
    written.push_back((dir / "cells.csv").string());
  }
  {
    auto out = open_output(dir / "records.csv");
    write_records_csv(out, records);
    written.push_back((dir / "records.csv").string());
  }

  // Summary tables: Delta across columns for each (N, c); c across columns for each (N, Delta).
  std::map<std::pair<int, double>, std::vector<CellSummary>> by_delta, by_correlation;
  for (const auto& s : summaries) {
    by_delta[{s.length, s.correlation}].push_back(s);
    by_correlation[{s.length, s.delta}].push_back(s);
  }
  if (summaries.empty()) {
    auto out = open_output(dir / "table_delta.csv");
    write_table_csv(out, "delta", {}, false);
    written.push_back((dir / "table_delta.csv").string());
  }
  for (auto& [key, columns] : by_delta) {
    std::sort(columns.begin(), columns.end(), [](const auto& a, const auto& b) { return a.delta < b.delta; });
    const auto name = "table_delta_N" + std::to_string(key.first) + "_c" + format_number(key.second) + ".csv";
    auto out = open_output(dir / name);
    write_table_csv(out, "delta", columns, false);
    written.push_back((dir / name).string());
  }
  for (auto& [key, columns] : by_correlation) {
    if (columns.size() < 2) continue;
    std::sort(columns.begin(), columns.end(),
              [](const auto& a, const auto& b) { return a.correlation < b.correlation; });
    const auto name = "table_c_N" + std::to_string(key.first) + "_delta" + format_number(key.second) + ".csv";
    auto out = open_output(dir / name);
    write_table_csv(out, "c", columns, true);
    written.push_back((dir / name).string());
  }

  const auto points = curve_points(records, options.failure_grid);
  {
    auto out = open_output(dir / "curves.csv");
    out << "N,delta,c,P,abs_ln_P,mean_t,samples\n";
    for (const auto& p : points)
      out << p.length << ',' << format_number(p.delta) << ',' << format_number(p.correlation) << ','
          << format_number(p.failure) << ',' << format_number(std::abs(std::log(p.failure))) << ','
          << format_number(p.mean_time) << ',' << p.count << '\n';
    written.push_back((dir / "curves.csv").string());
  }
  {
    auto out = open_output(dir / "fits.csv");
    out << "delta,prefactor,exponent,rms_log_residual,points\n";
    for (const auto& f : fits)
      out << format_number(f.delta) << ',' << format_number(f.prefactor) << ',' << format_number(f.exponent) << ','
          << format_number(f.rms_log_residual) << ',' << f.points << '\n';
    written.push_back((dir / "fits.csv").string());
  }
  if (options.svg) {
    auto out = open_output(dir / "curves.svg");
    write_svg(out, points);
    written.push_back((dir / "curves.svg").string());
  }
  return written;
}

}  // namespace dualrail
