#include "dualrail/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dualrail {

std::string to_string(Objective objective) {
  return objective == Objective::StepSuccess ? "step-success" : "failure-rate";
}

Objective objective_from_string(const std::string& name) {
  if (name == "step-success") return Objective::StepSuccess;
  if (name == "failure-rate") return Objective::FailureRate;
  throw std::invalid_argument("unknown scheduler objective: " + name);
}

void SchedulerConfig::validate() const {
  if (!(time_step > 0.0)) throw std::invalid_argument("scheduler: time step must be positive");
  if (!(horizon > 0.0) && !(horizon_per_site > 0.0))
    throw std::invalid_argument("scheduler: horizon must be positive");
  if (!(amplitude_tolerance >= 0.0) || !(amplitude_floor > 0.0))
    throw std::invalid_argument("scheduler: amplitude tolerance must be non-negative, floor positive");
  if (!(max_horizon_factor >= 1.0)) throw std::invalid_argument("scheduler: horizon factor must be >= 1");
  if (slope_match && !(slope_tolerance >= 0.0)) throw std::invalid_argument("scheduler: bad slope tolerance");
  if (!(target_failure > 0.0 && target_failure <= 1.0))
    throw std::invalid_argument("scheduler: target failure must lie in (0, 1]");
  if (max_measurements < 0) throw std::invalid_argument("scheduler: negative measurement cap");
}

double SchedulerConfig::horizon_for(int length) const {
  return horizon > 0.0 ? horizon : horizon_per_site * length;
}

std::vector<cplx> ArrivalSource::arrivals_on_grid(double dt, int count) const {
  std::vector<cplx> out(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = arrival(dt * (k + 1));
  return out;
}

double ArrivalSource::time_limit() const { return std::numeric_limits<double>::infinity(); }

std::vector<cplx> PropagatorSource::arrivals_on_grid(double dt, int count) const {
  return branch_.arrivals_on_grid(dt, count);
}

cplx PropagatorSource::commit(double t) {
  branch_.advance(t);
  return branch_.project_end();
}

bool amplitudes_match(cplx f, cplx g, const SchedulerConfig& config) {
  const double a = std::abs(f);
  const double b = std::abs(g);
  return std::abs(a - b) <= config.amplitude_tolerance * std::max({a, b, config.amplitude_floor});
}

namespace {

double modulus_rate(cplx value, cplx rate) {
  const double a = std::abs(value);
  return a > 0.0 ? (std::conj(value) * rate).real() / a : std::abs(rate);
}

struct Evaluator {
  const ArrivalSource& chain1;
  const ArrivalSource& chain2;
  const SchedulerConfig& config;
  double survival;

  double mismatch(double t) const { return std::abs(chain1.arrival(t)) - std::abs(chain2.arrival(t)); }

  bool slopes_match(double t) const {
    if (!config.slope_match) return true;
    const double s1 = modulus_rate(chain1.arrival(t), chain1.arrival_rate(t));
    const double s2 = modulus_rate(chain2.arrival(t), chain2.arrival_rate(t));
    return std::abs(s1 - s2) <= config.slope_tolerance * std::max({std::abs(s1), std::abs(s2), 1.0});
  }

  bool admissible(double t) const {
    return amplitudes_match(chain1.arrival(t), chain2.arrival(t), config) && slopes_match(t);
  }

  double gain(cplx f) const { return survival > 0.0 ? std::norm(f) / survival : 0.0; }

  double score(double t, double g) const {
    if (config.objective == Objective::StepSuccess) return g;
    return -std::log1p(-std::min(g, 1.0 - 1e-16)) / t;
  }
};

/// Root of mismatch(t) inside [lo, hi], given opposite signs at the ends.
double bisect_crossing(const Evaluator& eval, double lo, double hi, double mismatch_lo) {
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double m = eval.mismatch(mid);
    if (m == 0.0) return mid;
    if ((m > 0.0) == (mismatch_lo > 0.0)) {
      lo = mid;
      mismatch_lo = m;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

namespace {

std::optional<double> search_window(const ArrivalSource& chain1, const ArrivalSource& chain2,
                                    const SchedulerConfig& config, double horizon) {
  const double dt = config.time_step;
  const int count = std::max(1, static_cast<int>(std::floor(horizon / dt + 1e-9)));
  const Evaluator eval{chain1, chain2, config, chain1.survival()};
  if (!(eval.survival > 0.0)) return std::nullopt;

  const auto f = chain1.arrivals_on_grid(dt, count);
  const auto g = chain2.arrivals_on_grid(dt, count);
  auto t_at = [dt](int k) { return dt * (k + 1); };

  struct Candidate {
    double t;
    double score;
  };
  std::vector<Candidate> candidates;
  auto consider = [&](double t, cplx amp) {
    const double gain = eval.gain(amp);
    if (!(t > 0.0) || gain < config.min_gain) return;
    candidates.push_back({t, eval.score(t, gain)});
  };
  auto objective = [&](double t) { return eval.score(t, eval.gain(chain1.arrival(t))); };

  std::vector<char> on_grid(static_cast<std::size_t>(count), 0);
  std::vector<double> grid_score(static_cast<std::size_t>(count), 0.0);
  for (int k = 0; k < count; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double t = t_at(k);
    if (amplitudes_match(f[ku], g[ku], config) && eval.slopes_match(t)) {
      on_grid[ku] = 1;
      grid_score[ku] = eval.score(t, eval.gain(f[ku]));
    }
    if (k == 0) continue;
    const double m0 = std::abs(f[ku - 1]) - std::abs(g[ku - 1]);
    const double m1 = std::abs(f[ku]) - std::abs(g[ku]);
    if ((m0 < 0.0 && m1 > 0.0) || (m0 > 0.0 && m1 < 0.0)) {
      const double root = bisect_crossing(eval, t_at(k - 1), t, m0);
      if (eval.slopes_match(root)) consider(root, chain1.arrival(root));
    }
  }

  // Admissible grid points. Interior local maxima of a fully admissible
  // stretch are refined by golden-section search over the neighbouring cells.
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int k = 0; k < count; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (!on_grid[ku]) continue;
    const double tk = t_at(k);
    consider(tk, f[ku]);
    const bool left_ok = k == 0 || on_grid[ku - 1];
    const bool right_ok = k + 1 >= count || on_grid[ku + 1];
    if (!left_ok || !right_ok) continue;
    if ((k > 0 && grid_score[ku - 1] > grid_score[ku]) || (k + 1 < count && grid_score[ku + 1] > grid_score[ku]))
      continue;
    double a = std::max(tk - dt, 0.5 * dt);
    double b = std::min(tk + dt, horizon);
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int iter = 0; iter < 80 && b - a > 1e-12; ++iter) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + ratio * (b - a);
        f2 = objective(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - ratio * (b - a);
        f1 = objective(x1);
      }
    }
    const double refined = 0.5 * (a + b);
    if (objective(refined) >= grid_score[ku] && eval.admissible(refined)) consider(refined, chain1.arrival(refined));
  }
  if (candidates.empty()) return std::nullopt;

  // Highest score wins; near-equal scores go to the earliest time.
  double top = candidates.front().score;
  for (const auto& c : candidates) top = std::max(top, c.score);
  std::optional<double> best;
  for (const auto& c : candidates)
    if (c.score >= top - 1e-9 * std::abs(top) && (!best || c.t < *best)) best = c.t;
  return best;
}

}  // namespace

std::optional<double> find_next_time(const ArrivalSource& chain1, const ArrivalSource& chain2,
                                     const SchedulerConfig& config) {
  config.validate();
  const double base = config.horizon_for(std::max(chain1.length(), chain2.length()));
  if (!(base > 0.0)) throw std::invalid_argument("scheduler: chain length unknown, an explicit horizon is required");
  const double available = std::min(chain1.time_limit(), chain2.time_limit());
  const double limit = std::min(base * std::max(1.0, config.max_horizon_factor), available);
  if (limit < config.time_step) return std::nullopt;
  for (double horizon = std::min(base, limit);; horizon = std::min(2.0 * horizon, limit)) {
    if (auto t = search_window(chain1, chain2, config, horizon)) return t;
    if (horizon >= limit) return std::nullopt;
  }
}

MeasurementSchedule build_schedule(ArrivalSource& chain1, ArrivalSource& chain2, const SchedulerConfig& config) {
  config.validate();
  MeasurementSchedule schedule;
  schedule.target_failure = config.target_failure;
  schedule.trace.clear();
  while (schedule.trace.final_failure() > config.target_failure &&
         schedule.measurements() < config.max_measurements) {
    const auto t = find_next_time(chain1, chain2, config);
    if (!t) break;
    const cplx f = chain1.commit(*t);
    const cplx g = chain2.commit(*t);
    schedule.intervals.push_back(*t);
    schedule.trace.push(*t, f, g, chain1.survival(), chain2.survival());
  }
  schedule.achieved = schedule.trace.final_failure() <= config.target_failure;
  return schedule;
}

MeasurementSchedule build_schedule(const SpectralPropagator& prop1, const SpectralPropagator& prop2,
                                   const SchedulerConfig& config) {
  PropagatorSource chain1(prop1);
  PropagatorSource chain2(prop2);
  return build_schedule(chain1, chain2, config);
}

void write_schedule_csv(std::ostream& out, const MeasurementSchedule& schedule, const SchedulerConfig& config) {
  const auto old = out.precision(17);
  out << "# dualrail schedule\n";
  out << "# time_step=" << config.time_step << '\n';
  out << "# horizon=" << config.horizon << '\n';
  out << "# horizon_per_site=" << config.horizon_per_site << '\n';
  out << "# max_horizon_factor=" << config.max_horizon_factor << '\n';
  out << "# tolerance=" << config.amplitude_tolerance << '\n';
  out << "# amplitude_floor=" << config.amplitude_floor << '\n';
  out << "# slope_match=" << (config.slope_match ? 1 : 0) << '\n';
  out << "# slope_tolerance=" << config.slope_tolerance << '\n';
  out << "# target_failure=" << config.target_failure << '\n';
  out << "# max_measurements=" << config.max_measurements << '\n';
  out << "# min_gain=" << config.min_gain << '\n';
  out << "# objective=" << to_string(config.objective) << '\n';
  out << "# achieved=" << (schedule.achieved ? 1 : 0) << '\n';
  out.precision(old);
  write_trace_csv(out, schedule.trace);
}

LoadedSchedule read_schedule_csv(std::istream& in) {
  LoadedSchedule loaded;
  std::map<std::string, std::string> header;
  std::string line;
  bool seen_columns = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto key_begin = line.find_first_not_of("# ");
      header[line.substr(key_begin, eq - key_begin)] = line.substr(eq + 1);
      continue;
    }
    if (!seen_columns) {
      if (line.rfind("l,t_l", 0) != 0) throw std::runtime_error("schedule csv: unexpected column header '" + line + "'");
      seen_columns = true;
      continue;
    }
    std::vector<double> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() != 8) throw std::runtime_error("schedule csv: expected 8 columns in '" + line + "'");
    loaded.intervals.push_back(cells[1]);
    loaded.phases.push_back(cells[5]);
  }
  auto& c = loaded.config;
  auto number = [&](const char* key, double& field) {
    if (auto it = header.find(key); it != header.end()) field = std::stod(it->second);
  };
  number("time_step", c.time_step);
  number("horizon", c.horizon);
  number("horizon_per_site", c.horizon_per_site);
  number("max_horizon_factor", c.max_horizon_factor);
  number("tolerance", c.amplitude_tolerance);
  number("amplitude_floor", c.amplitude_floor);
  number("slope_tolerance", c.slope_tolerance);
  number("target_failure", c.target_failure);
  number("min_gain", c.min_gain);
  if (auto it = header.find("slope_match"); it != header.end()) c.slope_match = it->second == "1";
  if (auto it = header.find("max_measurements"); it != header.end()) c.max_measurements = std::stoi(it->second);
  if (auto it = header.find("objective"); it != header.end()) c.objective = objective_from_string(it->second);
  if (auto it = header.find("achieved"); it != header.end()) loaded.achieved = it->second == "1";
  return loaded;
}

}  // namespace dualrail
