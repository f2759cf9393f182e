#include "dualrail/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dualrail {

namespace {

/// Lagrange basis weights (and their derivatives) on nodes 0..n-1 at x.
template <int n>
void lagrange(double x, double (&w)[n], double (&dw)[n]) {
  for (int j = 0; j < n; ++j) {
    double value = 1.0;
    double slope = 0.0;
    for (int m = 0; m < n; ++m) {
      if (m == j) continue;
      const double scale = 1.0 / (j - m);
      slope = slope * (x - m) * scale + value * scale;
      value *= (x - m) * scale;
    }
    w[j] = value;
    dw[j] = slope;
  }
}

struct Stencil {
  std::size_t first;  // index of node 0
  double x;           // position in node units relative to `first`
};

Stencil stencil(std::size_t points, double dt, double t, int width) {
  if (points < static_cast<std::size_t>(width)) throw std::invalid_argument("endpoint grid has too few points");
  const double u = t / dt;
  const auto left = static_cast<long>(std::floor(u));
  long first = left - (width - 1) / 2;
  first = std::clamp(first, 0L, static_cast<long>(points) - width);
  return {static_cast<std::size_t>(first), u - static_cast<double>(first)};
}

}  // namespace

void EndpointFunctions::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("endpoint functions: dt must be positive");
  const auto n = values[0].size();
  if (n < 4) throw std::invalid_argument("endpoint functions: need at least 4 grid points");
  for (int i = 0; i < 4; ++i) {
    if (values[i].size() != n) throw std::invalid_argument("endpoint functions: ragged value columns");
    if (!errors[i].empty() && errors[i].size() != n) throw std::invalid_argument("endpoint functions: ragged error columns");
  }
}

cplx EndpointFunctions::at(Which which, double t) const {
  const auto& v = values[which];
  if (t < -1e-9 * dt || t > span() * (1.0 + 1e-12) + 1e-9 * dt)
    throw std::out_of_range("endpoint functions: time " + std::to_string(t) + " outside the measured grid");
  const double u = t / dt;
  const double nearest = std::round(u);
  if (std::abs(u - nearest) < 1e-9) return v[std::min(static_cast<std::size_t>(std::max(nearest, 0.0)), v.size() - 1)];
  const auto s = stencil(v.size(), dt, t, 4);
  double w[4], dw[4];
  lagrange<4>(s.x, w, dw);
  cplx sum = 0.0;
  for (int j = 0; j < 4; ++j) sum += w[j] * v[s.first + static_cast<std::size_t>(j)];
  return sum;
}

cplx EndpointFunctions::derivative(Which which, double t) const {
  const auto& v = values[which];
  const double clamped = std::clamp(t, 0.0, span());
  const auto s = stencil(v.size(), dt, clamped, 4);
  double w[4], dw[4];
  lagrange<4>(s.x, w, dw);
  cplx sum = 0.0;
  for (int j = 0; j < 4; ++j) sum += dw[j] * v[s.first + static_cast<std::size_t>(j)];
  return sum / dt;
}

double EndpointFunctions::interpolation_error(Which which, double t) const {
  const auto& v = values[which];
  const double u = t / dt;
  if (std::abs(u - std::round(u)) < 1e-9) return 0.0;
  const auto s3 = stencil(v.size(), dt, t, 3);
  double w[3], dw[3];
  lagrange<3>(s3.x, w, dw);
  cplx quadratic = 0.0;
  for (int j = 0; j < 3; ++j) quadratic += w[j] * v[s3.first + static_cast<std::size_t>(j)];
  return std::abs(at(which, t) - quadratic);
}

// ---------------------------------------------------------------------------

ChainEndpoints estimate_chain_endpoints(const SpectralPropagator& prop, long shots, const TomographyGrid& grid,
                                        CounterRng& rng) {
  if (shots < 0) throw std::invalid_argument("estimate_endpoints: shots must be >= 0 (0 = exact)");
  if (!(grid.dt > 0.0) || !(grid.span >= 3.0 * grid.dt)) throw std::invalid_argument("estimate_endpoints: bad grid");
  const int n = prop.length();
  const auto count = static_cast<std::size_t>(std::llround(grid.span / grid.dt)) + 1;

  ChainEndpoints out;
  out.arrive.resize(count);
  out.stay.resize(count);
  out.arrive_error.assign(count, 0.0);
  out.stay_error.assign(count, 0.0);

  auto sample = [&](cplx exact, double& error) -> cplx {
    if (shots == 0) return exact;
    const auto draw = [&](double p) {
      std::binomial_distribution<long> dist(shots, std::clamp(p, 0.0, 1.0));
      return static_cast<double>(dist(rng)) / static_cast<double>(shots);
    };
    const double p_hat = draw(std::norm(exact));
    const double x_hat = 2.0 * draw(0.5 * (1.0 + exact.real())) - 1.0;
    const double y_hat = 2.0 * draw(0.5 * (1.0 + exact.imag())) - 1.0;
    const double n_shots = static_cast<double>(shots);
    const double sigma_p = std::sqrt(std::max(p_hat * (1.0 - p_hat), 1.0 / n_shots) / n_shots);
    error = sigma_p / (2.0 * std::sqrt(std::max(p_hat, sigma_p)));
    return std::polar(std::sqrt(p_hat), std::atan2(y_hat, x_hat));
  };

  for (std::size_t k = 0; k < count; ++k) {
    const double t = grid.dt * static_cast<double>(k);
    const cplx gauge = std::polar(1.0, prop.vacuum_energy() * t);
    out.arrive[k] = sample(prop.amplitude(1, n, t) * gauge, out.arrive_error[k]);
    out.stay[k] = sample(prop.amplitude(n, n, t) * gauge, out.stay_error[k]);
  }
  return out;
}

EndpointFunctions estimate_endpoints(const SpectralPropagator& prop1, const SpectralPropagator& prop2, long shots,
                                     const TomographyGrid& grid, CounterRng& rng) {
  auto one = estimate_chain_endpoints(prop1, shots, grid, rng);
  auto two = estimate_chain_endpoints(prop2, shots, grid, rng);
  EndpointFunctions e;
  e.dt = grid.dt;
  e.values = {std::move(one.arrive), std::move(one.stay), std::move(two.arrive), std::move(two.stay)};
  e.errors = {std::move(one.arrive_error), std::move(one.stay_error), std::move(two.arrive_error),
              std::move(two.stay_error)};
  e.length1 = prop1.length();
  e.length2 = prop2.length();
  e.shots = shots;
  return e;
}

// ---------------------------------------------------------------------------

EndpointSource::EndpointSource(const EndpointFunctions& endpoints, bool second_chain)
    : endpoints_(&endpoints),
      arrive_(second_chain ? EndpointFunctions::kGN1 : EndpointFunctions::kFN1),
      stay_(second_chain ? EndpointFunctions::kGNN : EndpointFunctions::kFNN),
      length_(second_chain ? endpoints.length2 : endpoints.length1) {
  endpoints.validate();
}

cplx EndpointSource::arrival(double t) const {
  const double tau = now_ + t;
  cplx value = endpoints_->at(arrive_, tau);
  for (std::size_t k = 0; k < times_.size(); ++k) value -= removed_[k] * endpoints_->at(stay_, tau - times_[k]);
  return value;
}

cplx EndpointSource::arrival_rate(double t) const {
  const double tau = now_ + t;
  cplx value = endpoints_->derivative(arrive_, tau);
  for (std::size_t k = 0; k < times_.size(); ++k)
    value -= removed_[k] * endpoints_->derivative(stay_, tau - times_[k]);
  return value;
}

cplx EndpointSource::commit(double t) {
  const cplx a = arrival(t);
  now_ += t;
  times_.push_back(now_);
  removed_.push_back(a);
  survival_ = std::max(0.0, survival_ - std::norm(a));
  return a;
}

double EndpointSource::time_limit() const { return std::max(0.0, endpoints_->span() - now_); }

Reconstruction reconstruct_F_G(const EndpointFunctions& endpoints, const std::vector<double>& intervals,
                               double interpolation_tolerance) {
  Reconstruction out;
  out.trace.clear();
  EndpointSource chain1(endpoints, false);
  EndpointSource chain2(endpoints, true);
  std::vector<double> taus;
  std::vector<cplx> fs, gs;
  double tau = 0.0;
  for (std::size_t l = 0; l < intervals.size(); ++l) {
    const double t = intervals[l];
    if (!(t >= 0.0)) throw std::invalid_argument("reconstruct_F_G: intervals must be non-negative");
    tau += t;
    if (tau > endpoints.span() * (1.0 + 1e-12))
      throw std::out_of_range("reconstruct_F_G: cumulative time " + std::to_string(tau) +
                              " exceeds the endpoint grid span " + std::to_string(endpoints.span()));
    double estimate = endpoints.interpolation_error(EndpointFunctions::kFN1, tau) +
                      endpoints.interpolation_error(EndpointFunctions::kGN1, tau);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      estimate += std::abs(fs[k]) * endpoints.interpolation_error(EndpointFunctions::kFNN, tau - taus[k]);
      estimate += std::abs(gs[k]) * endpoints.interpolation_error(EndpointFunctions::kGNN, tau - taus[k]);
    }
    if (estimate > interpolation_tolerance) {
      std::ostringstream msg;
      msg << "step " << (l + 1) << ": interpolation error estimate " << estimate << " exceeds "
          << interpolation_tolerance << "; the endpoint grid (dt=" << endpoints.dt << ") is too coarse";
      out.warnings.push_back(msg.str());
    }
    const cplx f = chain1.commit(t);
    const cplx g = chain2.commit(t);
    taus.push_back(tau);
    fs.push_back(f);
    gs.push_back(g);
    out.trace.push(t, f, g, chain1.survival(), chain2.survival());
  }
  return out;
}

CapabilityReport certify(const EndpointFunctions& endpoints, const SchedulerConfig& config) {
  EndpointSource chain1(endpoints, false);
  EndpointSource chain2(endpoints, true);
  CapabilityReport report;
  report.schedule = build_schedule(chain1, chain2, config);
  report.capable = report.schedule.achieved;
  std::ostringstream msg;
  if (report.capable) {
    msg << "capable: joint failure " << report.schedule.final_failure() << " <= " << config.target_failure << " after "
        << report.schedule.measurements() << " measurements, total time " << report.schedule.total_time();
  } else {
    msg << "incapable: joint failure stalled at " << report.schedule.final_failure() << " after "
        << report.schedule.measurements() << " measurements (target " << config.target_failure << ")";
  }
  report.summary = msg.str();
  return report;
}

// ---------------------------------------------------------------------------

void write_endpoints_csv(std::ostream& out, const EndpointFunctions& e) {
  e.validate();
  const auto old = out.precision(17);
  out << "# dualrail endpoints\n";
  out << "# dt=" << e.dt << '\n';
  out << "# length1=" << e.length1 << '\n';
  out << "# length2=" << e.length2 << '\n';
  out << "# shots=" << e.shots << '\n';
  out << "t,re_fN1,im_fN1,err_fN1,re_fNN,im_fNN,err_fNN,re_gN1,im_gN1,err_gN1,re_gNN,im_gNN,err_gNN\n";
  for (std::size_t k = 0; k < e.points(); ++k) {
    out << e.dt * static_cast<double>(k);
    for (int i = 0; i < 4; ++i) {
      const double err = e.errors[i].empty() ? 0.0 : e.errors[i][k];
      out << ',' << e.values[i][k].real() << ',' << e.values[i][k].imag() << ',' << err;
    }
    out << '\n';
  }
  out.precision(old);
}

EndpointFunctions read_endpoints_csv(std::istream& in) {
  EndpointFunctions e;
  e.dt = 0.0;
  std::map<std::string, std::string> header;
  std::vector<double> times;
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
      if (line.rfind("t,", 0) != 0) throw std::runtime_error("endpoint csv: unexpected column header '" + line + "'");
      seen_columns = true;
      continue;
    }
    std::vector<double> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() != 13) throw std::runtime_error("endpoint csv: expected 13 columns in '" + line + "'");
    times.push_back(cells[0]);
    for (int i = 0; i < 4; ++i) {
      e.values[i].emplace_back(cells[1 + 3 * i], cells[2 + 3 * i]);
      e.errors[i].push_back(cells[3 + 3 * i]);
    }
  }
  if (times.size() < 4) throw std::runtime_error("endpoint csv: need at least 4 rows");
  e.dt = header.count("dt") ? std::stod(header["dt"]) : times[1] - times[0];
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - e.dt * static_cast<double>(k)) > 1e-9 * std::max(1.0, times[k]))
      throw std::runtime_error("endpoint csv: times must form the uniform grid k*dt starting at 0");
  }
  if (header.count("length1")) e.length1 = std::stoi(header["length1"]);
  if (header.count("length2")) e.length2 = std::stoi(header["length2"]);
  if (header.count("shots")) e.shots = std::stol(header["shots"]);
  e.validate();
  return e;
}

}  // namespace dualrail
