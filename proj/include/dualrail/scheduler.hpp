#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "dualrail/dynamics.hpp"

namespace dualrail {

/// What the greedy search maximizes among admissible candidate times.
enum class Objective {
  StepSuccess,  // |F(l)|^2 / P(l-1)
  FailureRate,  // -ln p_l / t_l, failure decay per unit time
};

std::string to_string(Objective objective);
Objective objective_from_string(const std::string& name);

struct SchedulerConfig {
  double time_step = 0.05;
  /// Longest interval considered per measurement; <= 0 means "use horizon_per_site * N".
  double horizon = 0.0;
  double horizon_per_site = 1.0;
  /// When (0, horizon] holds no admissible time, the window is doubled until
  /// it reaches this multiple of the horizon.
  double max_horizon_factor = 4.0;
  double amplitude_tolerance = 1e-3;  // relative, on | |F| - |G| |
  double amplitude_floor = 1e-6;
  bool slope_match = false;
  double slope_tolerance = 1e-2;  // relative, on | d|F|/dt - d|G|/dt |
  double target_failure = 0.01;
  int max_measurements = 2000;
  /// Candidates capturing less than this fraction of the surviving population are useless.
  double min_gain = 1e-6;
  Objective objective = Objective::StepSuccess;

  void validate() const;
  double horizon_for(int length) const;
};

/// Something that can report the end-site amplitude of one logical branch a
/// time t after the last measurement, and be advanced through a failed
/// measurement. Implemented from Hamiltonians (exact evolution) and from
/// measured endpoint functions (black-box mode).
class ArrivalSource {
 public:
  virtual ~ArrivalSource() = default;
  virtual cplx arrival(double t) const = 0;
  virtual cplx arrival_rate(double t) const = 0;
  /// arrival(k * dt) for k = 1..count.
  virtual std::vector<cplx> arrivals_on_grid(double dt, int count) const;
  /// Evolve by t, then remove the end-site component. Returns the removed amplitude.
  virtual cplx commit(double t) = 0;
  /// Squared norm still in the chain.
  virtual double survival() const = 0;
  /// Length of the chain, or 0 when unknown (then the config must carry an explicit horizon).
  virtual int length() const = 0;
  /// Largest further evolution time the source can answer for.
  virtual double time_limit() const;
  virtual std::unique_ptr<ArrivalSource> clone() const = 0;
};

class PropagatorSource final : public ArrivalSource {
 public:
  explicit PropagatorSource(const SpectralPropagator& prop) : branch_(prop) {}
  cplx arrival(double t) const override { return branch_.arrival(t); }
  cplx arrival_rate(double t) const override { return branch_.arrival_rate(t); }
  std::vector<cplx> arrivals_on_grid(double dt, int count) const override;
  cplx commit(double t) override;
  double survival() const override { return branch_.norm2(); }
  int length() const override { return branch_.propagator().length(); }
  std::unique_ptr<ArrivalSource> clone() const override { return std::make_unique<PropagatorSource>(*this); }

 private:
  Branch branch_;
};

struct MeasurementSchedule {
  std::vector<double> intervals;
  ProjectedTrace trace;
  bool achieved = false;
  double target_failure = 0.0;

  int measurements() const { return static_cast<int>(intervals.size()); }
  double total_time() const { return trace.total_time(); }
  double final_failure() const { return trace.final_failure(); }
};

/// Whether the two arrival amplitudes are close enough for an unbiased measurement.
bool amplitudes_match(cplx f, cplx g, const SchedulerConfig& config);

/// Next measurement interval for the current branch pair, or nullopt when no
/// admissible time in (0, horizon] is worth measuring at.
std::optional<double> find_next_time(const ArrivalSource& chain1, const ArrivalSource& chain2,
                                     const SchedulerConfig& config);

MeasurementSchedule build_schedule(ArrivalSource& chain1, ArrivalSource& chain2, const SchedulerConfig& config);
MeasurementSchedule build_schedule(const SpectralPropagator& prop1, const SpectralPropagator& prop2,
                                   const SchedulerConfig& config);

/// CSV with a '#'-prefixed key=value header carrying the config, followed by
/// the trace columns.
void write_schedule_csv(std::ostream& out, const MeasurementSchedule& schedule, const SchedulerConfig& config);

struct LoadedSchedule {
  SchedulerConfig config;
  std::vector<double> intervals;
  std::vector<double> phases;
  bool achieved = false;
};
LoadedSchedule read_schedule_csv(std::istream& in);

}  // namespace dualrail
