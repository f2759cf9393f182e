#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "dualrail/random.hpp"
#include "dualrail/scheduler.hpp"

namespace dualrail {

/// The four end-to-end amplitudes that fully determine conclusive transfer:
/// arrival at Bob's site from Alice's (f_N1, g_N1) and staying at Bob's site
/// (f_NN, g_NN), sampled on the uniform grid t_k = k * dt, k = 0..K.
///
/// Values are in the vacuum-phase gauge: phases are measured relative to the
/// chain's all-zero state, which is what end-site tomography can observe.
/// Off-grid times use 4-point cubic interpolation.
struct EndpointFunctions {
  enum Which { kFN1 = 0, kFNN = 1, kGN1 = 2, kGNN = 3 };

  double dt = 0.01;
  std::array<std::vector<cplx>, 4> values;
  /// Standard error of each modulus estimate; zero in exact mode.
  std::array<std::vector<double>, 4> errors;
  int length1 = 0;  // 0 when the chain is a black box of unknown size
  int length2 = 0;
  long shots = 0;   // 0 = exact

  std::size_t points() const { return values[0].size(); }
  double span() const { return dt * static_cast<double>(points() - 1); }

  cplx at(Which which, double t) const;
  cplx derivative(Which which, double t) const;
  /// |cubic - quadratic| interpolant difference at t: a cheap local error estimate.
  double interpolation_error(Which which, double t) const;

  void validate() const;
};

struct TomographyGrid {
  double dt = 0.01;
  double span = 200.0;
};

/// Per-chain tomography: f_N1 from |1> and f_NN from |N> initial states.
/// shots == 0 returns the exact functions; otherwise moduli come from
/// excitation counts at Bob's site and phases from <sigma_x>, <sigma_y> of
/// Bob's qubit after starting in (|0...0> + |m>)/sqrt(2).
struct ChainEndpoints {
  std::vector<cplx> arrive;
  std::vector<cplx> stay;
  std::vector<double> arrive_error;
  std::vector<double> stay_error;
};
ChainEndpoints estimate_chain_endpoints(const SpectralPropagator& prop, long shots, const TomographyGrid& grid,
                                        CounterRng& rng);

EndpointFunctions estimate_endpoints(const SpectralPropagator& prop1, const SpectralPropagator& prop2, long shots,
                                     const TomographyGrid& grid, CounterRng& rng);

/// F(l), G(l) and the failure bookkeeping rebuilt from the endpoint functions
/// alone, via F(l) = f_N1(tau_l) - sum_{k<l} F(k) f_NN(tau_l - tau_k).
/// F and G come out in the vacuum gauge, so trace.phase is already the
/// physical phase Bob has to undo.
struct Reconstruction {
  ProjectedTrace trace;
  std::vector<std::string> warnings;
};

Reconstruction reconstruct_F_G(const EndpointFunctions& endpoints, const std::vector<double>& intervals,
                               double interpolation_tolerance = 1e-6);

/// One logical branch driven purely by its two endpoint functions.
class EndpointSource final : public ArrivalSource {
 public:
  EndpointSource(const EndpointFunctions& endpoints, bool second_chain);

  cplx arrival(double t) const override;
  cplx arrival_rate(double t) const override;
  cplx commit(double t) override;
  double survival() const override { return survival_; }
  int length() const override { return length_; }
  double time_limit() const override;
  std::unique_ptr<ArrivalSource> clone() const override { return std::make_unique<EndpointSource>(*this); }

 private:
  const EndpointFunctions* endpoints_;
  EndpointFunctions::Which arrive_;
  EndpointFunctions::Which stay_;
  int length_;
  double now_ = 0.0;
  std::vector<double> times_;
  std::vector<cplx> removed_;
  double survival_ = 1.0;
};

struct CapabilityReport {
  bool capable = false;
  MeasurementSchedule schedule;
  std::string summary;
};

/// Runs the scheduler on endpoint data only (no Hamiltonian access).
CapabilityReport certify(const EndpointFunctions& endpoints, const SchedulerConfig& config);

/// CSV: '#' header with dt, lengths and shots, then
/// t,re_fN1,im_fN1,err_fN1,re_fNN,im_fNN,err_fNN,re_gN1,im_gN1,err_gN1,re_gNN,im_gNN,err_gNN
void write_endpoints_csv(std::ostream& out, const EndpointFunctions& endpoints);
EndpointFunctions read_endpoints_csv(std::istream& in);

}  // namespace dualrail
