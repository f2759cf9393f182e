#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "dualrail/hamiltonians.hpp"

namespace dualrail {

using cplx = std::complex<double>;

/// Eigendecomposition of one chain's excitation block. Immutable once built;
/// evolution to any time t costs O(N^2), a single site amplitude O(N).
class SpectralPropagator {
 public:
  SpectralPropagator(Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors, double vacuum_energy);

  int length() const { return static_cast<int>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  double vacuum_energy() const { return vacuum_energy_; }

  Eigen::MatrixXd reconstruct() const;

  /// <to| exp(-i H t) |from>, sites 1-based, raw block frame.
  cplx amplitude(int from, int to, double t) const;

  /// exp(-i H t) applied to an excitation-block vector.
  Eigen::VectorXcd evolve(const Eigen::VectorXcd& state, double t) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  double vacuum_energy_;
};

SpectralPropagator diagonalize(const SingleExcitationHamiltonian& h);
SpectralPropagator diagonalize(const ChainSpec& spec, Convention convention = Convention::UnitHopping);

/// One logical branch (one chain carrying the excitation) under repeated
/// evolve / measure-end-site cycles. The state is held in the eigenbasis so
/// evolution, end-site readout and the end-site projection are all O(N).
class Branch {
 public:
  /// Starts with the excitation on site 1.
  explicit Branch(const SpectralPropagator& prop);
  Branch(const SpectralPropagator& prop, const Eigen::VectorXcd& site_amplitudes);

  const SpectralPropagator& propagator() const { return *prop_; }

  /// Amplitude on the last site after a further evolution by t (state unchanged).
  cplx arrival(double t) const;
  /// arrival(k * dt) for k = 1..count, using a phase recurrence instead of
  /// one complex exponential per point.
  std::vector<cplx> arrivals_on_grid(double dt, int count) const;
  /// d/dt of arrival(t).
  cplx arrival_rate(double t) const;

  void advance(double t);
  /// Removes the last-site component, returning the amplitude that was removed.
  cplx project_end();

  double norm2() const { return coefficients_.squaredNorm(); }
  Eigen::VectorXcd site_amplitudes() const;

 private:
  const SpectralPropagator* prop_;
  Eigen::VectorXcd coefficients_;  // eigenbasis
  Eigen::VectorXd end_row_;        // eigenvector components on the last site
};

/// Quantities generated by alternating evolution and failed end-site
/// measurements, for the chain-1 (F) and chain-2 (G) branches.
///
/// Index conventions (l = 1..M measurements):
///   F[l-1], G[l-1], phase[l-1], p[l-1] belong to measurement l;
///   v[k] = v(k+1) for k = 0..M (v[0] = 1, v[l] = squared norm after l projections);
///   P[l] = joint failure after l measurements, P[0] = 1.
struct ProjectedTrace {
  std::vector<double> intervals;
  std::vector<cplx> F;
  std::vector<cplx> G;
  std::vector<double> v;
  std::vector<double> w;
  std::vector<double> p;
  std::vector<double> P;
  std::vector<double> phase;

  std::size_t steps() const { return intervals.size(); }
  double total_time() const;
  double final_failure() const { return P.back(); }

  void clear();
  /// Appends one measurement given its interval and the two arrival amplitudes
  /// together with the squared branch norms after projection.
  void push(double interval, cplx f, cplx g, double v_after, double w_after);
};

ProjectedTrace projected_trace(const SpectralPropagator& prop1, const SpectralPropagator& prop2,
                               const std::vector<double>& intervals);

struct NormIdentityReport {
  double f_residual = 0.0;  // max_l | |F(l)|^2 - (v(l) - v(l+1)) |
  double g_residual = 0.0;  // max_l | |G(l)|^2 - (w(l) - w(l+1)) |
  double p_residual = 0.0;  // max_l | P(l) - v(l+1) |
  double amplitude_mismatch = 0.0;  // max_l | |F(l)| - |G(l)| |
  double norm_mismatch = 0.0;       // max_l | v(l) - w(l) |

  double max_identity_residual() const;
};

NormIdentityReport norm_identities(const ProjectedTrace& trace);

/// Wraps an angle into (-pi, pi].
double wrap_phase(double angle);

/// CSV columns: l,t_l,tau_l,abs_F,abs_G,phi_l,p_l,P_l
void write_trace_csv(std::ostream& out, const ProjectedTrace& trace);

}  // namespace dualrail
