#include "dualrail/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace dualrail {

SpectralPropagator::SpectralPropagator(Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors,
                                       double vacuum_energy)
    : eigenvalues_(std::move(eigenvalues)), eigenvectors_(std::move(eigenvectors)), vacuum_energy_(vacuum_energy) {
  if (eigenvectors_.rows() != eigenvalues_.size() || eigenvectors_.cols() != eigenvalues_.size())
    throw std::invalid_argument("SpectralPropagator: eigenvector matrix has the wrong shape");
}

Eigen::MatrixXd SpectralPropagator::reconstruct() const {
  return eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.transpose();
}

cplx SpectralPropagator::amplitude(int from, int to, double t) const {
  const int n = length();
  if (from < 1 || from > n || to < 1 || to > n) throw std::out_of_range("amplitude: site index out of range");
  cplx sum = 0.0;
  for (int k = 0; k < n; ++k) {
    sum += eigenvectors_(to - 1, k) * eigenvectors_(from - 1, k) * std::polar(1.0, -eigenvalues_(k) * t);
  }
  return sum;
}

Eigen::VectorXcd SpectralPropagator::evolve(const Eigen::VectorXcd& state, double t) const {
  if (state.size() != length()) throw std::invalid_argument("evolve: state has the wrong dimension");
  Eigen::VectorXcd coeffs = eigenvectors_.transpose().cast<cplx>() * state;
  for (int k = 0; k < length(); ++k) coeffs(k) *= std::polar(1.0, -eigenvalues_(k) * t);
  return eigenvectors_.cast<cplx>() * coeffs;
}

SpectralPropagator diagonalize(const SingleExcitationHamiltonian& h) {
  const Eigen::MatrixXd block = h.excitation_block();
  if (block.rows() < 1) throw std::invalid_argument("diagonalize: empty excitation block");
  const double scale = std::max(1.0, block.cwiseAbs().maxCoeff());
  if ((block - block.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("diagonalize: Hamiltonian block is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block);
  if (solver.info() != Eigen::Success) throw std::runtime_error("diagonalize: eigensolver failed");
  return SpectralPropagator(solver.eigenvalues(), solver.eigenvectors(), h.vacuum_energy);
}

SpectralPropagator diagonalize(const ChainSpec& spec, Convention convention) {
  return diagonalize(single_excitation_matrix(spec, convention));
}

// ---------------------------------------------------------------------------

Branch::Branch(const SpectralPropagator& prop)
    : prop_(&prop), end_row_(prop.eigenvectors().row(prop.length() - 1).transpose()) {
  coefficients_ = prop.eigenvectors().row(0).transpose().cast<cplx>();
}

Branch::Branch(const SpectralPropagator& prop, const Eigen::VectorXcd& site_amplitudes)
    : prop_(&prop), end_row_(prop.eigenvectors().row(prop.length() - 1).transpose()) {
  if (site_amplitudes.size() != prop.length()) throw std::invalid_argument("Branch: wrong state dimension");
  coefficients_ = prop.eigenvectors().transpose().cast<cplx>() * site_amplitudes;
}

cplx Branch::arrival(double t) const {
  const auto& e = prop_->eigenvalues();
  cplx sum = 0.0;
  for (Eigen::Index k = 0; k < e.size(); ++k) sum += end_row_(k) * coefficients_(k) * std::polar(1.0, -e(k) * t);
  return sum;
}

std::vector<cplx> Branch::arrivals_on_grid(double dt, int count) const {
  const auto& e = prop_->eigenvalues();
  const Eigen::Index n = e.size();
  Eigen::VectorXcd step(n), term(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    step(k) = std::polar(1.0, -e(k) * dt);
    term(k) = end_row_(k) * coefficients_(k);
  }
  std::vector<cplx> out(static_cast<std::size_t>(std::max(count, 0)));
  // Re-anchor the recurrence periodically so rounding does not accumulate.
  constexpr int kResync = 256;
  for (int j = 0; j < count; ++j) {
    if ((j + 1) % kResync == 0) {
      for (Eigen::Index k = 0; k < n; ++k)
        term(k) = end_row_(k) * coefficients_(k) * std::polar(1.0, -e(k) * dt * (j + 1));
    } else {
      term.array() *= step.array();
    }
    out[static_cast<std::size_t>(j)] = term.sum();
  }
  return out;
}

cplx Branch::arrival_rate(double t) const {
  const auto& e = prop_->eigenvalues();
  cplx sum = 0.0;
  for (Eigen::Index k = 0; k < e.size(); ++k)
    sum += end_row_(k) * coefficients_(k) * cplx(0.0, -e(k)) * std::polar(1.0, -e(k) * t);
  return sum;
}

void Branch::advance(double t) {
  const auto& e = prop_->eigenvalues();
  for (Eigen::Index k = 0; k < e.size(); ++k) coefficients_(k) *= std::polar(1.0, -e(k) * t);
}

cplx Branch::project_end() {
  const cplx a = end_row_.cast<cplx>().dot(coefficients_);  // dot conjugates its first argument (real here)
  coefficients_ -= a * end_row_.cast<cplx>();
  return a;
}

Eigen::VectorXcd Branch::site_amplitudes() const { return prop_->eigenvectors().cast<cplx>() * coefficients_; }

// ---------------------------------------------------------------------------

double wrap_phase(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::remainder(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

double ProjectedTrace::total_time() const {
  double sum = 0.0;
  for (double t : intervals) sum += t;
  return sum;
}

void ProjectedTrace::clear() {
  *this = ProjectedTrace{};
  v.push_back(1.0);
  w.push_back(1.0);
  P.push_back(1.0);
}

void ProjectedTrace::push(double interval, cplx f, cplx g, double v_after, double w_after) {
  if (P.empty()) clear();
  const double previous = P.back();
  intervals.push_back(interval);
  F.push_back(f);
  G.push_back(g);
  v.push_back(v_after);
  w.push_back(w_after);
  const double joint = std::max(0.0, previous - std::norm(f));
  p.push_back(previous > 0.0 ? std::clamp(joint / previous, 0.0, 1.0) : 1.0);
  P.push_back(joint);
  phase.push_back(wrap_phase(std::arg(g) - std::arg(f)));
}

ProjectedTrace projected_trace(const SpectralPropagator& prop1, const SpectralPropagator& prop2,
                               const std::vector<double>& intervals) {
  ProjectedTrace trace;
  trace.clear();
  Branch chain1(prop1);
  Branch chain2(prop2);
  for (double t : intervals) {
    if (!(t >= 0.0)) throw std::invalid_argument("projected_trace: intervals must be non-negative");
    chain1.advance(t);
    chain2.advance(t);
    const cplx f = chain1.project_end();
    const cplx g = chain2.project_end();
    trace.push(t, f, g, chain1.norm2(), chain2.norm2());
  }
  return trace;
}

double NormIdentityReport::max_identity_residual() const { return std::max({f_residual, g_residual, p_residual}); }

NormIdentityReport norm_identities(const ProjectedTrace& trace) {
  NormIdentityReport report;
  for (std::size_t l = 0; l < trace.steps(); ++l) {
    report.f_residual = std::max(report.f_residual, std::abs(std::norm(trace.F[l]) - (trace.v[l] - trace.v[l + 1])));
    report.g_residual = std::max(report.g_residual, std::abs(std::norm(trace.G[l]) - (trace.w[l] - trace.w[l + 1])));
    report.p_residual = std::max(report.p_residual, std::abs(trace.P[l + 1] - trace.v[l + 1]));
    report.amplitude_mismatch =
        std::max(report.amplitude_mismatch, std::abs(std::abs(trace.F[l]) - std::abs(trace.G[l])));
    report.norm_mismatch = std::max(report.norm_mismatch, std::abs(trace.v[l + 1] - trace.w[l + 1]));
  }
  return report;
}

void write_trace_csv(std::ostream& out, const ProjectedTrace& trace) {
  out << "l,t_l,tau_l,abs_F,abs_G,phi_l,p_l,P_l\n";
  const auto old = out.precision(17);
  double tau = 0.0;
  for (std::size_t l = 0; l < trace.steps(); ++l) {
    tau += trace.intervals[l];
    out << (l + 1) << ',' << trace.intervals[l] << ',' << tau << ',' << std::abs(trace.F[l]) << ','
        << std::abs(trace.G[l]) << ',' << trace.phase[l] << ',' << trace.p[l] << ',' << trace.P[l + 1] << '\n';
  }
  out.precision(old);
}

}  // namespace dualrail
