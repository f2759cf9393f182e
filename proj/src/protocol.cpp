#include "dualrail/protocol.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace dualrail {

LogicalQubit::LogicalQubit(cplx alpha, cplx beta) : alpha_(alpha), beta_(beta) {
  if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-12)
    throw std::invalid_argument("LogicalQubit: |alpha|^2 + |beta|^2 must equal 1");
}

LogicalQubit LogicalQubit::bloch(double theta, double phi) {
  return LogicalQubit(std::cos(0.5 * theta), std::polar(std::sin(0.5 * theta), phi));
}

double LogicalQubit::fidelity(const LogicalQubit& other) const {
  return std::norm(std::conj(alpha_) * other.alpha_ + std::conj(beta_) * other.beta_);
}

ExcitationState encode(const LogicalQubit& q, int length1, int length2) {
  if (length1 < 1 || length2 < 1) throw std::invalid_argument("encode: chain lengths must be positive");
  ExcitationState state;
  state.chain1 = Eigen::VectorXcd::Zero(length1);
  state.chain2 = Eigen::VectorXcd::Zero(length2);
  state.chain1(0) = q.beta();
  state.chain2(0) = q.alpha();
  return state;
}

TransferState::TransferState(const LogicalQubit& q, const SpectralPropagator& prop1, const SpectralPropagator& prop2)
    : chain1_(prop1), chain2_(prop2), input_(q) {}

ExcitationState TransferState::physical() const {
  const double e1 = chain1_.propagator().vacuum_energy();
  const double e2 = chain2_.propagator().vacuum_energy();
  const double a2 = std::norm(input_.alpha());
  const double b2 = std::norm(input_.beta());
  const double norm = std::sqrt(b2 * chain1_.norm2() + a2 * chain2_.norm2());
  ExcitationState state;
  // The beta branch leaves chain 2 in its vacuum and vice versa.
  state.chain1 = input_.beta() * std::polar(1.0, -e2 * elapsed_) * chain1_.site_amplitudes() / norm;
  state.chain2 = input_.alpha() * std::polar(1.0, -e1 * elapsed_) * chain2_.site_amplitudes() / norm;
  return state;
}

double TransferState::success_probability(double t) const {
  const double a2 = std::norm(input_.alpha());
  const double b2 = std::norm(input_.beta());
  const double before = b2 * chain1_.norm2() + a2 * chain2_.norm2();
  if (!(before > 0.0)) return 0.0;
  return (b2 * std::norm(chain1_.arrival(t)) + a2 * std::norm(chain2_.arrival(t))) / before;
}

RoundResult run_round(TransferState& state, double t, double phi, CounterRng& rng, double amplitude_tolerance) {
  RoundResult result;
  const cplx alpha = state.input_.alpha();
  const cplx beta = state.input_.beta();
  const double before = std::norm(beta) * state.chain1_.norm2() + std::norm(alpha) * state.chain2_.norm2();

  state.chain1_.advance(t);
  state.chain2_.advance(t);
  state.elapsed_ += t;
  result.F = state.chain1_.arrival(0.0);
  result.G = state.chain2_.arrival(0.0);

  SchedulerConfig tolerance;
  tolerance.amplitude_tolerance = amplitude_tolerance;
  result.biased = !amplitudes_match(result.F, result.G, tolerance);

  const double arrived = std::norm(beta) * std::norm(result.F) + std::norm(alpha) * std::norm(result.G);
  result.success_probability = before > 0.0 ? std::min(1.0, arrived / before) : 0.0;
  result.success = rng.bernoulli(result.success_probability);

  if (result.success) {
    // After the CNOT, Bob's first qubit holds alpha G |0> + beta F |1>, each
    // branch also carrying the vacuum phase of the other chain.
    const double e1 = state.chain1_.propagator().vacuum_energy();
    const double e2 = state.chain2_.propagator().vacuum_energy();
    cplx zero = alpha * result.G * std::polar(1.0, -e1 * state.elapsed_);
    cplx one = beta * result.F * std::polar(1.0, -e2 * state.elapsed_);
    const double norm = std::sqrt(std::norm(zero) + std::norm(one));
    zero /= norm;
    one /= norm;
    result.raw_output = LogicalQubit(zero, one);
    result.correction = wrap_phase(phi + (e2 - e1) * state.elapsed_);
    // Phase gate diag(exp(-i correction), 1), then renormalize away rounding.
    cplx fixed = zero * std::polar(1.0, -result.correction);
    const double fixed_norm = std::sqrt(std::norm(fixed) + std::norm(one));
    result.output = LogicalQubit(fixed / fixed_norm, one / fixed_norm);
  } else {
    state.chain1_.project_end();
    state.chain2_.project_end();
  }
  return result;
}

TransferRecord run_transfer(const LogicalQubit& q, const std::vector<double>& intervals,
                            const std::vector<double>& phases, const SpectralPropagator& prop1,
                            const SpectralPropagator& prop2, CounterRng& rng, double amplitude_tolerance) {
  if (phases.size() != intervals.size()) throw std::invalid_argument("run_transfer: one phase per interval required");
  TransferRecord record;
  TransferState state(q, prop1, prop2);
  for (std::size_t l = 0; l < intervals.size(); ++l) {
    const auto round = run_round(state, intervals[l], phases[l], rng, amplitude_tolerance);
    record.outcomes.push_back(round.success);
    if (round.biased) ++record.biased_rounds;
    if (round.success) {
      record.success_round = static_cast<int>(l) + 1;
      record.output = round.output;
      record.fidelity = q.fidelity(*round.output);
      record.applied_phase = round.correction;
      break;
    }
  }
  return record;
}

TransferRecord run_transfer(const LogicalQubit& q, const MeasurementSchedule& schedule,
                            const SpectralPropagator& prop1, const SpectralPropagator& prop2, CounterRng& rng,
                            double amplitude_tolerance) {
  return run_transfer(q, schedule.intervals, schedule.trace.phase, prop1, prop2, rng, amplitude_tolerance);
}

void write_transfer_log(std::ostream& out, const std::vector<TransferRecord>& records) {
  out << "trial,success_round,fidelity\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << i << ',';
    if (records[i].success_round) out << *records[i].success_round;
    out << ',';
    if (records[i].succeeded()) out << records[i].fidelity;
    out << '\n';
  }
  out.precision(old);
}

}  // namespace dualrail
