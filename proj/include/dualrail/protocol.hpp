#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "dualrail/random.hpp"
#include "dualrail/scheduler.hpp"

namespace dualrail {

/// alpha|0> + beta|1>; alpha rides on chain 2, beta on chain 1.
class LogicalQubit {
 public:
  LogicalQubit(cplx alpha, cplx beta);

  static LogicalQubit bloch(double theta, double phi);

  cplx alpha() const { return alpha_; }
  cplx beta() const { return beta_; }

  /// |<this|other>|^2
  double fidelity(const LogicalQubit& other) const;

 private:
  cplx alpha_;
  cplx beta_;
};

/// Physical single-excitation amplitudes of both chains (sites 1..N each).
struct ExcitationState {
  Eigen::VectorXcd chain1;
  Eigen::VectorXcd chain2;

  double norm2() const { return chain1.squaredNorm() + chain2.squaredNorm(); }
};

ExcitationState encode(const LogicalQubit& q, int length1, int length2);

/// The two-chain state during a transfer: the unit-norm branch evolutions
/// (whose end amplitudes are F and G), the logical amplitudes, and the
/// elapsed time for the vacuum phase of the idle chain.
class TransferState {
 public:
  TransferState(const LogicalQubit& q, const SpectralPropagator& prop1, const SpectralPropagator& prop2);

  const Branch& chain1_branch() const { return chain1_; }
  const Branch& chain2_branch() const { return chain2_; }
  const LogicalQubit& input() const { return input_; }
  double elapsed() const { return elapsed_; }

  /// Normalized physical state, including the vacuum phase picked up by the
  /// chain that does not carry the excitation in each branch.
  ExcitationState physical() const;

  /// Probability that Bob's herald fires if he measures after a further time t.
  double success_probability(double t) const;

 private:
  friend struct RoundResult run_round(TransferState&, double, double, CounterRng&, double);
  Branch chain1_;
  Branch chain2_;
  LogicalQubit input_;
  double elapsed_ = 0.0;
};

struct RoundResult {
  bool success = false;
  double success_probability = 0.0;
  cplx F;
  cplx G;
  bool biased = false;
  /// Relative phase Bob removes, in his logical frame.
  double correction = 0.0;
  /// Bob's qubit before and after the phase gate (valid on success).
  std::optional<LogicalQubit> raw_output;
  std::optional<LogicalQubit> output;
};

/// One round: evolve for t, let Bob CNOT and read his herald qubit. On a
/// herald the logical qubit is phase corrected with the schedule phase phi
/// (arg G - arg F in the block frame); on failure the state is projected and
/// renormalized in place.
RoundResult run_round(TransferState& state, double t, double phi, CounterRng& rng,
                      double amplitude_tolerance = 1e-3);

struct TransferRecord {
  std::vector<bool> outcomes;
  std::optional<int> success_round;  // 1-based
  std::optional<LogicalQubit> output;
  double fidelity = 0.0;
  double applied_phase = 0.0;
  int biased_rounds = 0;

  bool succeeded() const { return success_round.has_value(); }
};

TransferRecord run_transfer(const LogicalQubit& q, const std::vector<double>& intervals,
                            const std::vector<double>& phases, const SpectralPropagator& prop1,
                            const SpectralPropagator& prop2, CounterRng& rng, double amplitude_tolerance = 1e-3);

TransferRecord run_transfer(const LogicalQubit& q, const MeasurementSchedule& schedule,
                            const SpectralPropagator& prop1, const SpectralPropagator& prop2, CounterRng& rng,
                            double amplitude_tolerance = 1e-3);

/// CSV columns: trial,success_round,fidelity (success_round empty when the transfer failed).
void write_transfer_log(std::ostream& out, const std::vector<TransferRecord>& records);

}  // namespace dualrail
