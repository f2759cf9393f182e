#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dualrail {

/// How a bond coupling J maps onto the spin operators of the chain.
///
/// Pauli:       H = sum_n J_n sigma_n . sigma_{n+1}      (flip-flop amplitude 2J)
/// UnitHopping: H = sum_n (J_n / 2) sigma_n . sigma_{n+1} (flip-flop amplitude J)
///
/// Both describe the same isotropic Heisenberg chain; they differ only in the
/// energy (and therefore time) unit.
enum class Convention { Pauli, UnitHopping };

std::string to_string(Convention convention);
Convention convention_from_string(const std::string& name);

/// One chain: N qubits joined by N-1 nearest-neighbour bonds, couplings in units of J.
struct ChainSpec {
  std::vector<double> couplings;

  ChainSpec() = default;
  explicit ChainSpec(std::vector<double> bond_couplings);

  static ChainSpec uniform(int length, double coupling = 1.0);

  int length() const { return static_cast<int>(couplings.size()) + 1; }
  int bonds() const { return static_cast<int>(couplings.size()); }
};

struct DisorderConfig {
  double strength = 0.0;     // Delta, deltas lie in [-Delta, Delta]
  double correlation = 0.5;  // c, probability that consecutive deltas share a sign
  std::uint64_t seed = 0;
};

/// Real symmetric matrix over {|0...0>, |1>, ..., |N>}; index 0 is the vacuum.
struct SingleExcitationHamiltonian {
  Eigen::MatrixXd matrix;
  double vacuum_energy = 0.0;

  int length() const { return static_cast<int>(matrix.rows()) - 1; }
  /// N x N block acting on the single-excitation states.
  Eigen::MatrixXd excitation_block() const;
};

/// Draws nBonds relative coupling deviations. Magnitudes are uniform on
/// [0, Delta]; the first sign is a fair coin and each later sign repeats the
/// previous one with probability c.
std::vector<double> sample_disorder(const DisorderConfig& config, int bonds);

ChainSpec build_chain(int length, const DisorderConfig& config);

SingleExcitationHamiltonian single_excitation_matrix(
    const ChainSpec& spec, Convention convention = Convention::UnitHopping);

/// Full 2^N x 2^N Heisenberg Hamiltonian built from explicit Pauli tensor
/// products. Basis index bit (N-1-m) is qubit m+1, so |10...0> = 2^(N-1).
/// Only meant for small N.
Eigen::MatrixXd full_space_hamiltonian(const ChainSpec& spec,
                                       Convention convention = Convention::UnitHopping);

/// Flat text format:
///   # dualrail chain
///   N <length>
///   [# free-form metadata lines]
///   <coupling 1>
///   ...
void write_chain(std::ostream& out, const ChainSpec& spec, const std::string& comment = {});
ChainSpec read_chain(std::istream& in);
void save_chain(const std::string& path, const ChainSpec& spec, const std::string& comment = {});
ChainSpec load_chain(const std::string& path);

}  // namespace dualrail
