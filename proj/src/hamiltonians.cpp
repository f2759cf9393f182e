#include "dualrail/hamiltonians.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dualrail/random.hpp"

namespace dualrail {

std::string to_string(Convention convention) {
  return convention == Convention::Pauli ? "pauli" : "unit-hopping";
}

Convention convention_from_string(const std::string& name) {
  if (name == "pauli") return Convention::Pauli;
  if (name == "unit-hopping") return Convention::UnitHopping;
  throw std::invalid_argument("unknown coupling convention: " + name);
}

ChainSpec::ChainSpec(std::vector<double> bond_couplings) : couplings(std::move(bond_couplings)) {
  if (couplings.empty()) throw std::invalid_argument("a chain needs at least one bond (N >= 2)");
  for (double c : couplings) {
    if (!std::isfinite(c) || c < 0.0) throw std::invalid_argument("couplings must be finite and non-negative");
  }
}

ChainSpec ChainSpec::uniform(int length, double coupling) {
  if (length < 2) throw std::invalid_argument("chain length must be at least 2");
  return ChainSpec(std::vector<double>(static_cast<std::size_t>(length - 1), coupling));
}

Eigen::MatrixXd SingleExcitationHamiltonian::excitation_block() const {
  const auto n = matrix.rows() - 1;
  return matrix.bottomRightCorner(n, n);
}

std::vector<double> sample_disorder(const DisorderConfig& config, int bonds) {
  if (bonds < 1) throw std::invalid_argument("sample_disorder: need at least one bond");
  if (!(config.strength >= 0.0) || config.strength >= 1.0)
    throw std::invalid_argument("disorder strength must lie in [0, 1)");
  if (!(config.correlation >= 0.0 && config.correlation <= 1.0))
    throw std::invalid_argument("sign correlation must lie in [0, 1]");

  std::vector<double> deltas(static_cast<std::size_t>(bonds), 0.0);
  if (config.strength == 0.0) return deltas;

  CounterRng rng(config.seed);
  double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  for (int n = 0; n < bonds; ++n) {
    if (n > 0 && !rng.bernoulli(config.correlation)) sign = -sign;
    deltas[static_cast<std::size_t>(n)] = sign * config.strength * rng.uniform();
  }
  return deltas;
}

ChainSpec build_chain(int length, const DisorderConfig& config) {
  if (length < 2) throw std::invalid_argument("chain length must be at least 2");
  auto deltas = sample_disorder(config, length - 1);
  for (auto& d : deltas) d += 1.0;
  return ChainSpec(std::move(deltas));
}

namespace {

double energy_scale(Convention convention) {
  return convention == Convention::Pauli ? 1.0 : 0.5;
}

}  // namespace

SingleExcitationHamiltonian single_excitation_matrix(const ChainSpec& spec, Convention convention) {
  const int n = spec.length();
  if (n < 2 || spec.bonds() != n - 1) throw std::invalid_argument("invalid chain spec");
  const double scale = energy_scale(convention);

  double total = 0.0;
  for (double c : spec.couplings) total += scale * c;

  SingleExcitationHamiltonian h;
  h.vacuum_energy = total;
  h.matrix = Eigen::MatrixXd::Zero(n + 1, n + 1);
  h.matrix(0, 0) = total;
  // sigma.sigma on a bond is +1 on |00>, -1 on |01>,|10> plus a flip-flop of 2.
  for (int m = 1; m <= n; ++m) {
    double touching = 0.0;
    if (m > 1) touching += scale * spec.couplings[static_cast<std::size_t>(m - 2)];
    if (m < n) touching += scale * spec.couplings[static_cast<std::size_t>(m - 1)];
    h.matrix(m, m) = total - 2.0 * touching;
  }
  for (int b = 1; b < n; ++b) {
    const double hop = 2.0 * scale * spec.couplings[static_cast<std::size_t>(b - 1)];
    h.matrix(b, b + 1) = hop;
    h.matrix(b + 1, b) = hop;
  }
  return h;
}

Eigen::MatrixXd full_space_hamiltonian(const ChainSpec& spec, Convention convention) {
  const int n = spec.length();
  if (n > 12) throw std::invalid_argument("full_space_hamiltonian: N too large for a dense 2^N matrix");
  const double scale = energy_scale(convention);
  const Eigen::Index dim = Eigen::Index{1} << n;

  using Mat = Eigen::MatrixXcd;
  Mat sx(2, 2), sy(2, 2), sz(2, 2);
  const std::complex<double> i(0.0, 1.0);
  sx << 0, 1, 1, 0;
  sy << 0, -i, i, 0;
  sz << 1, 0, 0, -1;

  // Qubit basis: |0> = spin up (no excitation), |1> = flipped.
  auto embed = [n](const Mat& a, int site_a, const Mat& b, int site_b) {
    Mat out = Mat::Identity(1, 1);
    for (int q = 0; q < n; ++q) {
      Mat factor = Mat::Identity(2, 2);
      if (q == site_a) factor = a;
      if (q == site_b) factor = b;
      Mat next(out.rows() * 2, out.cols() * 2);
      for (Eigen::Index r = 0; r < out.rows(); ++r)
        for (Eigen::Index c = 0; c < out.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = out(r, c) * factor;
      out = std::move(next);
    }
    return out;
  };

  Mat h = Mat::Zero(dim, dim);
  for (int b = 0; b < n - 1; ++b) {
    const double j = scale * spec.couplings[static_cast<std::size_t>(b)];
    h += j * (embed(sx, b, sx, b + 1) + embed(sy, b, sy, b + 1) + embed(sz, b, sz, b + 1));
  }
  return h.real();
}

void write_chain(std::ostream& out, const ChainSpec& spec, const std::string& comment) {
  out << "# dualrail chain\n";
  out << "N " << spec.length() << '\n';
  if (!comment.empty()) {
    std::istringstream lines(comment);
    std::string line;
    while (std::getline(lines, line)) out << "# " << line << '\n';
  }
  out.precision(17);
  for (double c : spec.couplings) out << c << '\n';
}

ChainSpec read_chain(std::istream& in) {
  std::string line;
  int length = -1;
  std::vector<double> couplings;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line.substr(first));
    if (line[first] == 'N') {
      std::string tag;
      fields >> tag >> length;
      if (!fields || length < 2) throw std::runtime_error("chain file: bad header line '" + line + "'");
      continue;
    }
    double value = 0.0;
    if (!(fields >> value)) throw std::runtime_error("chain file: bad coupling line '" + line + "'");
    couplings.push_back(value);
  }
  if (length < 0) throw std::runtime_error("chain file: missing 'N <length>' header");
  if (static_cast<int>(couplings.size()) != length - 1)
    throw std::runtime_error("chain file: expected " + std::to_string(length - 1) + " couplings, found " +
                             std::to_string(couplings.size()));
  return ChainSpec(std::move(couplings));
}

void save_chain(const std::string& path, const ChainSpec& spec, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_chain(out, spec, comment);
}

ChainSpec load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_chain(in);
}

}  // namespace dualrail
