#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "dualrail/protocol.hpp"
#include "oracles.hpp"

using namespace dualrail;

namespace {

// Runs rounds on copies of the state until the wanted outcome occurs.
RoundResult force_round(TransferState& state, double t, double phi, bool want, std::uint64_t& seed) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    TransferState copy = state;
    CounterRng rng(seed++);
    const auto r = run_round(copy, t, phi, rng);
    if (r.success == want) {
      state = copy;
      return r;
    }
  }
  FAIL("outcome never occurred");
  return {};
}

}  // namespace

TEST_CASE("logical qubit and encoding") {
  CHECK_THROWS_AS(LogicalQubit(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LogicalQubit(0.6, 0.6), std::invalid_argument);
  const auto plus = LogicalQubit::bloch(std::numbers::pi / 2, 0.0);
  CHECK(plus.alpha().real() == doctest::Approx(std::sqrt(0.5)));
  CHECK(plus.fidelity(plus) == doctest::Approx(1.0));
  CHECK(plus.fidelity(LogicalQubit::bloch(std::numbers::pi / 2, std::numbers::pi)) < 1e-15);

  const auto zero = encode(LogicalQubit(1.0, 0.0), 4, 6);
  CHECK(zero.chain2(0) == cplx(1.0));
  CHECK(zero.chain1.squaredNorm() == 0.0);
  const auto one = encode(LogicalQubit(0.0, 1.0), 4, 6);
  CHECK(one.chain1(0) == cplx(1.0));
  CHECK(one.chain2.squaredNorm() == 0.0);
  const auto mixed = encode(plus, 3, 3);
  CHECK(mixed.norm2() == doctest::Approx(1.0));
  CHECK(std::abs(mixed.chain1(0) - mixed.chain2(0)) < 1e-15);
  CHECK_THROWS_AS(encode(plus, 0, 3), std::invalid_argument);
}

TEST_CASE("round statistics and Bob's state match the two-chain evolution") {
  const ChainSpec s1({1.1, 0.9});
  const ChainSpec s2({0.95, 1.05, 1.0});
  const std::vector<double> intervals{0.8, 1.7, 0.6, 2.3};
  const auto q = LogicalQubit::bloch(1.1, 0.7);
  for (auto conv : {Convention::Pauli, Convention::UnitHopping}) {
    const auto ref = oracle::two_chain_rounds(s1, s2, conv, q.alpha(), q.beta(), intervals);
    const auto p1 = diagonalize(s1, conv);
    const auto p2 = diagonalize(s2, conv);
    TransferState state(q, p1, p2);
    std::uint64_t seed = 1;
    for (std::size_t l = 0; l < intervals.size(); ++l) {
      CHECK(state.success_probability(intervals[l]) == doctest::Approx(ref[l].success).epsilon(1e-10));
      TransferState trial = state;
      const auto hit = force_round(trial, intervals[l], 0.0, true, seed);
      REQUIRE(hit.raw_output);
      CHECK(hit.success_probability == doctest::Approx(ref[l].success).epsilon(1e-10));
      const double nz = std::sqrt(std::norm(ref[l].zero) + std::norm(ref[l].one));
      CHECK(hit.raw_output->fidelity(LogicalQubit(ref[l].zero / nz, ref[l].one / nz)) > 1 - 1e-10);

      force_round(state, intervals[l], 0.0, false, seed);
      // Compare the renormalized physical state with the dense one.
      const auto phys = state.physical();
      cplx overlap = 0.0;
      for (int m = 1; m <= s1.length(); ++m)
        overlap += std::conj(phys.chain1(m - 1)) * ref[l].projected(oracle::excitation_index(s1.length(), m) << s2.length());
      for (int m = 1; m <= s2.length(); ++m)
        overlap += std::conj(phys.chain2(m - 1)) * ref[l].projected(oracle::excitation_index(s2.length(), m));
      CHECK(std::norm(overlap) > 1 - 1e-10);
    }
  }
}

TEST_CASE("identical chains transfer every Bloch state perfectly") {
  const auto p = diagonalize(build_chain(10, {0.05, 0.5, 3}));
  SchedulerConfig config;
  const auto schedule = build_schedule(p, p, config);
  REQUIRE(schedule.achieved);
  CounterRng rng(5);
  for (int k = 0; k < 30; ++k) {
    const auto q = LogicalQubit::bloch(std::acos(1 - 2 * rng.uniform()), 2 * std::numbers::pi * rng.uniform());
    const auto record = run_transfer(q, schedule, p, p, rng);
    CHECK(record.biased_rounds == 0);
    if (record.succeeded()) CHECK(record.fidelity > 1 - 1e-12);
  }
}

TEST_CASE("disordered pair with its schedule keeps fidelity") {
  const auto p1 = diagonalize(build_chain(10, {0.05, 0.5, 31}));
  const auto p2 = diagonalize(build_chain(10, {0.05, 0.5, 32}));
  const auto schedule = build_schedule(p1, p2, SchedulerConfig{});
  CounterRng rng(6);
  int successes = 0;
  for (int k = 0; k < 200; ++k) {
    const auto q = LogicalQubit::bloch(std::numbers::pi * rng.uniform(), 2 * std::numbers::pi * rng.uniform());
    const auto record = run_transfer(q, schedule, p1, p2, rng);
    if (!record.succeeded()) continue;
    ++successes;
    CHECK(record.fidelity > 1 - 1e-5);
  }
  CHECK(successes > 180);
}

TEST_CASE("success probability of a basis state is |G|^2/P or |F|^2/P") {
  const auto p1 = diagonalize(build_chain(6, {0.1, 0.5, 1}));
  const auto p2 = diagonalize(build_chain(6, {0.1, 0.5, 2}));
  const std::vector<double> intervals{3.0, 2.0};
  const auto trace = projected_trace(p1, p2, intervals);
  TransferState zero(LogicalQubit(1.0, 0.0), p1, p2);
  TransferState one(LogicalQubit(0.0, 1.0), p1, p2);
  std::uint64_t seed = 100;
  force_round(zero, intervals[0], 0.0, false, seed);
  force_round(one, intervals[0], 0.0, false, seed);
  CHECK(zero.success_probability(intervals[1]) == doctest::Approx(std::norm(trace.G[1]) / trace.w[1]).epsilon(1e-12));
  CHECK(one.success_probability(intervals[1]) == doctest::Approx(std::norm(trace.F[1]) / trace.v[1]).epsilon(1e-12));
}

TEST_CASE("off-condition reading is biased and its rate depends on the input") {
  const auto p3 = diagonalize(ChainSpec::uniform(3));
  const auto p5 = diagonalize(ChainSpec::uniform(5));
  const double t = 1.0;
  const double f2 = std::norm(p3.amplitude(1, 3, t));
  const double g2 = std::norm(p5.amplitude(1, 5, t));
  REQUIRE(std::abs(f2 - g2) > 0.05);
  const int trials = 20000;
  for (const auto& [q, expected] : {std::pair{LogicalQubit(1.0, 0.0), g2}, std::pair{LogicalQubit(0.0, 1.0), f2}}) {
    CounterRng rng(derive_seed({7, static_cast<std::uint64_t>(expected * 1e6)}));
    int hits = 0;
    for (int k = 0; k < trials; ++k) {
      TransferState state(q, p3, p5);
      const auto r = run_round(state, t, 0.0, rng);
      CHECK(r.biased);
      hits += r.success;
    }
    const double sigma = std::sqrt(expected * (1 - expected) / trials);
    CHECK(std::abs(hits / double(trials) - expected) < 5 * sigma);
  }
}

TEST_CASE("unbiased failure leaves the logical state intact") {
  const auto p = diagonalize(build_chain(8, {0.05, 0.5, 12}));
  const auto q = LogicalQubit::bloch(0.9, 2.1);
  TransferState state(q, p, p);
  std::uint64_t seed = 50;
  for (double t : {2.0, 3.5, 1.25}) force_round(state, t, 0.0, false, seed);
  const auto phys = state.physical();
  CHECK(phys.norm2() == doctest::Approx(1.0).epsilon(1e-12));
  // Both chains carry the same spatial profile scaled by the logical amplitudes;
  // the shared vacuum phase is global.
  const auto& shape = state.chain1_branch().site_amplitudes();
  const double n = std::sqrt(state.chain1_branch().norm2());
  const LogicalQubit recovered(shape.dot(phys.chain2) / n, shape.dot(phys.chain1) / n);
  CHECK(recovered.fidelity(q) > 1 - 1e-12);
}

TEST_CASE("run_transfer bookkeeping and log") {
  const auto p = diagonalize(ChainSpec::uniform(2), Convention::Pauli);
  CounterRng rng(1);
  const auto q = LogicalQubit::bloch(0.4, 0.2);
  const auto record = run_transfer(q, {std::numbers::pi / 4}, {0.0}, p, p, rng);
  REQUIRE(record.succeeded());
  CHECK(*record.success_round == 1);
  CHECK(record.fidelity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(run_transfer(q, {1.0}, {}, p, p, rng), std::invalid_argument);

  TransferRecord failed;
  failed.outcomes = {false, false};
  std::ostringstream out;
  write_transfer_log(out, {record, failed});
  CHECK(out.str().rfind("trial,success_round,fidelity\n0,1,", 0) == 0);
  CHECK(out.str().find("\n1,,\n") != std::string::npos);
}
