#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "dualrail/scheduler.hpp"
#include "oracles.hpp"

using namespace dualrail;

namespace {

SchedulerConfig pauli_config() {
  SchedulerConfig config;
  config.horizon_per_site = 4.0;
  config.max_horizon_factor = 1.0;
  return config;
}

void check_tolerance_invariant(const MeasurementSchedule& s, const SchedulerConfig& config) {
  for (std::size_t l = 0; l < s.trace.steps(); ++l) CHECK(amplitudes_match(s.trace.F[l], s.trace.G[l], config));
}

}  // namespace

TEST_CASE("config validation") {
  SchedulerConfig config;
  CHECK_NOTHROW(config.validate());
  CHECK(config.horizon_for(20) == doctest::Approx(20.0));
  config.horizon = 7.0;
  CHECK(config.horizon_for(20) == 7.0);
  for (double bad : {0.0, -0.1, 1.5}) {
    SchedulerConfig c;
    c.target_failure = bad;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }
  SchedulerConfig c;
  c.time_step = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(objective_from_string(to_string(Objective::FailureRate)) == Objective::FailureRate);
  CHECK_THROWS(objective_from_string("fastest"));
}

TEST_CASE("amplitude match uses relative tolerance with a floor") {
  SchedulerConfig config;
  CHECK(amplitudes_match(0.5, 0.5004, config));
  CHECK_FALSE(amplitudes_match(0.5, 0.501, config));
  CHECK(amplitudes_match(0.0, 1e-10, config));
  CHECK_FALSE(amplitudes_match(0.0, 1e-7, config));
  CHECK(amplitudes_match(cplx(0, 0.3), cplx(-0.3, 0), config));
}

TEST_CASE("N=2 identical Pauli chains: first reading at the full transfer time") {
  const auto p = diagonalize(ChainSpec::uniform(2), Convention::Pauli);
  PropagatorSource a(p), b(p);
  const auto t = find_next_time(a, b, pauli_config());
  REQUIRE(t);
  CHECK(*t > 0.0);
  CHECK(*t == doctest::Approx(std::numbers::pi / 4).epsilon(1e-6));

  const auto unit = diagonalize(ChainSpec::uniform(2), Convention::UnitHopping);
  PropagatorSource c(unit), d(unit);
  const auto tu = find_next_time(c, d, pauli_config());
  REQUIRE(tu);
  CHECK(*tu == doctest::Approx(std::numbers::pi / 2).epsilon(1e-6));

  const auto schedule = build_schedule(p, p, pauli_config());
  CHECK(schedule.achieved);
  CHECK(schedule.measurements() == 1);
  CHECK(schedule.final_failure() < 1e-10);
}

TEST_CASE("different lengths: scheduled times satisfy the condition") {
  const auto p3 = diagonalize(ChainSpec::uniform(3));
  const auto p7 = diagonalize(ChainSpec::uniform(7));
  SchedulerConfig config;
  config.target_failure = 0.05;
  config.max_measurements = 200;
  const auto schedule = build_schedule(p3, p7, config);
  REQUIRE(schedule.measurements() > 0);
  check_tolerance_invariant(schedule, config);
  for (double tau : schedule.intervals) CHECK(tau > 0.0);
  // Independent check of the first crossing: |f_31| - |f_71| changes sign near it.
  const double t1 = schedule.intervals[0];
  CHECK(std::abs(std::abs(p3.amplitude(1, 3, t1)) - std::abs(p7.amplitude(1, 7, t1))) <
        1e-3 * std::abs(p3.amplitude(1, 3, t1)) + 1e-12);
}

TEST_CASE("target 1 needs no measurements") {
  const auto p = diagonalize(ChainSpec::uniform(5));
  SchedulerConfig config;
  config.target_failure = 1.0;
  const auto s = build_schedule(p, p, config);
  CHECK(s.achieved);
  CHECK(s.measurements() == 0);
  CHECK(s.total_time() == 0.0);
}

TEST_CASE("N=4 identical chains: monotone failure, matches dense evolution") {
  const auto spec = ChainSpec::uniform(4);
  const auto p = diagonalize(spec, Convention::Pauli);
  SchedulerConfig config;
  config.target_failure = 0.05;
  const auto s = build_schedule(p, p, config);
  REQUIRE(s.achieved);
  CHECK(s.final_failure() <= 0.05);
  for (std::size_t l = 0; l + 1 < s.trace.P.size(); ++l) CHECK(s.trace.P[l + 1] < s.trace.P[l]);
  const auto dense = oracle::dense_trace(spec, Convention::Pauli, s.intervals);
  for (std::size_t l = 0; l < s.intervals.size(); ++l) CHECK(std::abs(dense.F[l] - s.trace.F[l]) < 1e-10);
}

TEST_CASE("disordered pairs: determinism, invariants, identities") {
  SchedulerConfig config;
  config.max_measurements = 400;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto p1 = diagonalize(build_chain(12, {0.05, 0.5, derive_seed({seed, 1})}));
    const auto p2 = diagonalize(build_chain(12, {0.05, 0.5, derive_seed({seed, 2})}));
    const auto s = build_schedule(p1, p2, config);
    const auto again = build_schedule(p1, p2, config);
    CHECK(s.intervals == again.intervals);
    check_tolerance_invariant(s, config);
    for (double p : s.trace.p) CHECK(p < 1.0);
    CHECK(norm_identities(s.trace).max_identity_residual() < 1e-10);
    CHECK(s.achieved == (s.final_failure() <= config.target_failure));
  }
}

TEST_CASE("slope matching restricts candidates") {
  const auto p1 = diagonalize(build_chain(8, {0.05, 0.5, 3}));
  const auto p2 = diagonalize(build_chain(8, {0.05, 0.5, 4}));
  SchedulerConfig config;
  config.target_failure = 0.2;
  config.max_measurements = 100;
  config.slope_match = true;
  config.slope_tolerance = 0.05;
  const auto s = build_schedule(p1, p2, config);
  Branch b1(p1), b2(p2);
  for (std::size_t l = 0; l < s.intervals.size(); ++l) {
    const double tau = s.intervals[l];
    const auto d = [tau](const Branch& b) {
      const cplx a = b.arrival(tau);
      return std::real(std::conj(a) * b.arrival_rate(tau)) / std::abs(a);
    };
    CHECK(std::abs(d(b1) - d(b2)) <= config.slope_tolerance * std::max(1.0, std::abs(d(b1))) + 1e-9);
    b1.advance(tau);
    b1.project_end();
    b2.advance(tau);
    b2.project_end();
  }
  check_tolerance_invariant(s, config);
}

TEST_CASE("failure-rate objective also meets the target") {
  const auto p = diagonalize(ChainSpec::uniform(10));
  SchedulerConfig config;
  config.objective = Objective::FailureRate;
  const auto s = build_schedule(p, p, config);
  CHECK(s.achieved);
  CHECK(s.final_failure() <= 0.01);
}

TEST_CASE("unknown horizon is rejected for sources without a length") {
  struct Unsized final : ArrivalSource {
    cplx arrival(double) const override { return 0.5; }
    cplx arrival_rate(double) const override { return 0.0; }
    cplx commit(double) override { return 0.5; }
    double survival() const override { return 1.0; }
    int length() const override { return 0; }
    std::unique_ptr<ArrivalSource> clone() const override { return std::make_unique<Unsized>(*this); }
  };
  Unsized a, b;
  CHECK_THROWS_AS(find_next_time(a, b, SchedulerConfig{}), std::invalid_argument);
}

TEST_CASE("schedule csv round trip") {
  const auto p1 = diagonalize(build_chain(10, {0.05, 0.5, 11}));
  const auto p2 = diagonalize(build_chain(10, {0.05, 0.5, 12}));
  SchedulerConfig config;
  config.target_failure = 0.03;
  config.slope_tolerance = 0.02;
  config.objective = Objective::FailureRate;
  const auto s = build_schedule(p1, p2, config);
  std::stringstream io;
  write_schedule_csv(io, s, config);
  const auto loaded = read_schedule_csv(io);
  CHECK(loaded.intervals == s.intervals);
  CHECK(loaded.phases == s.trace.phase);
  CHECK(loaded.achieved == s.achieved);
  CHECK(loaded.config.target_failure == config.target_failure);
  CHECK(loaded.config.slope_tolerance == config.slope_tolerance);
  CHECK(loaded.config.objective == config.objective);
  const auto replay = projected_trace(p1, p2, loaded.intervals);
  CHECK(replay.P.back() == doctest::Approx(s.final_failure()).epsilon(1e-12));

  std::istringstream bad("l,t_l\n1,x\n");
  CHECK_THROWS(read_schedule_csv(bad));
}
