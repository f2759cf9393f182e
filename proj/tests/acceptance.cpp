// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "dualrail/harness.hpp"
#include "dualrail/protocol.hpp"
#include "dualrail/tomography.hpp"
#include "oracles.hpp"

using namespace dualrail;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, double seconds) {
  std::printf("%s criterion %d: %s [%.1fs]\n", ok ? "PASS" : "FAIL", id, what.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

template <class F>
void criterion(int id, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  std::string what;
  bool ok = false;
  try {
    ok = body(what);
  } catch (const std::exception& e) {
    what += std::string(" exception: ") + e.what();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(id, ok, what, seconds);
}

SweepConfig sweep_defaults() {
  SweepConfig config;
  config.threads = 1;
  return config;
}

}  // namespace

int main() {
  // 1. Norm identities on random pairs and interval sequences.
  criterion(1, [](std::string& what) {
    CounterRng rng(101);
    double worst = 0.0;
    for (int pair = 0; pair < 100; ++pair) {
      const int n1 = 2 + static_cast<int>(rng.uniform() * 11);
      const int n2 = 2 + static_cast<int>(rng.uniform() * 11);
      const double delta = 0.2 * rng.uniform();
      const auto p1 = diagonalize(oracle::random_chain(rng, n1, delta));
      const auto p2 = diagonalize(oracle::random_chain(rng, n2, delta));
      const auto trace = projected_trace(p1, p2, oracle::random_intervals(rng, 5, 3.0 * std::max(n1, n2)));
      worst = std::max(worst, norm_identities(trace).max_identity_residual());
    }
    what = fmt("norm identities, 100 pairs: max residual %.2e (limit 1e-9)", worst);
    return worst < 1e-9;
  });

  // 2. Full 2^N space vs the single-excitation block, and dense projected products.
  criterion(2, [](std::string& what) {
    CounterRng rng(202);
    double block = 0.0, traces = 0.0;
    for (int n = 2; n <= 5; ++n) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto spec = oracle::random_chain(rng, n, 0.2);
        for (auto conv : {Convention::Pauli, Convention::UnitHopping}) {
          const auto prop = diagonalize(spec, conv);
          const auto full = oracle::heisenberg(spec, conv);
          for (double t : {0.3, 2.1, 9.7}) {
            const auto u = oracle::propagator(full, t);
            for (int a = 1; a <= n; ++a)
              for (int b = 1; b <= n; ++b)
                block = std::max(block, std::abs(u(oracle::excitation_index(n, b), oracle::excitation_index(n, a)) -
                                                 prop.amplitude(a, b, t)));
            block = std::max(block, std::abs(u(0, 0) - std::polar(1.0, -prop.vacuum_energy() * t)));
          }
          const auto intervals = oracle::random_intervals(rng, 6, 4.0);
          const auto trace = projected_trace(prop, prop, intervals);
          const auto dense = oracle::dense_trace(spec, conv, intervals);
          for (std::size_t l = 0; l < intervals.size(); ++l) {
            traces = std::max(traces, std::abs(trace.F[l] - dense.F[l]));
            traces = std::max(traces, std::abs(trace.P[l + 1] - dense.P[l + 1]));
          }
        }
      }
    }
    what = fmt("N<=5 oracle: block vs 2^N %.2e, projected traces vs dense %.2e (limit 1e-10)", block, traces);
    return block < 1e-10 && traces < 1e-10;
  });

  // 3. F, G, P from the four endpoint functions alone.
  criterion(3, [](std::string& what) {
    CounterRng rng(303);
    const double dt = 0.01;
    double worst = 0.0;
    int unequal = 0;
    for (int pair = 0; pair < 50; ++pair) {
      const int n1 = 3 + static_cast<int>(rng.uniform() * 10);
      const int n2 = pair % 5 == 0 ? n1 : 3 + static_cast<int>(rng.uniform() * 10);
      unequal += n1 != n2;
      const auto p1 = diagonalize(oracle::random_chain(rng, n1, 0.1));
      const auto p2 = diagonalize(oracle::random_chain(rng, n2, 0.1));
      std::vector<double> intervals;
      double total = 0.0;
      for (int l = 0; l < 5; ++l) {
        intervals.push_back(dt * (1 + static_cast<int>(rng.uniform() * 100 * std::max(n1, n2))));
        total += intervals.back();
      }
      CounterRng unused(0);
      const auto ep = estimate_endpoints(p1, p2, 0, {dt, total + 1.0}, unused);
      const auto rec = reconstruct_F_G(ep, intervals);
      const auto direct = projected_trace(p1, p2, intervals);
      double t = 0.0;
      for (std::size_t l = 0; l < intervals.size(); ++l) {
        t += intervals[l];
        worst = std::max(worst, std::abs(rec.trace.F[l] - direct.F[l] * std::polar(1.0, p1.vacuum_energy() * t)));
        worst = std::max(worst, std::abs(rec.trace.G[l] - direct.G[l] * std::polar(1.0, p2.vacuum_energy() * t)));
        worst = std::max(worst, std::abs(rec.trace.P[l + 1] - direct.P[l + 1]));
      }
    }
    what = fmt("endpoint-only reconstruction, 50 pairs (%d with N1!=N2): max error %.2e (limit 1e-9)", unequal,
               worst);
    return worst < 1e-9 && unequal > 0;
  });

  // 4. Conditional fidelity of successful transfers.
  criterion(4, [](std::string& what) {
    SchedulerConfig config;
    CounterRng rng(404);
    double identical = 1.0, disordered = 1.0;
    int successes = 0;
    const auto same = diagonalize(build_chain(16, {0.05, 0.5, 41}));
    const auto same_schedule = build_schedule(same, same, config);
    for (int k = 0; k < 20; ++k) {
      const auto q = LogicalQubit::bloch(std::acos(1 - 2 * rng.uniform()), 2 * std::numbers::pi * rng.uniform());
      for (int rep = 0; rep < 5; ++rep) {
        const auto r = run_transfer(q, same_schedule, same, same, rng);
        if (r.succeeded()) identical = std::min(identical, r.fidelity), ++successes;
      }
    }
    for (std::uint64_t pair = 0; pair < 5; ++pair) {
      const auto p1 = diagonalize(build_chain(16, {0.05, 0.5, derive_seed({pair, 1})}));
      const auto p2 = diagonalize(build_chain(16, {0.05, 0.5, derive_seed({pair, 2})}));
      const auto schedule = build_schedule(p1, p2, config);
      for (int k = 0; k < 20; ++k) {
        const auto q = LogicalQubit::bloch(std::acos(1 - 2 * rng.uniform()), 2 * std::numbers::pi * rng.uniform());
        const auto r = run_transfer(q, schedule, p1, p2, rng);
        if (r.succeeded()) disordered = std::min(disordered, r.fidelity), ++successes;
      }
    }
    what = fmt("conditional fidelity over %d successes: identical 1-%.1e (limit 1e-10), disordered 1-%.1e (limit 1e-5)",
               successes, 1 - identical, 1 - disordered);
    return 1 - identical < 1e-10 && 1 - disordered <= 1e-5;
  });

  // 5. Clean chains, N=20.
  criterion(5, [](std::string& what) {
    auto config = sweep_defaults();
    config.samples = 1;
    const auto r = run_sweep(config).front();
    what = fmt("delta=0 N=20: M=%d (band 22..34), t=%.1f (band 300..460), P=%.4f", r.measurements, r.total_time,
               r.failure);
    return r.achieved && r.measurements >= 22 && r.measurements <= 34 && r.total_time >= 300 && r.total_time <= 460;
  });

  // 6. Uncorrelated disorder, N=20, 10 samples.
  criterion(6, [](std::string& what) {
    auto config = sweep_defaults();
    config.deltas = {0.05};
    config.samples = 10;
    const auto cell = summarize(run_sweep(config)).front();
    what = fmt("delta=0.05 N=20, %d/%d achieved: mean t=%.1f+-%.1f (band 620..930), mean M=%.1f+-%.1f (band 50..80)",
               cell.achieved, cell.samples, cell.mean_time, cell.std_time, cell.mean_measurements,
               cell.std_measurements);
    return cell.achieved == cell.samples && cell.mean_time >= 620 && cell.mean_time <= 930 &&
           cell.mean_measurements >= 50 && cell.mean_measurements <= 80;
  });

  // 7. Sign correlation barely matters.
  criterion(7, [](std::string& what) {
    auto config = sweep_defaults();
    config.deltas = {0.05};
    config.correlations = {0.0, 0.1, 0.5, 1.0};
    config.samples = 20;
    const auto cells = summarize(run_sweep(config));
    double lo = 1e300, hi = 0.0;
    bool all = true;
    std::string detail;
    for (const auto& c : cells) {
      detail += fmt(" c=%g:M=%.1f(%d/%d)", c.correlation, c.mean_measurements, c.achieved, c.samples);
      if (c.correlation == 0.1) continue;  // reported only
      lo = std::min(lo, c.mean_measurements);
      hi = std::max(hi, c.mean_measurements);
      all = all && c.achieved == c.samples;
    }
    what = fmt("delta=0.05 N=20, c in {0,0.5,1}: max/min mean M=%.3f (limit 1.5), all achieved=%s;", hi / lo,
               all ? "yes" : "no") +
           detail;
    return all && hi / lo < 1.5;
  });

  // 8. Scaling exponents.
  criterion(8, [](std::string& what) {
    auto config = sweep_defaults();
    config.lengths.clear();
    for (int n = 5; n <= 20; ++n) config.lengths.push_back(n);
    config.samples = 1;
    const auto clean = fit_scaling(run_sweep(config), default_failure_grid());
    config.deltas = {0.05};
    config.samples = 10;
    const auto disordered = fit_scaling(run_sweep(config), default_failure_grid());
    what = fmt("N=5..20: delta=0 b=%.3f a=%.3f (band 1.4..1.8), delta=0.05 b=%.3f a=%.3f (band 1.6..2.2)",
               clean.exponent, clean.prefactor, disordered.exponent, disordered.prefactor);
    return clean.exponent >= 1.4 && clean.exponent <= 1.8 && disordered.exponent >= 1.6 &&
           disordered.exponent <= 2.2;
  });

  // 9. Success-by-round histogram against P(l-1) - P(l).
  criterion(9, [](std::string& what) {
    const auto p1 = diagonalize(build_chain(8, {0.05, 0.5, 901}));
    const auto p2 = diagonalize(build_chain(8, {0.05, 0.5, 902}));
    const auto schedule = build_schedule(p1, p2, SchedulerConfig{});
    const int m = schedule.measurements();
    const int trials = 10000;
    std::vector<int> counts(static_cast<std::size_t>(m + 1), 0);  // last bin: never heralded
    CounterRng rng(909);
    for (int k = 0; k < trials; ++k) {
      const auto q = LogicalQubit::bloch(std::acos(1 - 2 * rng.uniform()), 2 * std::numbers::pi * rng.uniform());
      const auto r = run_transfer(q, schedule, p1, p2, rng);
      ++counts[static_cast<std::size_t>(r.succeeded() ? *r.success_round - 1 : m)];
    }
    double worst = 0.0;
    for (int l = 0; l <= m; ++l) {
      const auto lu = static_cast<std::size_t>(l);
      const double p = l < m ? schedule.trace.P[lu] - schedule.trace.P[lu + 1] : schedule.trace.P.back();
      const double sigma = std::sqrt(trials * p * (1 - p));
      const double dev = std::abs(counts[lu] - trials * p);
      worst = std::max(worst, sigma > 0 ? dev / sigma : (dev > 0 ? 1e300 : 0.0));
    }
    what = fmt("N=8 pair, %d rounds, %d transfers: worst bin deviation %.2f sigma (limit 4)", m, trials, worst);
    return m > 0 && worst < 4.0;
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures;
}
