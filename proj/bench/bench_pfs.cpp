// Times the parallel person-fit kernel against the serial reference on one
// large simulated matrix and checks that both produce identical records.

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "perfit/pfs.hpp"
#include "perfit/rng.hpp"
#include "perfit/simulate.hpp"

using namespace perfit;

namespace {

double run_once(const ResponseMatrix& m, const pfs::ItemStats& stats, pfs::Execution exec,
                std::vector<pfs::PfsRecord>& out) {
  const auto start = std::chrono::steady_clock::now();
  out = pfs::compute_all(m, stats, exec);
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

bool same_optional(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || *a == *b;
}

bool identical(const std::vector<pfs::PfsRecord>& a, const std::vector<pfs::PfsRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].respondent_id != b[i].respondent_id || a[i].r != b[i].r || a[i].g != b[i].g ||
        a[i].valid != b[i].valid)
      return false;
    if (!same_optional(a[i].g_star, b[i].g_star) || !same_optional(a[i].u3, b[i].u3) ||
        !same_optional(a[i].zu3, b[i].zu3))
      return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int rows = 100000, items = 60, reps = 5;
  std::uint64_t seed = 1;
  CLI::App app{"serial vs parallel person-fit benchmark"};
  app.add_option("--rows", rows, "respondents to simulate");
  app.add_option("--items", items, "items per respondent");
  app.add_option("--reps", reps, "timed repetitions per path");
  app.add_option("--seed", seed, "simulation seed");
  CLI11_PARSE(app, argc, argv);

  sim::SimConfig cfg;
  cfg.j = items;
  cfg.n_human = rows;
  const auto bank = sim::make_item_bank(cfg, rng::derive_seed(seed, rng::kStreamBank, 0));
  const ResponseMatrix m = sim::sample_population(rows, 0, bank, cfg, seed);
  const pfs::ItemStats stats = pfs::item_stats(m);

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("person-fit kernel: %d rows x %d items, %d thread%s\n", rows, items, threads,
              threads == 1 ? "" : "s");
  std::printf("%6s %14s %14s %10s\n", "pass", "serial ms", "parallel ms", "speedup");

  std::vector<pfs::PfsRecord> serial, parallel;
  double best_serial = 1e300, best_parallel = 1e300;
  for (int rep = 1; rep <= reps; ++rep) {
    const double s = run_once(m, stats, pfs::Execution::Serial, serial);
    const double p = run_once(m, stats, pfs::Execution::Parallel, parallel);
    best_serial = std::min(best_serial, s);
    best_parallel = std::min(best_parallel, p);
    std::printf("%6d %14.2f %14.2f %9.2fx\n", rep, s, p, s / p);
  }
  std::printf("best:  serial %.2f ms, parallel %.2f ms, speedup %.2fx\n", best_serial,
              best_parallel, best_serial / best_parallel);

  const bool ok = identical(serial, parallel);
  std::printf("serial and parallel records identical: %s\n", ok ? "yes" : "NO");
  return ok ? 0 : 1;
}
