#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfit/item_stats.hpp"
#include "perfit/types.hpp"

namespace perfit::pfs {

// Conditional null moments of U3 given the total score r.
struct NullMoments {
  double u3_mean = 0.0;
  double u3_var = 0.0;
};

struct PfsRecord {
  std::string respondent_id;
  Source source;
  int r = 0;
  long g = 0;
  std::optional<double> g_star;  // undefined at r in {0, J}
  std::optional<double> u3;      // also undefined when all logits coincide
  std::optional<double> zu3;
  bool valid = false;
};

// Pattern already reindexed easiest-first. Counts pairs i < j with
// x[i] = 0 and x[j] = 1.
long guttman_errors(std::span<const std::uint8_t> x_easiest_first);

std::optional<double> g_star(long g, int r, int j);

std::vector<std::uint8_t> reorder_easiest_first(std::span<const std::uint8_t> row,
                                                const ItemStats& stats);

std::optional<double> u3(std::span<const std::uint8_t> x_easiest_first,
                         const ItemStats& stats);

// Exact moments under sampling r of J items without replacement.
// r must lie strictly between 0 and J.
NullMoments null_moments(const ItemStats& stats, int r);

std::optional<double> zu3(double u3_value, const NullMoments& moments);

enum class Execution { Parallel, Serial };

// Per-respondent statistics for a filtered matrix. Rows are independent, so
// the parallel path partitions rows and is bit-identical to the serial one.
std::vector<PfsRecord> compute_all(const ResponseMatrix& m, const ItemStats& stats,
                                   Execution exec = Execution::Parallel);
std::vector<PfsRecord> compute_all(const ResponseMatrix& m,
                                   Execution exec = Execution::Parallel);

std::optional<double> measure_value(const PfsRecord& rec, Measure m);

// Ids of valid records whose measure strictly exceeds the threshold,
// ordered by descending measure value (ties keep record order).
std::vector<std::string> flag_aberrant(const std::vector<PfsRecord>& records,
                                       Measure measure, double threshold);

// Header "respondent_id,source,r,G,G_star,U3,ZU3,valid"; undefined values
// serialize as empty cells; floats carry 6 significant digits.
std::string to_pfs_csv(const std::vector<PfsRecord>& records);

}  // namespace perfit::pfs
