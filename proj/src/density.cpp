#include "perfit/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "perfit/csv.hpp"
#include "perfit/error.hpp"

namespace perfit::expt {

double quantile_type7(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) fail_validation("quantile of an empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double h = q * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> fd_bin_edges(std::vector<double> pooled) {
  if (pooled.empty()) fail_validation("cannot bin an empty sample");
  std::sort(pooled.begin(), pooled.end());
  const double lo = pooled.front();
  const double hi = pooled.back();
  const auto n = static_cast<double>(pooled.size());

  if (hi == lo) return {lo, hi};  // single degenerate bin

  double width = 2.0 * (quantile_type7(pooled, 0.75) - quantile_type7(pooled, 0.25)) /
                 std::cbrt(n);
  if (width <= 0.0) width = (hi - lo) / std::ceil(std::sqrt(n));

  auto n_bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
  n_bins = std::clamp<std::size_t>(n_bins, 1, 1000);

  std::vector<double> edges(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i)
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  return edges;
}

std::vector<DensityBin> histogram(const std::vector<double>& values,
                                  const std::vector<double>& edges) {
  if (edges.size() < 2) fail_validation("histogram needs at least one bin");
  const std::size_t n_bins = edges.size() - 1;
  std::vector<DensityBin> bins(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    bins[i].left = edges[i];
    bins[i].right = edges[i + 1];
  }
  const double lo = edges.front();
  const double hi = edges.back();
  const double span = hi - lo;
  for (double v : values) {
    if (v < lo || v > hi) continue;
    std::size_t idx;
    if (span == 0.0) {
      idx = 0;
    } else {
      idx = static_cast<std::size_t>((v - lo) / span * static_cast<double>(n_bins));
      if (idx >= n_bins) idx = n_bins - 1;  // right edge closes the last bin
    }
    ++bins[idx].count;
  }
  return bins;
}

std::string density_csv(Measure measure,
                        const std::vector<std::pair<std::string, std::vector<double>>>& groups) {
  std::vector<double> pooled;
  for (const auto& [label, values] : groups)
    pooled.insert(pooled.end(), values.begin(), values.end());

  std::string out = "measure,group,bin_left,bin_right,count\n";
  if (pooled.empty()) return out;  // nothing valid to bin; header only

  const std::vector<double> edges = fd_bin_edges(std::move(pooled));
  char buf[64];
  for (const auto& [label, values] : groups) {
    for (const DensityBin& bin : histogram(values, edges)) {
      out += measure_token(measure);
      out += ',';
      out += io::csv_field(label);
      std::snprintf(buf, sizeof buf, ",%.12g,%.12g,%ld\n", bin.left, bin.right, bin.count);
      out += buf;
    }
  }
  return out;
}

}  // namespace perfit::expt
