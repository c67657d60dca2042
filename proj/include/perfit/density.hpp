#pragma once

#include <string>
#include <vector>

#include "perfit/types.hpp"

namespace perfit::expt {

struct DensityBin {
  double left = 0.0;
  double right = 0.0;
  long count = 0;
};

struct DensitySeries {
  std::string group;
  std::vector<DensityBin> bins;
};

// Type-7 linear interpolation on a sorted sample.
double quantile_type7(const std::vector<double>& sorted, double q);

// Freedman-Diaconis edges over the pooled values; falls back to a
// sqrt(n) rule when the IQR collapses and to one degenerate bin when the
// range is zero.
std::vector<double> fd_bin_edges(std::vector<double> pooled);

std::vector<DensityBin> histogram(const std::vector<double>& values,
                                  const std::vector<double>& edges);

// Common edges across groups so densities overlay; one row per bin:
// measure,group,bin_left,bin_right,count
std::string density_csv(Measure measure,
                        const std::vector<std::pair<std::string, std::vector<double>>>& groups);

}  // namespace perfit::expt
