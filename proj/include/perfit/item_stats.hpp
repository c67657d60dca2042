#pragma once

#include <cstddef>
#include <vector>

#include "perfit/types.hpp"

namespace perfit::pfs {

// Item difficulty summary. p[j] is the proportion correct for column j,
// logit[j] = ln(p/(1-p)), and order lists column indices easiest first
// (descending p, ties kept in original column order).
struct ItemStats {
  std::vector<double> p;
  std::vector<double> logit;
  std::vector<std::size_t> order;

  std::size_t n_items() const { return p.size(); }
};

// Estimate from a filtered matrix. Requires 0 < p < 1 on every column.
ItemStats item_stats(const ResponseMatrix& m);

// Build from externally supplied difficulties (reference values override
// in-sample estimation). Each p must lie strictly inside (0, 1).
ItemStats item_stats_from_p(std::vector<double> p);

}  // namespace perfit::pfs
