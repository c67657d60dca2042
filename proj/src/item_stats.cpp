#include "perfit/item_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace perfit::pfs {

namespace {

ItemStats from_difficulties(std::vector<double> p) {
  ItemStats stats;
  stats.logit.resize(p.size());
  for (std::size_t j = 0; j < p.size(); ++j)
    stats.logit[j] = std::log(p[j] / (1.0 - p[j]));
  stats.order.resize(p.size());
  std::iota(stats.order.begin(), stats.order.end(), std::size_t{0});
  // easiest first; stable so tied difficulties keep column order
  std::stable_sort(stats.order.begin(), stats.order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  stats.p = std::move(p);
  return stats;
}

}  // namespace

ItemStats item_stats(const ResponseMatrix& m) {
  const double n = static_cast<double>(m.n_respondents());
  std::vector<double> p(m.n_items());
  for (std::size_t j = 0; j < m.n_items(); ++j) {
    std::size_t sum = m.column_sum(j);
    if (sum == 0 || sum == m.n_respondents())
      fail_validation("item \"" + m.items()[j] +
                      "\" is degenerate; filter items before computing statistics");
    p[j] = static_cast<double>(sum) / n;
  }
  return from_difficulties(std::move(p));
}

ItemStats item_stats_from_p(std::vector<double> p) {
  if (p.empty()) fail_validation("difficulty vector is empty");
  for (double v : p)
    if (!(v > 0.0 && v < 1.0))
      fail_validation("difficulties must lie strictly between 0 and 1");
  return from_difficulties(std::move(p));
}

}  // namespace perfit::pfs
