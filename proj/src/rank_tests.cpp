#include "perfit/rank_tests.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "perfit/error.hpp"

namespace perfit::ranks {

namespace {

constexpr double kTailEps = 1e-9;  // rank sums are exact multiples of 0.5

double choose_count(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

double multinomial_count(const std::vector<int>& sizes) {
  int total = std::accumulate(sizes.begin(), sizes.end(), 0);
  double c = 1.0;
  for (int s : sizes) {
    c *= choose_count(total, s);
    total -= s;
  }
  return c;
}

double cap_p(double p) { return std::min(1.0, std::max(0.0, p)); }

double two_sided_from_tails(double p_le, double p_ge) {
  return cap_p(2.0 * std::min(p_le, p_ge));
}

// Counts size-k subsets of `ranks` with subset sum <= / >= target.
struct SubsetTails {
  std::uint64_t le = 0, ge = 0, total = 0;
};

void subset_recurse(const std::vector<double>& ranks, std::size_t start, int remaining,
                    double partial, double target, SubsetTails& out) {
  if (remaining == 0) {
    ++out.total;
    if (partial <= target + kTailEps) ++out.le;
    if (partial >= target - kTailEps) ++out.ge;
    return;
  }
  // i + remaining <= size keeps enough elements to finish the subset
  for (std::size_t i = start; i + static_cast<std::size_t>(remaining) <= ranks.size(); ++i)
    subset_recurse(ranks, i + 1, remaining - 1, partial + ranks[i], target, out);
}

SubsetTails subset_tails(const std::vector<double>& ranks, int k, double target) {
  SubsetTails out;
  subset_recurse(ranks, 0, k, 0.0, target, out);
  return out;
}

}  // namespace

std::string alternative_token(Alternative a) {
  switch (a) {
    case Alternative::Less: return "less";
    case Alternative::Greater: return "greater";
    case Alternative::TwoSided: return "two_sided";
  }
  return "two_sided";
}

Alternative parse_alternative(const std::string& token) {
  if (token == "less") return Alternative::Less;
  if (token == "greater") return Alternative::Greater;
  if (token == "two_sided" || token == "two-sided") return Alternative::TwoSided;
  fail_validation("unknown alternative \"" + token + "\" (expected less or greater)");
}

Ranked mid_ranks(std::span<const double> pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });

  Ranked out;
  out.ranks.resize(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[idx[j + 1]] == pooled[idx[i]]) ++j;
    const double t = static_cast<double>(j - i + 1);
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) out.ranks[idx[k]] = rank;
    out.tie_term += t * t * t - t;
    i = j + 1;
  }
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                             Alternative alt, RankMethod method) {
  if (a.empty() || b.empty()) fail_validation("rank-sum test requires two non-empty groups");
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  const int total = m + n;

  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(total));
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  Ranked ranked = mid_ranks(pooled);

  double rank_sum_a = 0.0;
  for (int i = 0; i < m; ++i) rank_sum_a += ranked.ranks[static_cast<std::size_t>(i)];

  TestResult res;
  res.test = TestKind::WilcoxonRankSum;
  res.alternative = alt;
  res.group_sizes = {m, n};
  res.group_labels = {"a", "b"};
  res.statistic = rank_sum_a - static_cast<double>(m) * (m + 1) / 2.0;  // Mann-Whitney U

  const double nn = total;
  const double mu = static_cast<double>(m) * (nn + 1.0) / 2.0;
  const double var = static_cast<double>(m) * n / 12.0 *
                     ((nn + 1.0) - ranked.tie_term / (nn * (nn - 1.0)));

  if (var <= 0.0) {  // every observation tied
    res.degenerate = true;
    res.z = 0.0;
    res.p_value = 1.0;
    res.p_method = PMethod::NormalApprox;
    return res;
  }

  const double diff = rank_sum_a - mu;
  const double shift = diff > 0.5 ? 0.5 : diff < -0.5 ? -0.5 : diff;
  res.z = (diff - shift) / std::sqrt(var);

  bool exact = false;
  const int k_small = std::min(m, n);
  const double arrangements = choose_count(total, k_small);
  switch (method) {
    case RankMethod::Auto:
      exact = arrangements <= kExactBudget;
      break;
    case RankMethod::Exact:
      if (arrangements > 1e8)
        fail_validation("exact rank-sum enumeration is infeasible for these group sizes");
      exact = true;
      break;
    case RankMethod::Approx:
      exact = false;
      break;
  }

  if (exact) {
    res.p_method = PMethod::Exact;
    const double total_rank_sum = nn * (nn + 1.0) / 2.0;
    double p_le, p_ge;
    if (m <= n) {
      SubsetTails t = subset_tails(ranked.ranks, m, rank_sum_a);
      p_le = static_cast<double>(t.le) / static_cast<double>(t.total);
      p_ge = static_cast<double>(t.ge) / static_cast<double>(t.total);
    } else {
      // enumerate the smaller side; R_a = total - R_b flips the tails
      SubsetTails t = subset_tails(ranked.ranks, n, total_rank_sum - rank_sum_a);
      p_le = static_cast<double>(t.ge) / static_cast<double>(t.total);
      p_ge = static_cast<double>(t.le) / static_cast<double>(t.total);
    }
    switch (alt) {
      case Alternative::Less: res.p_value = cap_p(p_le); break;
      case Alternative::Greater: res.p_value = cap_p(p_ge); break;
      case Alternative::TwoSided: res.p_value = two_sided_from_tails(p_le, p_ge); break;
    }
  } else {
    res.p_method = PMethod::NormalApprox;
    const double sd = std::sqrt(var);
    switch (alt) {
      case Alternative::Less:
        res.p_value = normal_cdf((diff + 0.5) / sd);
        break;
      case Alternative::Greater:
        res.p_value = 1.0 - normal_cdf((diff - 0.5) / sd);
        break;
      case Alternative::TwoSided:
        res.p_value = cap_p(2.0 * normal_cdf(-std::abs(*res.z)));
        break;
    }
  }
  return res;
}

namespace {

double kw_statistic(const std::vector<double>& group_rank_sums, const std::vector<int>& sizes,
                    double nn, double tie_denom) {
  const double grand = (nn + 1.0) / 2.0;
  double num = 0.0;
  for (std::size_t i = 0; i < group_rank_sums.size(); ++i) {
    const double mean_i = group_rank_sums[i] / sizes[i];
    num += sizes[i] * (mean_i - grand) * (mean_i - grand);
  }
  return 12.0 / (nn * (nn + 1.0)) * num / tie_denom;
}

void kw_recurse(const std::vector<double>& ranks, std::size_t pos,
                std::vector<int>& remaining, std::vector<double>& sums,
                const std::vector<int>& sizes, double nn, double tie_denom, double h_obs,
                std::uint64_t& ge, std::uint64_t& total) {
  if (pos == ranks.size()) {
    ++total;
    if (kw_statistic(sums, sizes, nn, tie_denom) >= h_obs - kTailEps) ++ge;
    return;
  }
  for (std::size_t g = 0; g < remaining.size(); ++g) {
    if (remaining[g] == 0) continue;
    --remaining[g];
    sums[g] += ranks[pos];
    kw_recurse(ranks, pos + 1, remaining, sums, sizes, nn, tie_denom, h_obs, ge, total);
    sums[g] -= ranks[pos];
    ++remaining[g];
  }
}

}  // namespace

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups, RankMethod method,
                          const std::vector<std::string>& labels) {
  if (groups.size() < 2) fail_validation("Kruskal-Wallis requires at least two groups");
  for (const auto& g : groups)
    if (g.empty()) fail_validation("Kruskal-Wallis groups must be non-empty");
  if (!labels.empty() && labels.size() != groups.size())
    fail_validation("group label count does not match group count");

  std::vector<int> sizes;
  std::vector<double> pooled;
  for (const auto& g : groups) {
    sizes.push_back(static_cast<int>(g.size()));
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const double nn = static_cast<double>(pooled.size());
  Ranked ranked = mid_ranks(pooled);

  std::vector<double> sums(groups.size(), 0.0);
  {
    std::size_t at = 0;
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (std::size_t i = 0; i < groups[g].size(); ++i) sums[g] += ranked.ranks[at++];
  }

  TestResult res;
  res.test = TestKind::KruskalWallis;
  res.alternative = Alternative::TwoSided;
  res.group_sizes = sizes;
  if (labels.empty()) {
    for (std::size_t g = 0; g < groups.size(); ++g)
      res.group_labels.push_back("g" + std::to_string(g + 1));
  } else {
    res.group_labels = labels;
  }

  const double tie_denom = 1.0 - ranked.tie_term / (nn * nn * nn - nn);
  if (tie_denom <= 0.0) {  // every observation tied
    res.degenerate = true;
    res.statistic = 0.0;
    res.p_value = 1.0;
    res.p_method = PMethod::ChiSquare;
    return res;
  }

  const double h = kw_statistic(sums, sizes, nn, tie_denom);
  res.statistic = h;

  bool exact = false;
  const double arrangements = multinomial_count(sizes);
  switch (method) {
    case RankMethod::Auto:
      exact = arrangements <= kExactBudget;
      break;
    case RankMethod::Exact:
      if (arrangements > 1e8)
        fail_validation("exact Kruskal-Wallis enumeration is infeasible for these group sizes");
      exact = true;
      break;
    case RankMethod::Approx:
      exact = false;
      break;
  }

  if (exact) {
    res.p_method = PMethod::Exact;
    std::vector<int> remaining = sizes;
    std::vector<double> acc(groups.size(), 0.0);
    std::uint64_t ge = 0, total_count = 0;
    kw_recurse(ranked.ranks, 0, remaining, acc, sizes, nn, tie_denom, h, ge, total_count);
    res.p_value = static_cast<double>(ge) / static_cast<double>(total_count);
  } else {
    res.p_method = PMethod::ChiSquare;
    res.p_value = chi_square_sf(h, static_cast<double>(groups.size() - 1));
  }
  return res;
}

std::vector<TestResult> dunn_posthoc(const std::vector<std::vector<double>>& groups,
                                     const std::vector<std::string>& labels) {
  if (groups.size() < 2) fail_validation("Dunn comparisons require at least two groups");
  for (const auto& g : groups)
    if (g.empty()) fail_validation("Dunn groups must be non-empty");
  std::vector<std::string> names = labels;
  if (names.empty())
    for (std::size_t g = 0; g < groups.size(); ++g) names.push_back("g" + std::to_string(g + 1));
  if (names.size() != groups.size())
    fail_validation("group label count does not match group count");

  std::vector<double> pooled;
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  const double nn = static_cast<double>(pooled.size());
  Ranked ranked = mid_ranks(pooled);

  std::vector<double> means(groups.size(), 0.0);
  {
    std::size_t at = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (std::size_t i = 0; i < groups[g].size(); ++i) means[g] += ranked.ranks[at++];
      means[g] /= static_cast<double>(groups[g].size());
    }
  }

  const double base_var = nn * (nn + 1.0) / 12.0 - ranked.tie_term / (12.0 * (nn - 1.0));
  const double n_pairs = static_cast<double>(groups.size() * (groups.size() - 1) / 2);

  std::vector<TestResult> out;
  for (std::size_t u = 0; u < groups.size(); ++u) {
    for (std::size_t v = u + 1; v < groups.size(); ++v) {
      TestResult res;
      res.test = TestKind::Dunn;
      res.alternative = Alternative::TwoSided;
      res.correction = Correction::Bonferroni;
      res.p_method = PMethod::NormalApprox;
      res.group_sizes = {static_cast<int>(groups[u].size()), static_cast<int>(groups[v].size())};
      res.group_labels = {names[u], names[v]};
      const double var = base_var * (1.0 / groups[u].size() + 1.0 / groups[v].size());
      if (var <= 0.0) {
        res.degenerate = true;
        res.statistic = 0.0;
        res.z = 0.0;
        res.p_value = 1.0;
      } else {
        const double z = (means[u] - means[v]) / std::sqrt(var);
        res.statistic = z;
        res.z = z;
        res.p_value = cap_p(n_pairs * 2.0 * normal_cdf(-std::abs(z)));
      }
      out.push_back(std::move(res));
    }
  }
  return out;
}

}  // namespace perfit::ranks
