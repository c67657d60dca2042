#include "perfit/pfs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "perfit/csv.hpp"

namespace perfit::pfs {

namespace {

// Logits in easiest-first order. All W-type sums below walk this vector
// left to right so that identical index sets give identical doubles; the
// perfect and reversed patterns then hit the 0/1 anchors exactly.
std::vector<double> sorted_logits(const ItemStats& stats) {
  std::vector<double> c(stats.order.size());
  for (std::size_t k = 0; k < stats.order.size(); ++k) c[k] = stats.logit[stats.order[k]];
  return c;
}

double w_of_pattern(const std::vector<double>& c_ef, std::span<const std::uint8_t> x_ef) {
  double w = 0.0;
  for (std::size_t k = 0; k < c_ef.size(); ++k)
    if (x_ef[k]) w += c_ef[k];
  return w;
}

double w_first(const std::vector<double>& c_ef, int r) {
  double w = 0.0;
  for (int k = 0; k < r; ++k) w += c_ef[static_cast<std::size_t>(k)];
  return w;
}

double w_last(const std::vector<double>& c_ef, int r) {
  double w = 0.0;
  const int j = static_cast<int>(c_ef.size());
  for (int k = j - r; k < j; ++k) w += c_ef[static_cast<std::size_t>(k)];
  return w;
}

std::optional<double> u3_impl(const std::vector<double>& c_ef,
                              std::span<const std::uint8_t> x_ef, int r) {
  const int j = static_cast<int>(c_ef.size());
  if (r <= 0 || r >= j) return std::nullopt;
  double w_max = w_first(c_ef, r);
  double w_min = w_last(c_ef, r);
  if (w_max == w_min) return std::nullopt;
  double w = w_of_pattern(c_ef, x_ef);
  return (w_max - w) / (w_max - w_min);
}

NullMoments null_moments_impl(const std::vector<double>& c_ef, int r) {
  const int j = static_cast<int>(c_ef.size());
  double mean_c = 0.0;
  for (double v : c_ef) mean_c += v;
  mean_c /= j;
  double var_c = 0.0;
  for (double v : c_ef) var_c += (v - mean_c) * (v - mean_c);
  var_c /= j;

  // sampling r of j logits without replacement
  double w_mean = r * mean_c;
  double w_var = static_cast<double>(r) * (j - r) / (j - 1.0) * var_c;

  double w_max = w_first(c_ef, r);
  double w_min = w_last(c_ef, r);
  double den = w_max - w_min;
  if (den == 0.0) return {0.0, 0.0};
  return {(w_max - w_mean) / den, w_var / (den * den)};
}

}  // namespace

long guttman_errors(std::span<const std::uint8_t> x_easiest_first) {
  long zeros_seen = 0;
  long g = 0;
  for (std::uint8_t v : x_easiest_first) {
    if (v)
      g += zeros_seen;
    else
      ++zeros_seen;
  }
  return g;
}

std::optional<double> g_star(long g, int r, int j) {
  if (r <= 0 || r >= j) return std::nullopt;
  return static_cast<double>(g) / (static_cast<double>(r) * (j - r));
}

std::vector<std::uint8_t> reorder_easiest_first(std::span<const std::uint8_t> row,
                                                const ItemStats& stats) {
  std::vector<std::uint8_t> x(row.size());
  for (std::size_t k = 0; k < stats.order.size(); ++k) x[k] = row[stats.order[k]];
  return x;
}

std::optional<double> u3(std::span<const std::uint8_t> x_easiest_first, const ItemStats& stats) {
  int r = 0;
  for (std::uint8_t v : x_easiest_first) r += v;
  return u3_impl(sorted_logits(stats), x_easiest_first, r);
}

NullMoments null_moments(const ItemStats& stats, int r) {
  const int j = static_cast<int>(stats.n_items());
  if (r <= 0 || r >= j)
    fail_validation("null moments require 0 < r < J, got r = " + std::to_string(r));
  return null_moments_impl(sorted_logits(stats), r);
}

std::optional<double> zu3(double u3_value, const NullMoments& moments) {
  if (!(moments.u3_var > 0.0)) return std::nullopt;
  return (u3_value - moments.u3_mean) / std::sqrt(moments.u3_var);
}

std::vector<PfsRecord> compute_all(const ResponseMatrix& m, const ItemStats& stats,
                                   Execution exec) {
  if (stats.n_items() != m.n_items())
    fail_validation("item statistics do not match the matrix width");
  const int j = static_cast<int>(m.n_items());
  const std::vector<double> c_ef = sorted_logits(stats);

  // exact conditional moments per attainable score
  std::vector<NullMoments> moments(static_cast<std::size_t>(j) + 1);
  for (int r = 1; r < j; ++r) moments[static_cast<std::size_t>(r)] = null_moments_impl(c_ef, r);

  const auto n = static_cast<std::ptrdiff_t>(m.n_respondents());
  std::vector<PfsRecord> records(m.n_respondents());

  auto compute_row = [&](std::ptrdiff_t i) {
    const auto idx = static_cast<std::size_t>(i);
    PfsRecord& rec = records[idx];
    rec.respondent_id = m.respondents()[idx].id;
    rec.source = m.respondents()[idx].source;

    std::vector<std::uint8_t> x_ef = reorder_easiest_first(m.row(idx), stats);
    int r = 0;
    for (std::uint8_t v : x_ef) r += v;
    rec.r = r;
    rec.g = guttman_errors(x_ef);
    rec.g_star = g_star(rec.g, r, j);
    rec.u3 = u3_impl(c_ef, x_ef, r);
    if (rec.u3 && r > 0 && r < j) rec.zu3 = zu3(*rec.u3, moments[static_cast<std::size_t>(r)]);
    rec.valid = rec.u3.has_value() && rec.zu3.has_value();
  };

  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) compute_row(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) compute_row(i);
  }
  return records;
}

std::vector<PfsRecord> compute_all(const ResponseMatrix& m, Execution exec) {
  return compute_all(m, item_stats(m), exec);
}

std::optional<double> measure_value(const PfsRecord& rec, Measure m) {
  switch (m) {
    case Measure::G: return static_cast<double>(rec.g);
    case Measure::GStar: return rec.g_star;
    case Measure::U3: return rec.u3;
    case Measure::ZU3: return rec.zu3;
  }
  return std::nullopt;
}

std::vector<std::string> flag_aberrant(const std::vector<PfsRecord>& records, Measure measure,
                                       double threshold) {
  std::vector<std::pair<double, std::size_t>> hits;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].valid) continue;
    auto v = measure_value(records[i], measure);
    if (v && *v > threshold) hits.emplace_back(*v, i);
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> ids;
  ids.reserve(hits.size());
  for (const auto& [value, i] : hits) ids.push_back(records[i].respondent_id);
  return ids;
}

namespace {

std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string to_pfs_csv(const std::vector<PfsRecord>& records) {
  std::string out = "respondent_id,source,r,G,G_star,U3,ZU3,valid\n";
  for (const auto& rec : records) {
    out += io::csv_field(rec.respondent_id);
    out += ',';
    out += io::csv_field(rec.source.label());
    out += ',';
    out += std::to_string(rec.r);
    out += ',';
    out += std::to_string(rec.g);
    for (const auto& v : {rec.g_star, rec.u3, rec.zu3}) {
      out += ',';
      if (v) out += format_g6(*v);
    }
    out += ',';
    out += rec.valid ? '1' : '0';
    out += '\n';
  }
  return out;
}

}  // namespace perfit::pfs
