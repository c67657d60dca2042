#include "perfit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "perfit/csv.hpp"
#include "perfit/density.hpp"
#include "perfit/version.hpp"

namespace perfit::expt {

using nlohmann::ordered_json;

namespace {

const char* test_kind_token(ranks::TestKind k) {
  switch (k) {
    case ranks::TestKind::WilcoxonRankSum: return "wilcoxon_rank_sum";
    case ranks::TestKind::KruskalWallis: return "kruskal_wallis";
    case ranks::TestKind::Dunn: return "dunn";
  }
  return "wilcoxon_rank_sum";
}

const char* correction_token(ranks::Correction c) {
  return c == ranks::Correction::Bonferroni ? "bonferroni" : "none";
}

const char* p_method_token(ranks::PMethod m) {
  switch (m) {
    case ranks::PMethod::Exact: return "exact";
    case ranks::PMethod::NormalApprox: return "normal_approx";
    case ranks::PMethod::ChiSquare: return "chi_square";
  }
  return "exact";
}

ordered_json json_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

ordered_json finite_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered_json group_stats_json(const GroupStats& s) {
  ordered_json j;
  j["label"] = s.label;
  j["n_valid"] = s.n_valid;
  j["mean"] = finite_or_null(s.mean);
  j["sd"] = finite_or_null(s.sd);
  j["median"] = finite_or_null(s.median);
  return j;
}

ordered_json header_json(const EmitContext& ctx) {
  ordered_json j;
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["pipeline"] = ctx.pipeline;
  j["instrument"] = ctx.instrument;
  j["rng"] = {{"name", rng::kAlgorithmName}, {"version", rng::kAlgorithmVersion}};
  return j;
}

void write_json(const EmitContext& ctx, const std::string& filename, const ordered_json& j) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) fail_io("cannot create output directory " + ctx.out_dir);
  io::write_file_atomic((fs::path(ctx.out_dir) / filename).string(), j.dump(2) + "\n");
}

void write_text(const EmitContext& ctx, const std::string& filename, const std::string& text) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) fail_io("cannot create output directory " + ctx.out_dir);
  io::write_file_atomic((fs::path(ctx.out_dir) / filename).string(), text);
}

std::string file_stem(const EmitContext& ctx, Measure m, double level) {
  return ctx.pipeline + "_" + measure_token(m) + "_" + level_token(level);
}

ordered_json aggregate_json(const std::vector<double>& p_values, std::size_t n_runs) {
  ordered_json agg;
  agg["n_runs"] = n_runs;
  agg["n_testable"] = p_values.size();
  if (p_values.empty()) {
    agg["median_p"] = nullptr;
    agg["median_neg_log10_p"] = nullptr;
  } else {
    const double med = median(p_values);
    agg["median_p"] = med;
    agg["median_neg_log10_p"] = med > 0.0 ? ordered_json(-std::log10(med)) : ordered_json(nullptr);
  }
  return agg;
}

}  // namespace

std::string level_token(double level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", level);
  return buf;
}

ordered_json test_result_json(const ranks::TestResult& t, Measure measure,
                              const std::string& instrument) {
  ordered_json j;
  j["test"] = test_kind_token(t.test);
  j["measure"] = measure_token(measure);
  j["instrument"] = instrument;
  j["statistic"] = t.statistic;
  j["z"] = json_or_null(t.z);
  j["p_value"] = t.p_value;
  j["alternative"] = ranks::alternative_token(t.alternative);
  j["group_sizes"] = t.group_sizes;
  j["group_labels"] = t.group_labels;
  j["correction"] = correction_token(t.correction);
  j["degenerate"] = t.degenerate;
  j["p_method"] = p_method_token(t.p_method);
  return j;
}

namespace {

ordered_json two_group_run_json(const TwoGroupOutcome& run, const TwoGroupMeasureOutcome& mo,
                                const EmitContext& ctx) {
  ordered_json r;
  r["seed"] = run.seed;
  r["n_human"] = run.n_human;
  r["n_agent"] = run.n_agent;
  r["dropped_items"] = run.dropped_items;
  r["untestable"] = mo.untestable;
  if (mo.untestable) r["reason"] = mo.reason;
  r["test"] = mo.test ? test_result_json(*mo.test, mo.measure, ctx.instrument)
                      : ordered_json(nullptr);
  r["groups"] = ordered_json::array({group_stats_json(mo.human_stats),
                                     group_stats_json(mo.agent_stats)});
  return r;
}

// Per-measure report plus density CSV for one level of two-group runs.
// Returns the aggregate block for the summary.
ordered_json emit_two_group_level(const EmitContext& ctx, double level,
                                  const std::vector<TwoGroupOutcome>& runs, Measure m,
                                  std::vector<ordered_json>& summary_tests) {
  ordered_json doc = header_json(ctx);
  doc["measure"] = measure_token(m);
  doc["level"] = level;
  doc["config"] = ctx.config_echo;

  std::vector<double> p_values;
  std::vector<double> human_pool, agent_pool;
  ordered_json run_array = ordered_json::array();
  for (const TwoGroupOutcome& run : runs) {
    const TwoGroupMeasureOutcome* mo = nullptr;
    for (const auto& cand : run.measures)
      if (cand.measure == m) mo = &cand;
    if (mo == nullptr) continue;
    run_array.push_back(two_group_run_json(run, *mo, ctx));
    if (mo->test) {
      p_values.push_back(mo->test->p_value);
      ordered_json t = test_result_json(*mo->test, m, ctx.instrument);
      t["level"] = level;
      t["seed"] = run.seed;
      summary_tests.push_back(std::move(t));
    }
    human_pool.insert(human_pool.end(), mo->human_values.begin(), mo->human_values.end());
    agent_pool.insert(agent_pool.end(), mo->agent_values.begin(), mo->agent_values.end());
  }
  doc["runs"] = std::move(run_array);
  ordered_json agg = aggregate_json(p_values, runs.size());
  doc["aggregate"] = agg;

  const std::string stem = file_stem(ctx, m, level);
  doc["density_csv"] = stem + ".csv";
  write_json(ctx, stem + ".json", doc);
  write_text(ctx, stem + ".csv",
             density_csv(m, {{"human", human_pool}, {"agent", agent_pool}}));

  ordered_json entry;
  entry["level"] = level;
  entry["measure"] = measure_token(m);
  for (auto& [k, v] : agg.items()) entry[k] = v;
  return entry;
}

std::vector<Measure> measures_of(const std::vector<TwoGroupOutcome>& runs) {
  std::vector<Measure> out;
  if (runs.empty()) return out;
  for (const auto& mo : runs.front().measures) out.push_back(mo.measure);
  return out;
}

}  // namespace

void emit_compare(const EmitContext& ctx, double level,
                  const std::vector<TwoGroupOutcome>& runs) {
  std::vector<ordered_json> summary_tests;
  ordered_json aggregates = ordered_json::array();
  for (Measure m : measures_of(runs))
    aggregates.push_back(emit_two_group_level(ctx, level, runs, m, summary_tests));

  ordered_json summary = header_json(ctx);
  summary["levels"] = ordered_json::array({level});
  summary["config"] = ctx.config_echo;
  summary["tests"] = summary_tests;
  summary["aggregates"] = std::move(aggregates);
  write_json(ctx, ctx.pipeline + "_summary.json", summary);
}

void emit_multigroup(const EmitContext& ctx, double level,
                     const std::vector<MultiGroupOutcome>& runs) {
  std::vector<ordered_json> summary_tests;
  ordered_json aggregates = ordered_json::array();

  std::vector<Measure> measures;
  if (!runs.empty())
    for (const auto& mo : runs.front().measures) measures.push_back(mo.measure);

  for (Measure m : measures) {
    ordered_json doc = header_json(ctx);
    doc["measure"] = measure_token(m);
    doc["level"] = level;
    doc["config"] = ctx.config_echo;

    std::vector<double> p_values;
    std::vector<std::pair<std::string, std::vector<double>>> pooled;
    ordered_json run_array = ordered_json::array();
    for (const MultiGroupOutcome& run : runs) {
      const MultiGroupMeasureOutcome* mo = nullptr;
      for (const auto& cand : run.measures)
        if (cand.measure == m) mo = &cand;
      if (mo == nullptr) continue;

      ordered_json r;
      r["seed"] = run.seed;
      r["n_human"] = run.n_human;
      ordered_json counts = ordered_json::object();
      for (const auto& [label, count] : run.agent_counts) counts[label] = count;
      r["n_agents"] = std::move(counts);
      r["dropped_items"] = run.dropped_items;
      r["untestable"] = mo->untestable;
      if (mo->untestable) r["reason"] = mo->reason;
      r["kruskal_wallis"] = mo->kw ? test_result_json(*mo->kw, m, ctx.instrument)
                                   : ordered_json(nullptr);
      ordered_json dunn_array = ordered_json::array();
      for (const auto& d : mo->dunn) dunn_array.push_back(test_result_json(d, m, ctx.instrument));
      r["dunn"] = std::move(dunn_array);
      r["dunn_exploratory"] = mo->dunn_exploratory;
      ordered_json groups = ordered_json::array();
      for (const auto& g : mo->groups) groups.push_back(group_stats_json(g));
      r["groups"] = std::move(groups);
      run_array.push_back(std::move(r));

      if (mo->kw) {
        p_values.push_back(mo->kw->p_value);
        ordered_json t = test_result_json(*mo->kw, m, ctx.instrument);
        t["level"] = level;
        t["seed"] = run.seed;
        summary_tests.push_back(std::move(t));
        for (const auto& d : mo->dunn) {
          ordered_json dt = test_result_json(d, m, ctx.instrument);
          dt["level"] = level;
          dt["seed"] = run.seed;
          dt["exploratory"] = mo->dunn_exploratory;
          summary_tests.push_back(std::move(dt));
        }
      }
      for (const auto& [label, values] : mo->values) {
        auto it = std::find_if(pooled.begin(), pooled.end(),
                               [&](const auto& pr) { return pr.first == label; });
        if (it == pooled.end())
          pooled.emplace_back(label, values);
        else
          it->second.insert(it->second.end(), values.begin(), values.end());
      }
    }
    doc["runs"] = std::move(run_array);
    ordered_json agg = aggregate_json(p_values, runs.size());
    doc["aggregate"] = agg;

    const std::string stem = file_stem(ctx, m, level);
    doc["density_csv"] = stem + ".csv";
    write_json(ctx, stem + ".json", doc);
    write_text(ctx, stem + ".csv", density_csv(m, pooled));

    ordered_json entry;
    entry["level"] = level;
    entry["measure"] = measure_token(m);
    for (auto& [k, v] : agg.items()) entry[k] = v;
    aggregates.push_back(std::move(entry));
  }

  ordered_json summary = header_json(ctx);
  summary["levels"] = ordered_json::array({level});
  summary["config"] = ctx.config_echo;
  summary["tests"] = summary_tests;
  summary["aggregates"] = std::move(aggregates);
  write_json(ctx, ctx.pipeline + "_summary.json", summary);
}

void emit_sensitivity(const EmitContext& ctx, const std::vector<SensitivityCell>& cells) {
  std::vector<ordered_json> summary_tests;
  ordered_json aggregates = ordered_json::array();

  for (const SensitivityCell& cell : cells)
    for (Measure m : measures_of(cell.runs))
      aggregates.push_back(emit_two_group_level(ctx, cell.level, cell.runs, m, summary_tests));

  // per-measure trend across levels: median p plus pooled group means
  // and sds at each level
  ordered_json trends = ordered_json::object();
  if (!cells.empty()) {
    for (Measure m : measures_of(cells.front().runs)) {
      ordered_json rows = ordered_json::array();
      for (const SensitivityCell& cell : cells) {
        std::vector<double> p_values, human_pool, agent_pool;
        int n_human = 0;
        for (const TwoGroupOutcome& run : cell.runs) {
          n_human = run.n_human;
          for (const auto& mo : run.measures) {
            if (mo.measure != m) continue;
            if (mo.test) p_values.push_back(mo.test->p_value);
            human_pool.insert(human_pool.end(), mo.human_values.begin(), mo.human_values.end());
            agent_pool.insert(agent_pool.end(), mo.agent_values.begin(), mo.agent_values.end());
          }
        }
        ordered_json row;
        row["level"] = cell.level;
        row["n_human"] = n_human;
        row["n_runs"] = cell.runs.size();
        if (p_values.empty()) {
          row["median_p"] = nullptr;
        } else {
          row["median_p"] = median(p_values);
        }
        auto pool_stats = [](const std::vector<double>& pool) -> ordered_json {
          if (pool.empty()) return {{"mean", nullptr}, {"sd", nullptr}};
          double mean = 0.0;
          for (double v : pool) mean += v;
          mean /= static_cast<double>(pool.size());
          ordered_json s;
          s["mean"] = mean;
          if (pool.size() < 2) {
            s["sd"] = nullptr;
          } else {
            double ss = 0.0;
            for (double v : pool) ss += (v - mean) * (v - mean);
            s["sd"] = std::sqrt(ss / (static_cast<double>(pool.size()) - 1.0));
          }
          return s;
        };
        row["human"] = pool_stats(human_pool);
        row["agent"] = pool_stats(agent_pool);
        rows.push_back(std::move(row));
      }
      trends[measure_token(m)] = std::move(rows);
    }
  }

  ordered_json summary = header_json(ctx);
  ordered_json levels = ordered_json::array();
  for (const auto& cell : cells) levels.push_back(cell.level);
  summary["levels"] = std::move(levels);
  summary["config"] = ctx.config_echo;
  summary["tests"] = summary_tests;
  summary["aggregates"] = std::move(aggregates);
  summary["trend"] = std::move(trends);
  write_json(ctx, ctx.pipeline + "_summary.json", summary);
}

}  // namespace perfit::expt
