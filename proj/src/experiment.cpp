#include "perfit/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>

#include "perfit/csv.hpp"
#include "perfit/pfs.hpp"
#include "perfit/response_data.hpp"

namespace perfit::expt {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& origin, const std::string& what) {
  fail_validation(origin + ": " + what);
}

PoolSpec parse_pool(const json& j, const std::string& origin, const std::string& where) {
  PoolSpec pool;
  if (j.is_string()) {
    pool.from_file = true;
    pool.path = j.get<std::string>();
    if (pool.path.empty()) bad(origin, where + ": empty path");
  } else if (j.is_object()) {
    pool.sim = sim::parse_sim_config(j, origin + " (" + where + ")");
  } else {
    bad(origin, where + " must be a CSV path or an inline simulation object");
  }
  return pool;
}

}  // namespace

ExperimentConfig parse_experiment_config_file(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    fail_validation(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) bad(path, "experiment config must be a JSON object");

  static const std::set<std::string> allowed = {
      "instrument", "humans", "agents",      "levels",
      "measures",   "seeds",  "alternative", "human_only_difficulties"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.contains(it.key())) bad(path, "unknown key \"" + it.key() + "\"");

  ExperimentConfig cfg;
  cfg.echo = json::parse(j.dump());  // ordered echo of what was read

  if (j.contains("instrument")) {
    if (!j["instrument"].is_string()) bad(path, "\"instrument\" must be a string");
    cfg.instrument = j["instrument"].get<std::string>();
  }
  if (!j.contains("humans")) bad(path, "missing \"humans\"");
  cfg.humans = parse_pool(j["humans"], path, "humans");
  if (!cfg.humans.from_file && cfg.humans.sim.n_aberrant != 0)
    bad(path, "the humans pool must simulate with n_aberrant = 0");
  if (!cfg.humans.from_file && cfg.humans.sim.n_human < 1)
    bad(path, "the humans pool must simulate at least one row");

  if (!j.contains("agents") || !j["agents"].is_array() || j["agents"].empty())
    bad(path, "\"agents\" must be a non-empty array");
  for (std::size_t i = 0; i < j["agents"].size(); ++i) {
    PoolSpec pool = parse_pool(j["agents"][i], path, "agents[" + std::to_string(i) + "]");
    if (!pool.from_file) {
      if (pool.sim.n_human != 0)
        bad(path, "agent pools must simulate with n_human = 0");
      if (pool.sim.n_aberrant < 1)
        bad(path, "agent pools must simulate at least one row");
    }
    cfg.agents.push_back(std::move(pool));
  }

  if (!j.contains("levels") || !j["levels"].is_array() || j["levels"].empty())
    bad(path, "\"levels\" must be a non-empty array");
  for (const auto& v : j["levels"]) {
    if (!v.is_number()) bad(path, "levels must be numbers");
    double level = v.get<double>();
    if (!(level > 0.0 && level < 1.0)) bad(path, "pollution levels must lie strictly in (0, 1)");
    cfg.levels.push_back(level);
  }

  if (j.contains("measures")) {
    if (!j["measures"].is_array() || j["measures"].empty())
      bad(path, "\"measures\" must be a non-empty array");
    cfg.measures.clear();
    for (const auto& v : j["measures"]) {
      if (!v.is_string()) bad(path, "measures must be strings");
      cfg.measures.push_back(parse_measure(v.get<std::string>()));
    }
  }

  if (j.contains("seeds")) {
    if (!j["seeds"].is_array()) bad(path, "\"seeds\" must be an array");
    for (const auto& v : j["seeds"]) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
        bad(path, "seeds must be non-negative integers");
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }

  if (j.contains("alternative")) {
    if (!j["alternative"].is_string()) bad(path, "\"alternative\" must be a string");
    cfg.alternative = ranks::parse_alternative(j["alternative"].get<std::string>());
  }

  if (j.contains("human_only_difficulties")) {
    if (!j["human_only_difficulties"].is_boolean())
      bad(path, "\"human_only_difficulties\" must be a boolean");
    cfg.human_only_difficulties = j["human_only_difficulties"].get<bool>();
  }
  return cfg;
}

namespace {

ResponseMatrix load_human_pool(const PoolSpec& spec, std::uint64_t seed) {
  if (spec.from_file) {
    ResponseMatrix m = io::parse_scored_csv(spec.path);
    for (const auto& r : m.respondents())
      if (r.source.is_agent())
        fail_validation(spec.path + ": humans pool contains agent row \"" + r.id + "\"");
    return m;
  }
  return sim::sample_population(spec.sim, seed);
}

ResponseMatrix load_agent_pool(const PoolSpec& spec, const sim::IrtItemBank* shared_bank,
                               const ResponseMatrix* human_ref, std::uint64_t seed,
                               std::string& label_out) {
  if (spec.from_file) {
    ResponseMatrix m = io::parse_scored_csv(spec.path);
    std::string label;
    for (const auto& r : m.respondents()) {
      if (!r.source.is_agent())
        fail_validation(spec.path + ": agent pool contains a human row (\"" + r.id + "\")");
      if (label.empty())
        label = r.source.name;
      else if (label != r.source.name)
        fail_validation(spec.path + ": agent pool mixes sources \"" + label + "\" and \"" +
                        r.source.name + "\"");
    }
    label_out = label;
    return m;
  }

  sim::SimConfig cfg = spec.sim;
  if (cfg.aberrance.kind == sim::AberranceConfig::Kind::DifficultyBlind &&
      cfg.aberrance.match_human_mean) {
    if (human_ref == nullptr)
      fail_validation("matched difficulty-blind agents need a human pool to match");
    cfg.aberrance.accuracy =
        std::clamp(sim::mean_proportion_correct(*human_ref), 1e-3, 1.0 - 1e-3);
    cfg.aberrance.match_human_mean = false;
  }
  label_out = cfg.agent_label;
  if (shared_bank != nullptr && shared_bank->n_items() == cfg.j)
    return sim::sample_population(0, cfg.n_aberrant, *shared_bank, cfg, seed);
  sim::IrtItemBank bank = sim::make_item_bank(cfg, rng::derive_seed(seed, rng::kStreamBank, 0));
  return sim::sample_population(0, cfg.n_aberrant, bank, cfg, seed);
}

}  // namespace

Pools build_pools(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  std::optional<sim::IrtItemBank> human_bank;
  ResponseMatrix humans = [&] {
    if (cfg.humans.from_file) return load_human_pool(cfg.humans, 0);
    std::uint64_t pool_seed = rng::derive_seed(master_seed, rng::kStreamRun, 0);
    human_bank = sim::make_item_bank(cfg.humans.sim,
                                     rng::derive_seed(pool_seed, rng::kStreamBank, 0));
    return sim::sample_population(cfg.humans.sim.n_human, 0, *human_bank, cfg.humans.sim,
                                  pool_seed);
  }();

  Pools pools{std::move(humans), {}};
  std::set<std::string> labels;
  for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
    std::string label;
    std::uint64_t pool_seed = rng::derive_seed(master_seed, rng::kStreamRun, i + 1);
    ResponseMatrix m = load_agent_pool(cfg.agents[i], human_bank ? &*human_bank : nullptr,
                                       &pools.humans, pool_seed, label);
    if (!labels.insert(label).second)
      fail_validation("two agent pools share the label \"" + label +
                      "\"; give each a distinct agent_label or source name");
    if (m.items() != pools.humans.items())
      fail_validation("agent pool \"" + label + "\" item ids do not match the human pool");
    pools.agents.emplace_back(std::move(label), std::move(m));
  }
  return pools;
}

ResponseMatrix mix_pollution(const ResponseMatrix& humans, const ResponseMatrix& agents,
                             double level, std::uint64_t seed) {
  if (!(level > 0.0 && level < 1.0))
    fail_validation("pollution level must lie strictly in (0, 1)");
  if (humans.items() != agents.items())
    fail_validation("human and agent pools must share identical item ids");

  const auto n_agent = static_cast<double>(agents.n_respondents());
  const auto target = static_cast<std::size_t>(std::llround(n_agent * (1.0 - level) / level));
  if (target == 0)
    fail_validation("pollution level " + std::to_string(level) + " leaves no human rows");
  if (target > humans.n_respondents())
    fail_validation("human pool too small: need " + std::to_string(target) + " rows, have " +
                    std::to_string(humans.n_respondents()));

  rng::Rng rng(seed);
  std::vector<std::size_t> chosen =
      rng::sample_without_replacement(humans.n_respondents(), target, rng);

  std::vector<Respondent> respondents;
  respondents.reserve(target + agents.n_respondents());
  std::vector<std::uint8_t> cells;
  cells.reserve((target + agents.n_respondents()) * humans.n_items());
  for (std::size_t i : chosen) {
    respondents.push_back(humans.respondents()[i]);
    auto row = humans.row(i);
    cells.insert(cells.end(), row.begin(), row.end());
  }
  for (std::size_t i = 0; i < agents.n_respondents(); ++i) {
    respondents.push_back(agents.respondents()[i]);
    auto row = agents.row(i);
    cells.insert(cells.end(), row.begin(), row.end());
  }
  return {std::move(respondents), humans.items(), std::move(cells)};
}

namespace {

GroupStats group_stats(const std::string& label, const std::vector<double>& values) {
  GroupStats s;
  s.label = label;
  s.n_valid = static_cast<int>(values.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (values.empty()) {
    s.mean = s.sd = s.median = nan;
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) {
    s.sd = nan;
  } else {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (static_cast<double>(values.size()) - 1.0));
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  s.median = sorted.size() % 2 == 1
                 ? sorted[sorted.size() / 2]
                 : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
  return s;
}

// Filter, estimate difficulties (optionally from the human rows alone), and
// score person fit. Columns a human-only estimate cannot support are dropped
// alongside the degenerate ones.
struct ScoredMixture {
  std::vector<pfs::PfsRecord> records;
  std::vector<std::string> dropped_items;
};

ScoredMixture score_mixture(const ResponseMatrix& mixed, bool human_only_difficulties) {
  FilterResult filtered = filter_degenerate_items(mixed);
  ScoredMixture out;
  out.dropped_items = filtered.dropped_items;

  if (!human_only_difficulties) {
    out.records = pfs::compute_all(filtered.matrix);
    return out;
  }

  std::vector<std::size_t> human_rows;
  for (std::size_t i = 0; i < filtered.matrix.n_respondents(); ++i)
    if (!filtered.matrix.respondents()[i].source.is_agent()) human_rows.push_back(i);
  if (human_rows.empty())
    fail_untestable("human-only difficulty estimation needs at least one human row");

  std::vector<bool> drop(filtered.matrix.n_items(), false);
  std::vector<double> p;
  bool any_drop = false;
  for (std::size_t col = 0; col < filtered.matrix.n_items(); ++col) {
    std::size_t sum = 0;
    for (std::size_t i : human_rows) sum += filtered.matrix.cell(i, col);
    if (sum == 0 || sum == human_rows.size()) {
      drop[col] = true;
      any_drop = true;
      out.dropped_items.push_back(filtered.matrix.items()[col]);
    } else {
      p.push_back(static_cast<double>(sum) / static_cast<double>(human_rows.size()));
    }
  }
  ResponseMatrix kept = any_drop ? drop_columns(filtered.matrix, drop) : filtered.matrix;
  out.records = pfs::compute_all(kept, pfs::item_stats_from_p(std::move(p)));
  return out;
}

std::vector<double> valid_values(const std::vector<pfs::PfsRecord>& records, Measure m,
                                 bool agents, const std::string& label = {}) {
  std::vector<double> out;
  for (const auto& rec : records) {
    if (!rec.valid) continue;
    if (rec.source.is_agent() != agents) continue;
    if (agents && !label.empty() && rec.source.name != label) continue;
    if (auto v = pfs::measure_value(rec, m)) out.push_back(*v);
  }
  return out;
}

std::uint64_t mix_seed_for(std::uint64_t run_seed, double level) {
  return rng::derive_seed(run_seed, rng::kStreamMix, std::bit_cast<std::uint64_t>(level));
}

}  // namespace

TwoGroupOutcome run_two_group(const ExperimentDesign& design, const ResponseMatrix& humans,
                              const ResponseMatrix& agents) {
  TwoGroupOutcome out;
  out.seed = design.seed;
  out.level = design.pollution_level;

  ResponseMatrix mixed = mix_pollution(humans, agents, design.pollution_level,
                                       mix_seed_for(design.seed, design.pollution_level));
  out.n_agent = static_cast<int>(agents.n_respondents());
  out.n_human = static_cast<int>(mixed.n_respondents()) - out.n_agent;

  ScoredMixture scored = score_mixture(mixed, design.human_only_difficulties);
  out.dropped_items = scored.dropped_items;

  for (Measure m : design.measures) {
    TwoGroupMeasureOutcome mo;
    mo.measure = m;
    mo.human_values = valid_values(scored.records, m, false);
    mo.agent_values = valid_values(scored.records, m, true);
    mo.human_stats = group_stats("human", mo.human_values);
    mo.agent_stats = group_stats("agent", mo.agent_values);
    if (mo.human_values.empty() || mo.agent_values.empty()) {
      mo.untestable = true;
      mo.reason = mo.human_values.empty() && mo.agent_values.empty()
                      ? "no valid rows in either group"
                  : mo.human_values.empty() ? "no valid human rows"
                                            : "no valid agent rows";
    } else {
      ranks::TestResult t =
          ranks::wilcoxon_rank_sum(mo.human_values, mo.agent_values, design.alternative);
      t.group_labels = {"human", "agent"};
      mo.test = std::move(t);
    }
    out.measures.push_back(std::move(mo));
  }
  return out;
}

DunnGate decide_dunn(double kw_p) {
  if (kw_p < 0.05) return DunnGate::Emit;
  if (kw_p < 0.10) return DunnGate::EmitExploratory;
  return DunnGate::Skip;
}

MultiGroupOutcome run_multi_agent(const ResponseMatrix& humans,
                                  const std::vector<std::pair<std::string, ResponseMatrix>>& agents,
                                  double level, std::uint64_t seed,
                                  const ExperimentDesign& design) {
  if (agents.size() < 2)
    fail_validation("multi-agent comparison needs at least two agent groups");

  // one combined agent block keeps the pollution arithmetic shared
  std::vector<Respondent> agent_respondents;
  std::vector<std::uint8_t> agent_cells;
  const auto& items = agents.front().second.items();
  for (const auto& [label, m] : agents) {
    if (m.items() != items)
      fail_validation("agent pools must share identical item ids");
    for (std::size_t i = 0; i < m.n_respondents(); ++i) {
      agent_respondents.push_back(m.respondents()[i]);
      auto row = m.row(i);
      agent_cells.insert(agent_cells.end(), row.begin(), row.end());
    }
  }
  ResponseMatrix combined(std::move(agent_respondents), items, std::move(agent_cells));

  MultiGroupOutcome out;
  out.seed = seed;
  out.level = level;

  ResponseMatrix mixed = mix_pollution(humans, combined, level, mix_seed_for(seed, level));
  out.n_human = static_cast<int>(mixed.n_respondents() - combined.n_respondents());
  for (const auto& [label, m] : agents)
    out.agent_counts.emplace_back(label, static_cast<int>(m.n_respondents()));

  ScoredMixture scored = score_mixture(mixed, design.human_only_difficulties);
  out.dropped_items = scored.dropped_items;

  for (Measure m : design.measures) {
    MultiGroupMeasureOutcome mo;
    mo.measure = m;
    mo.values.emplace_back("human", valid_values(scored.records, m, false));
    std::vector<std::vector<double>> agent_groups;
    std::vector<std::string> agent_labels;
    for (const auto& [label, matrix] : agents) {
      agent_labels.push_back(label);
      agent_groups.push_back(valid_values(scored.records, m, true, label));
      mo.values.emplace_back(label, agent_groups.back());
    }
    for (const auto& [label, values] : mo.values) mo.groups.push_back(group_stats(label, values));

    std::vector<std::string> empty_groups;
    for (std::size_t g = 0; g < agent_groups.size(); ++g)
      if (agent_groups[g].empty()) empty_groups.push_back(agent_labels[g]);
    if (!empty_groups.empty()) {
      mo.untestable = true;
      mo.reason = "no valid rows for agent group";
      for (const auto& label : empty_groups) mo.reason += " \"" + label + "\"";
    } else {
      mo.kw = ranks::kruskal_wallis(agent_groups, ranks::RankMethod::Auto, agent_labels);
      switch (decide_dunn(mo.kw->p_value)) {
        case DunnGate::Skip:
          break;
        case DunnGate::EmitExploratory:
          mo.dunn_exploratory = true;
          [[fallthrough]];
        case DunnGate::Emit:
          mo.dunn = ranks::dunn_posthoc(agent_groups, agent_labels);
          break;
      }
    }
    out.measures.push_back(std::move(mo));
  }
  return out;
}

std::vector<SensitivityCell> run_sensitivity(const ExperimentDesign& base,
                                             const std::vector<double>& levels,
                                             const std::vector<std::uint64_t>& seeds,
                                             const ResponseMatrix& humans,
                                             const ResponseMatrix& agents) {
  if (levels.empty()) fail_validation("sensitivity sweep needs at least one level");
  if (seeds.empty()) fail_validation("sensitivity sweep needs at least one seed");

  std::vector<SensitivityCell> cells(levels.size());
  for (std::size_t li = 0; li < levels.size(); ++li) {
    cells[li].level = levels[li];
    cells[li].runs.resize(seeds.size());
  }

  const auto total = static_cast<std::ptrdiff_t>(levels.size() * seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t flat = 0; flat < total; ++flat) {
    const std::size_t li = static_cast<std::size_t>(flat) / seeds.size();
    const std::size_t si = static_cast<std::size_t>(flat) % seeds.size();
    ExperimentDesign design = base;
    design.pollution_level = levels[li];
    design.seed = seeds[si];
    cells[li].runs[si] = run_two_group(design, humans, agents);
  }
  return cells;
}

double median(std::vector<double> v) {
  if (v.empty()) fail_validation("median of an empty sample");
  std::sort(v.begin(), v.end());
  return v.size() % 2 == 1 ? v[v.size() / 2]
                           : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

}  // namespace perfit::expt
