#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "perfit/rank_tests.hpp"
#include "perfit/simulate.hpp"
#include "perfit/types.hpp"

namespace perfit::expt {

// A respondent pool is either a scored CSV on disk or an inline simulation.
struct PoolSpec {
  bool from_file = false;
  std::string path;
  sim::SimConfig sim;
};

struct ExperimentConfig {
  std::string instrument = "default";
  PoolSpec humans;
  std::vector<PoolSpec> agents;
  std::vector<double> levels;
  std::vector<Measure> measures = all_measures();
  std::vector<std::uint64_t> seeds;
  ranks::Alternative alternative = ranks::Alternative::Less;
  bool human_only_difficulties = false;
  nlohmann::ordered_json echo;  // raw config for the report audit trail
};

ExperimentConfig parse_experiment_config_file(const std::string& path);

struct Pools {
  ResponseMatrix humans;
  std::vector<std::pair<std::string, ResponseMatrix>> agents;  // label, rows
};

// Load or simulate both pools. Simulated agents share the simulated humans'
// item bank; matched difficulty-blind accuracy is read off the human rows.
Pools build_pools(const ExperimentConfig& cfg, std::uint64_t master_seed);

// All agent rows plus round(n_agent (1 - level) / level) humans sampled
// without replacement. Errors when the human pool is too small; never
// drops an agent row or duplicates a human.
ResponseMatrix mix_pollution(const ResponseMatrix& humans, const ResponseMatrix& agents,
                             double level, std::uint64_t seed);

struct ExperimentDesign {
  double pollution_level = 0.05;
  std::vector<Measure> measures = all_measures();
  ranks::Alternative alternative = ranks::Alternative::Less;
  std::uint64_t seed = 0;
  bool human_only_difficulties = false;
};

struct GroupStats {
  std::string label;
  int n_valid = 0;
  double mean = 0.0, sd = 0.0, median = 0.0;  // NaN when n_valid = 0
};

struct TwoGroupMeasureOutcome {
  Measure measure = Measure::G;
  bool untestable = false;
  std::string reason;
  std::optional<ranks::TestResult> test;
  GroupStats human_stats, agent_stats;
  std::vector<double> human_values, agent_values;  // valid records only
};

struct TwoGroupOutcome {
  std::uint64_t seed = 0;
  double level = 0.0;
  int n_human = 0, n_agent = 0;
  std::vector<std::string> dropped_items;
  std::vector<TwoGroupMeasureOutcome> measures;
};

// Mix, filter, score person fit, then one human-vs-agent rank-sum test per
// measure. Group a is always the humans.
TwoGroupOutcome run_two_group(const ExperimentDesign& design, const ResponseMatrix& humans,
                              const ResponseMatrix& agents);

enum class DunnGate { Skip, Emit, EmitExploratory };
DunnGate decide_dunn(double kw_p);

struct MultiGroupMeasureOutcome {
  Measure measure = Measure::G;
  bool untestable = false;
  std::string reason;
  std::optional<ranks::TestResult> kw;
  std::vector<ranks::TestResult> dunn;
  bool dunn_exploratory = false;
  std::vector<GroupStats> groups;
  std::vector<std::pair<std::string, std::vector<double>>> values;
};

struct MultiGroupOutcome {
  std::uint64_t seed = 0;
  double level = 0.0;
  int n_human = 0;
  std::vector<std::pair<std::string, int>> agent_counts;
  std::vector<std::string> dropped_items;
  std::vector<MultiGroupMeasureOutcome> measures;
};

// Kruskal-Wallis across the agent groups per measure, with Dunn pairwise
// comparisons when the omnibus test is significant (flagged exploratory in
// the borderline band).
MultiGroupOutcome run_multi_agent(const ResponseMatrix& humans,
                                  const std::vector<std::pair<std::string, ResponseMatrix>>& agents,
                                  double level, std::uint64_t seed,
                                  const ExperimentDesign& design);

struct SensitivityCell {
  double level = 0.0;
  std::vector<TwoGroupOutcome> runs;  // one per seed
};

// Repeats the two-group pipeline over levels x seeds. Mixing seeds derive
// from (seed, level value), so any single cell reproduces on its own with
// the same seed and level.
std::vector<SensitivityCell> run_sensitivity(const ExperimentDesign& base,
                                             const std::vector<double>& levels,
                                             const std::vector<std::uint64_t>& seeds,
                                             const ResponseMatrix& humans,
                                             const ResponseMatrix& agents);

double median(std::vector<double> v);

}  // namespace perfit::expt
