#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "perfit/csv.hpp"
#include "perfit/experiment.hpp"
#include "perfit/pfs.hpp"
#include "perfit/report.hpp"
#include "perfit/response_data.hpp"
#include "perfit/simulate.hpp"
#include "perfit/version.hpp"

namespace {

namespace fs = std::filesystem;
using namespace perfit;

struct CommonOpts {
  std::string out_dir;
  bool quiet = false;
};

void info(const CommonOpts& opts, const std::string& msg) {
  if (!opts.quiet) std::cerr << msg << '\n';
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail_io("cannot create output directory " + out_dir);
}

void write_out(const CommonOpts& opts, const std::string& filename, std::string_view content) {
  ensure_out_dir(opts.out_dir);
  io::write_file_atomic((fs::path(opts.out_dir) / filename).string(), content);
}

void apply_thread_env() {
  const char* env = std::getenv("PERFIT_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  long n = std::strtol(env, &end, 10);
  if (end == nullptr || *end != '\0' || n < 0)
    fail_validation(std::string("PERFIT_THREADS must be a non-negative integer, got \"") + env +
                    "\"");
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(static_cast<int>(n));
#endif
}

// difficulties CSV: header item_id,p with one row per remaining item
pfs::ItemStats stats_for_matrix(const ResponseMatrix& m, const std::string& difficulties_path) {
  if (difficulties_path.empty()) return pfs::item_stats(m);
  io::CsvTable table = io::read_csv_file(difficulties_path);
  if (table.empty() || table[0].size() != 2 || table[0][0] != "item_id" || table[0][1] != "p")
    fail_validation(difficulties_path + ": header must be item_id,p");
  std::unordered_map<std::string, double> by_item;
  for (std::size_t rn = 1; rn < table.size(); ++rn) {
    const auto& row = table[rn];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 2)
      fail_validation(difficulties_path + ": row " + std::to_string(rn + 1) +
                      " must have two fields");
    try {
      if (!by_item.emplace(row[0], std::stod(row[1])).second)
        fail_validation(difficulties_path + ": duplicate item \"" + row[0] + "\"");
    } catch (const std::invalid_argument&) {
      fail_validation(difficulties_path + ": bad difficulty \"" + row[1] + "\"");
    } catch (const std::out_of_range&) {
      fail_validation(difficulties_path + ": bad difficulty \"" + row[1] + "\"");
    }
  }
  std::vector<double> p;
  p.reserve(m.n_items());
  for (const auto& item : m.items()) {
    auto it = by_item.find(item);
    if (it == by_item.end())
      fail_validation(difficulties_path + ": no difficulty for item \"" + item + "\"");
    p.push_back(it->second);
  }
  return pfs::item_stats_from_p(std::move(p));
}

struct PreparedMatrix {
  ResponseMatrix matrix;
  pfs::ItemStats stats;
};

PreparedMatrix prepare_matrix(const CommonOpts& opts, const std::string& matrix_path,
                              const std::string& difficulties_path) {
  ResponseMatrix raw = io::parse_scored_csv(matrix_path);
  FilterResult filtered = filter_degenerate_items(raw);
  if (!filtered.dropped_items.empty()) {
    std::string msg = "warning: dropped degenerate items:";
    for (const auto& item : filtered.dropped_items) msg += " " + item;
    info(opts, msg);
  }
  if (filtered.matrix.n_items() < 20)
    info(opts, "warning: only " + std::to_string(filtered.matrix.n_items()) +
                   " informative items; person-fit statistics are calibrated for tests with at "
                   "least 20 items");
  pfs::ItemStats stats = stats_for_matrix(filtered.matrix, difficulties_path);
  return {std::move(filtered.matrix), std::move(stats)};
}

std::vector<Measure> measures_from_flag(const std::string& flag_value) {
  std::vector<Measure> out;
  std::string token;
  for (char ch : flag_value + ",") {
    if (ch == ',') {
      if (!token.empty()) out.push_back(parse_measure(token));
      token.clear();
    } else {
      token += ch;
    }
  }
  if (out.empty()) fail_validation("--measures lists no measures");
  return out;
}

struct ExperimentArgs {
  std::string config_path;
  CommonOpts common;
  std::optional<std::uint64_t> seed_flag;
  std::string measures_flag;
  std::string alternative_flag;
};

expt::ExperimentConfig load_experiment(const ExperimentArgs& args) {
  expt::ExperimentConfig cfg = expt::parse_experiment_config_file(args.config_path);
  if (args.seed_flag) cfg.seeds = {*args.seed_flag};
  if (cfg.seeds.empty())
    fail_validation("no seed given: add \"seeds\" to the config or pass --seed");
  if (!args.measures_flag.empty()) cfg.measures = measures_from_flag(args.measures_flag);
  if (!args.alternative_flag.empty())
    cfg.alternative = ranks::parse_alternative(args.alternative_flag);
  return cfg;
}

expt::EmitContext make_context(const ExperimentArgs& args, const expt::ExperimentConfig& cfg,
                               const std::string& pipeline) {
  expt::EmitContext ctx;
  ctx.out_dir = args.common.out_dir;
  ctx.pipeline = pipeline;
  ctx.instrument = cfg.instrument;
  ctx.config_echo = cfg.echo;
  return ctx;
}

int exit_code_for_untestable(const std::vector<expt::TwoGroupOutcome>& runs,
                             const std::vector<Measure>& measures, const CommonOpts& opts) {
  for (Measure m : measures) {
    bool any_testable = false;
    for (const auto& run : runs)
      for (const auto& mo : run.measures)
        if (mo.measure == m && mo.test) any_testable = true;
    if (!any_testable) {
      info(opts, "untestable: measure " + measure_token(m) + " has no testable runs");
      return 4;
    }
  }
  return 0;
}

int cmd_score(const std::string& raw_path, const std::string& key_path, const CommonOpts& opts) {
  RawResponses raw = io::parse_raw_csv(raw_path);
  AnswerKey key = io::parse_key_csv(key_path);
  ResponseMatrix scored = score(raw, key);
  write_out(opts, "scored.csv", io::to_scored_csv(scored));
  info(opts, "scored " + std::to_string(scored.n_respondents()) + " respondents x " +
                 std::to_string(scored.n_items()) + " items -> " +
                 (fs::path(opts.out_dir) / "scored.csv").string());
  return 0;
}

int cmd_pfs(const std::string& matrix_path, const std::string& difficulties_path,
            const CommonOpts& opts) {
  PreparedMatrix prepared = prepare_matrix(opts, matrix_path, difficulties_path);
  auto records = pfs::compute_all(prepared.matrix, prepared.stats);
  write_out(opts, "pfs.csv", pfs::to_pfs_csv(records));
  info(opts, "person-fit statistics for " + std::to_string(records.size()) + " respondents -> " +
                 (fs::path(opts.out_dir) / "pfs.csv").string());
  return 0;
}

int cmd_flag(const std::string& matrix_path, const std::string& difficulties_path,
             const std::string& measure_token_arg, double threshold, const CommonOpts& opts) {
  Measure measure = parse_measure(measure_token_arg);
  PreparedMatrix prepared = prepare_matrix(opts, matrix_path, difficulties_path);
  auto records = pfs::compute_all(prepared.matrix, prepared.stats);
  auto flagged = pfs::flag_aberrant(records, measure, threshold);

  std::unordered_map<std::string, const pfs::PfsRecord*> by_id;
  for (const auto& rec : records) by_id[rec.respondent_id] = &rec;
  std::string out = "respondent_id,source,measure,value\n";
  char buf[32];
  for (const auto& id : flagged) {
    const pfs::PfsRecord* rec = by_id.at(id);
    std::snprintf(buf, sizeof buf, "%.6g", *pfs::measure_value(*rec, measure));
    out += io::csv_field(id) + "," + io::csv_field(rec->source.label()) + "," +
           measure_token(measure) + "," + buf + "\n";
  }
  write_out(opts, "flagged.csv", out);
  info(opts, "flagged " + std::to_string(flagged.size()) + " of " +
                 std::to_string(records.size()) + " respondents -> " +
                 (fs::path(opts.out_dir) / "flagged.csv").string());
  return 0;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
                 const CommonOpts& opts) {
  sim::SimConfig cfg = sim::parse_sim_config_file(config_path);
  if (seed_flag) cfg.seed = *seed_flag;
  if (!cfg.seed)
    fail_validation("no seed given: add \"seed\" to the config or pass --seed");
  ResponseMatrix population = sim::sample_population(cfg, *cfg.seed);
  write_out(opts, "population.csv", io::to_scored_csv(population));

  nlohmann::ordered_json meta;
  meta["tool"] = kToolName;
  meta["tool_version"] = kToolVersion;
  meta["config"] = sim::sim_config_json(cfg);
  meta["n_respondents"] = population.n_respondents();
  meta["n_items"] = population.n_items();
  write_out(opts, "population_meta.json", meta.dump(2) + "\n");
  info(opts, "simulated " + std::to_string(population.n_respondents()) + " respondents -> " +
                 (fs::path(opts.out_dir) / "population.csv").string());
  return 0;
}

int cmd_compare(const ExperimentArgs& args) {
  expt::ExperimentConfig cfg = load_experiment(args);
  if (cfg.levels.size() != 1)
    fail_validation("compare expects exactly one pollution level; use sensitivity for sweeps");

  expt::ExperimentDesign design;
  design.pollution_level = cfg.levels[0];
  design.measures = cfg.measures;
  design.alternative = cfg.alternative;
  design.human_only_difficulties = cfg.human_only_difficulties;

  std::vector<expt::TwoGroupOutcome> runs;
  for (std::uint64_t seed : cfg.seeds) {
    expt::Pools pools = expt::build_pools(cfg, seed);
    if (pools.agents.size() != 1)
      fail_validation("compare expects exactly one agent pool; use multigroup for several");
    design.seed = seed;
    runs.push_back(expt::run_two_group(design, pools.humans, pools.agents[0].second));
  }

  expt::emit_compare(make_context(args, cfg, "compare"), design.pollution_level, runs);
  info(args.common, "compare reports -> " + args.common.out_dir);
  return exit_code_for_untestable(runs, cfg.measures, args.common);
}

int cmd_multigroup(const ExperimentArgs& args) {
  expt::ExperimentConfig cfg = load_experiment(args);
  if (cfg.levels.size() != 1)
    fail_validation("multigroup expects exactly one pollution level");
  if (cfg.agents.size() < 2)
    fail_validation("multigroup needs at least two agent pools");

  expt::ExperimentDesign design;
  design.pollution_level = cfg.levels[0];
  design.measures = cfg.measures;
  design.alternative = cfg.alternative;
  design.human_only_difficulties = cfg.human_only_difficulties;

  std::vector<expt::MultiGroupOutcome> runs;
  for (std::uint64_t seed : cfg.seeds) {
    expt::Pools pools = expt::build_pools(cfg, seed);
    design.seed = seed;
    runs.push_back(
        expt::run_multi_agent(pools.humans, pools.agents, design.pollution_level, seed, design));
  }

  expt::emit_multigroup(make_context(args, cfg, "multigroup"), design.pollution_level, runs);
  info(args.common, "multigroup reports -> " + args.common.out_dir);

  for (Measure m : cfg.measures) {
    bool any_testable = false;
    for (const auto& run : runs)
      for (const auto& mo : run.measures)
        if (mo.measure == m && mo.kw) any_testable = true;
    if (!any_testable) {
      info(args.common, "untestable: measure " + measure_token(m) + " has no testable runs");
      return 4;
    }
  }
  return 0;
}

int cmd_sensitivity(const ExperimentArgs& args) {
  expt::ExperimentConfig cfg = load_experiment(args);

  expt::ExperimentDesign design;
  design.measures = cfg.measures;
  design.alternative = cfg.alternative;
  design.human_only_difficulties = cfg.human_only_difficulties;

  // fresh pools per seed; each seed contributes one run to every level
  std::vector<expt::SensitivityCell> cells(cfg.levels.size());
  for (std::size_t li = 0; li < cfg.levels.size(); ++li) cells[li].level = cfg.levels[li];
  for (std::uint64_t seed : cfg.seeds) {
    expt::Pools pools = expt::build_pools(cfg, seed);
    if (pools.agents.size() != 1)
      fail_validation("sensitivity expects exactly one agent pool");
    auto per_seed =
        expt::run_sensitivity(design, cfg.levels, {seed}, pools.humans, pools.agents[0].second);
    for (std::size_t li = 0; li < cells.size(); ++li)
      cells[li].runs.push_back(std::move(per_seed[li].runs[0]));
  }

  expt::emit_sensitivity(make_context(args, cfg, "sensitivity"), cells);
  info(args.common, "sensitivity reports -> " + args.common.out_dir);

  for (const auto& cell : cells) {
    int code = exit_code_for_untestable(cell.runs, cfg.measures, args.common);
    if (code != 0) return code;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"person-fit screening for agent-polluted response data"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  std::string raw_path, key_path, matrix_path, difficulties_path, config_path;
  std::string measure_arg = "zu3", measures_flag, alternative_flag;
  double threshold = 1.645;
  CommonOpts common;
  std::optional<std::uint64_t> seed_flag;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", common.out_dir, "output directory")->required();
    cmd->add_flag("--quiet", common.quiet, "suppress warnings and progress output");
  };

  CLI::App* c_score = app.add_subcommand("score", "dichotomize raw selections against a key");
  c_score->add_option("--raw", raw_path, "raw responses CSV")->required();
  c_score->add_option("--key", key_path, "answer key CSV")->required();
  add_common(c_score);

  CLI::App* c_pfs = app.add_subcommand("pfs", "person-fit statistics for a scored matrix");
  c_pfs->add_option("--matrix", matrix_path, "scored matrix CSV")->required();
  c_pfs->add_option("--difficulties", difficulties_path, "reference difficulties CSV (item_id,p)");
  add_common(c_pfs);

  CLI::App* c_flag = app.add_subcommand("flag", "respondents whose misfit exceeds a threshold");
  c_flag->add_option("--matrix", matrix_path, "scored matrix CSV")->required();
  c_flag->add_option("--difficulties", difficulties_path, "reference difficulties CSV (item_id,p)");
  c_flag->add_option("--measure", measure_arg, "measure: g, gstar, u3 or zu3");
  c_flag->add_option("--threshold", threshold, "flag strictly above this value")->required();
  add_common(c_flag);

  CLI::App* c_sim = app.add_subcommand("simulate", "draw a synthetic population");
  c_sim->add_option("--config", config_path, "simulation config JSON")->required();
  c_sim->add_option("--seed", seed_flag, "master seed (overrides the config)");
  add_common(c_sim);

  auto add_experiment = [&](const char* name, const char* help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", config_path, "experiment config JSON")->required();
    cmd->add_option("--seed", seed_flag, "master seed (replaces the config seed list)");
    cmd->add_option("--measures", measures_flag, "comma list: g,gstar,u3,zu3");
    cmd->add_option("--alternative", alternative_flag, "less or greater");
    add_common(cmd);
    return cmd;
  };
  CLI::App* c_compare = add_experiment("compare", "humans vs one agent pool at one level");
  CLI::App* c_multi = add_experiment("multigroup", "compare several agent pools at one level");
  CLI::App* c_sens = add_experiment("sensitivity", "two-group sweep across pollution levels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    apply_thread_env();
    if (app.got_subcommand(c_score)) return cmd_score(raw_path, key_path, common);
    if (app.got_subcommand(c_pfs)) return cmd_pfs(matrix_path, difficulties_path, common);
    if (app.got_subcommand(c_flag))
      return cmd_flag(matrix_path, difficulties_path, measure_arg, threshold, common);
    if (app.got_subcommand(c_sim)) return cmd_simulate(config_path, seed_flag, common);

    ExperimentArgs args{config_path, common, seed_flag, measures_flag, alternative_flag};
    if (app.got_subcommand(c_compare)) return cmd_compare(args);
    if (app.got_subcommand(c_multi)) return cmd_multigroup(args);
    if (app.got_subcommand(c_sens)) return cmd_sensitivity(args);
    fail_validation("no subcommand selected");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
