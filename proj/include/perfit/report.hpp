#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "perfit/experiment.hpp"

namespace perfit::expt {

struct EmitContext {
  std::string out_dir;
  std::string pipeline;  // "compare", "multigroup", "sensitivity"
  std::string instrument;
  nlohmann::ordered_json config_echo;
};

nlohmann::ordered_json test_result_json(const ranks::TestResult& t, Measure measure,
                                        const std::string& instrument);

// "0.05" -> "0.05"; trailing zeros trimmed so filenames stay stable.
std::string level_token(double level);

// One JSON report and one density CSV per (measure, level), plus a
// {pipeline}_summary.json aggregating every test object. Writes are atomic
// and key order is fixed, so identical inputs produce identical bytes.
void emit_compare(const EmitContext& ctx, double level,
                  const std::vector<TwoGroupOutcome>& runs);
void emit_multigroup(const EmitContext& ctx, double level,
                     const std::vector<MultiGroupOutcome>& runs);
void emit_sensitivity(const EmitContext& ctx, const std::vector<SensitivityCell>& cells);

}  // namespace perfit::expt
