#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perfit/item_stats.hpp"
#include "perfit/rng.hpp"
#include "perfit/types.hpp"

namespace perfit::sim {

struct IrtItem {
  double a = 1.0;  // discrimination
  double b = 0.0;  // difficulty
  double c = 0.0;  // guessing floor
};

struct IrtItemBank {
  std::vector<IrtItem> items;
  int n_items() const { return static_cast<int>(items.size()); }
};

// c + (1 - c) / (1 + exp(-a (theta - b)))
double three_pl_probability(const IrtItem& item, double theta);

struct Dist {
  enum class Kind { Normal, LogNormal, Constant };
  Kind kind = Kind::Normal;
  double p1 = 0.0;  // mean / meanlog / value
  double p2 = 1.0;  // sd / sdlog / unused

  double sample(rng::Rng& rng) const;
};

struct AberranceConfig {
  enum class Kind { DifficultyBlind, ReversedDifficulty, HumanIrt };
  Kind kind = Kind::DifficultyBlind;
  std::optional<double> accuracy;  // DifficultyBlind only
  bool match_human_mean = true;    // derive accuracy from the human rows
};

struct SimConfig {
  int j = 20;
  int n_human = 0;
  int n_aberrant = 0;
  Dist theta_dist{Dist::Kind::Normal, 0.0, 1.0};
  Dist a_dist{Dist::Kind::LogNormal, 0.0, 0.25};
  Dist b_dist{Dist::Kind::Normal, 0.0, 1.0};
  double c = 0.2;
  AberranceConfig aberrance{};
  std::optional<std::uint64_t> seed;
  std::string agent_label = "sim";
};

// Strict parse: unknown keys are rejected so config typos cannot silently
// change a run. The optional "rng" block must match the built-in generator.
SimConfig parse_sim_config(const nlohmann::json& j, const std::string& origin);
SimConfig parse_sim_config_file(const std::string& path);
nlohmann::ordered_json sim_config_json(const SimConfig& cfg);

IrtItemBank make_item_bank(const SimConfig& cfg, std::uint64_t seed);

// One row each. Every sampler owns its seed, so generation order and thread
// count cannot change any row.
std::vector<std::uint8_t> sample_human(const IrtItemBank& bank, double theta,
                                       std::uint64_t seed);
std::vector<std::uint8_t> sample_difficulty_blind(int j, double accuracy,
                                                  std::uint64_t seed);
std::vector<std::uint8_t> sample_reversed_difficulty(const IrtItemBank& bank,
                                                     double theta, std::uint64_t seed);

// Uniform draw among all C(J, r) patterns with total score r, 0 < r < J.
std::vector<std::uint8_t> sample_conditional_null(const pfs::ItemStats& stats, int r,
                                                  std::uint64_t seed);

// n_human IRT rows ("h...") followed by n_aberrant rows named after
// cfg.agent_label. Matched difficulty-blind accuracy comes from the human
// rows of this same population.
ResponseMatrix sample_population(int n_human, int n_aberrant, const IrtItemBank& bank,
                                 const SimConfig& cfg, std::uint64_t seed);
ResponseMatrix sample_population(const SimConfig& cfg, std::uint64_t seed);

double mean_proportion_correct(const ResponseMatrix& m);

}  // namespace perfit::sim
