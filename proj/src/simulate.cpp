#include "perfit/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "perfit/csv.hpp"

namespace perfit::sim {

using nlohmann::json;

double three_pl_probability(const IrtItem& item, double theta) {
  return item.c + (1.0 - item.c) / (1.0 + std::exp(-item.a * (theta - item.b)));
}

double Dist::sample(rng::Rng& rng) const {
  switch (kind) {
    case Kind::Normal: return rng.normal(p1, p2);
    case Kind::LogNormal: return rng.lognormal(p1, p2);
    case Kind::Constant: return p1;
  }
  return p1;
}

namespace {

[[noreturn]] void bad(const std::string& origin, const std::string& what) {
  fail_validation(origin + ": " + what);
}

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& origin, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) bad(origin, "unknown key \"" + it.key() + "\" in " + where);
  }
}

double want_number(const json& j, const char* key, const std::string& origin) {
  if (!j.contains(key)) bad(origin, std::string("missing \"") + key + "\"");
  if (!j[key].is_number()) bad(origin, std::string("\"") + key + "\" must be a number");
  return j[key].get<double>();
}

Dist parse_dist(const json& j, const std::string& origin, const std::string& where) {
  if (!j.is_object()) bad(origin, where + " must be an object");
  if (!j.contains("type") || !j["type"].is_string())
    bad(origin, where + " needs a \"type\" string");
  const std::string type = j["type"].get<std::string>();
  Dist d;
  if (type == "normal") {
    require_keys(j, {"type", "mean", "sd"}, origin, where);
    d.kind = Dist::Kind::Normal;
    d.p1 = want_number(j, "mean", origin);
    d.p2 = want_number(j, "sd", origin);
    if (d.p2 < 0.0) bad(origin, where + ": sd must be >= 0");
  } else if (type == "lognormal") {
    require_keys(j, {"type", "meanlog", "sdlog"}, origin, where);
    d.kind = Dist::Kind::LogNormal;
    d.p1 = want_number(j, "meanlog", origin);
    d.p2 = want_number(j, "sdlog", origin);
    if (d.p2 < 0.0) bad(origin, where + ": sdlog must be >= 0");
  } else if (type == "constant") {
    require_keys(j, {"type", "value"}, origin, where);
    d.kind = Dist::Kind::Constant;
    d.p1 = want_number(j, "value", origin);
  } else {
    bad(origin, where + ": unknown type \"" + type + "\"");
  }
  return d;
}

json dist_json(const Dist& d) {
  switch (d.kind) {
    case Dist::Kind::Normal: return {{"type", "normal"}, {"mean", d.p1}, {"sd", d.p2}};
    case Dist::Kind::LogNormal: return {{"type", "lognormal"}, {"meanlog", d.p1}, {"sdlog", d.p2}};
    case Dist::Kind::Constant: return {{"type", "constant"}, {"value", d.p1}};
  }
  return {};
}

AberranceConfig parse_aberrance(const json& j, const std::string& origin) {
  if (!j.is_object()) bad(origin, "\"aberrance\" must be an object");
  if (!j.contains("kind") || !j["kind"].is_string())
    bad(origin, "\"aberrance\" needs a \"kind\" string");
  const std::string kind = j["kind"].get<std::string>();
  AberranceConfig a;
  if (kind == "difficulty_blind") {
    require_keys(j, {"kind", "accuracy", "match_human_mean"}, origin, "aberrance");
    a.kind = AberranceConfig::Kind::DifficultyBlind;
    if (j.contains("accuracy")) {
      double acc = want_number(j, "accuracy", origin);
      if (!(acc > 0.0 && acc < 1.0)) bad(origin, "aberrance accuracy must lie in (0, 1)");
      a.accuracy = acc;
      a.match_human_mean = false;
      if (j.contains("match_human_mean") && j["match_human_mean"].get<bool>())
        bad(origin, "aberrance cannot both fix accuracy and match the human mean");
    } else if (j.contains("match_human_mean")) {
      if (!j["match_human_mean"].is_boolean())
        bad(origin, "\"match_human_mean\" must be a boolean");
      a.match_human_mean = j["match_human_mean"].get<bool>();
      if (!a.match_human_mean)
        bad(origin, "difficulty_blind needs either accuracy or match_human_mean");
    }
  } else if (kind == "reversed_difficulty") {
    require_keys(j, {"kind"}, origin, "aberrance");
    a.kind = AberranceConfig::Kind::ReversedDifficulty;
    a.match_human_mean = false;
  } else if (kind == "human_irt") {
    require_keys(j, {"kind"}, origin, "aberrance");
    a.kind = AberranceConfig::Kind::HumanIrt;
    a.match_human_mean = false;
  } else {
    bad(origin, "unknown aberrance kind \"" + kind + "\"");
  }
  return a;
}

std::string aberrance_kind_token(AberranceConfig::Kind k) {
  switch (k) {
    case AberranceConfig::Kind::DifficultyBlind: return "difficulty_blind";
    case AberranceConfig::Kind::ReversedDifficulty: return "reversed_difficulty";
    case AberranceConfig::Kind::HumanIrt: return "human_irt";
  }
  return "difficulty_blind";
}

std::string padded(std::uint64_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llu", width, static_cast<unsigned long long>(value));
  return buf;
}

void check_label(const std::string& label, const std::string& origin) {
  if (label.empty()) bad(origin, "agent_label must not be empty");
  for (char ch : label)
    if (ch == ',' || ch == ':' || std::isspace(static_cast<unsigned char>(ch)))
      bad(origin, "agent_label must not contain commas, colons or whitespace");
}

}  // namespace

SimConfig parse_sim_config(const json& j, const std::string& origin) {
  if (!j.is_object()) bad(origin, "simulation config must be a JSON object");
  require_keys(j,
               {"J", "n_human", "n_aberrant", "theta_dist", "a_dist", "b_dist", "c", "aberrance",
                "seed", "rng", "agent_label"},
               origin, "config");
  SimConfig cfg;
  if (j.contains("J")) {
    if (!j["J"].is_number_integer()) bad(origin, "\"J\" must be an integer");
    cfg.j = j["J"].get<int>();
    if (cfg.j < 2) bad(origin, "\"J\" must be at least 2");
  }
  auto read_count = [&](const char* key, int& into) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer() || j[key].get<long long>() < 0)
      bad(origin, std::string("\"") + key + "\" must be a non-negative integer");
    into = j[key].get<int>();
  };
  read_count("n_human", cfg.n_human);
  read_count("n_aberrant", cfg.n_aberrant);
  if (cfg.n_human + cfg.n_aberrant < 1) bad(origin, "population is empty");

  if (j.contains("theta_dist")) cfg.theta_dist = parse_dist(j["theta_dist"], origin, "theta_dist");
  if (j.contains("a_dist")) cfg.a_dist = parse_dist(j["a_dist"], origin, "a_dist");
  if (j.contains("b_dist")) cfg.b_dist = parse_dist(j["b_dist"], origin, "b_dist");
  if (j.contains("c")) {
    cfg.c = want_number(j, "c", origin);
    if (!(cfg.c >= 0.0 && cfg.c < 1.0)) bad(origin, "\"c\" must lie in [0, 1)");
  }
  if (j.contains("aberrance")) cfg.aberrance = parse_aberrance(j["aberrance"], origin);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      bad(origin, "\"seed\" must be a non-negative integer");
    if (j["seed"].is_number_integer() && j["seed"].get<long long>() < 0)
      bad(origin, "\"seed\" must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("agent_label")) {
    if (!j["agent_label"].is_string()) bad(origin, "\"agent_label\" must be a string");
    cfg.agent_label = j["agent_label"].get<std::string>();
  }
  check_label(cfg.agent_label, origin);

  if (j.contains("rng")) {
    const json& r = j["rng"];
    if (!r.is_object()) bad(origin, "\"rng\" must be an object");
    require_keys(r, {"name", "version"}, origin, "rng");
    if (!r.contains("name") || !r.contains("version"))
      bad(origin, "\"rng\" needs \"name\" and \"version\"");
    if (r["name"].get<std::string>() != rng::kAlgorithmName ||
        r["version"].get<int>() != rng::kAlgorithmVersion)
      bad(origin, "config was produced for generator \"" + r["name"].get<std::string>() +
                      "\" v" + r["version"].dump() + "; this build provides \"" +
                      rng::kAlgorithmName + "\" v" + std::to_string(rng::kAlgorithmVersion));
  }
  return cfg;
}

SimConfig parse_sim_config_file(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    fail_validation(path + ": invalid JSON: " + e.what());
  }
  return parse_sim_config(j, path);
}

nlohmann::ordered_json sim_config_json(const SimConfig& cfg) {
  nlohmann::ordered_json out;
  out["J"] = cfg.j;
  out["n_human"] = cfg.n_human;
  out["n_aberrant"] = cfg.n_aberrant;
  out["theta_dist"] = dist_json(cfg.theta_dist);
  out["a_dist"] = dist_json(cfg.a_dist);
  out["b_dist"] = dist_json(cfg.b_dist);
  out["c"] = cfg.c;
  nlohmann::ordered_json ab;
  ab["kind"] = aberrance_kind_token(cfg.aberrance.kind);
  if (cfg.aberrance.kind == AberranceConfig::Kind::DifficultyBlind) {
    if (cfg.aberrance.accuracy)
      ab["accuracy"] = *cfg.aberrance.accuracy;
    else
      ab["match_human_mean"] = cfg.aberrance.match_human_mean;
  }
  out["aberrance"] = std::move(ab);
  if (cfg.seed) out["seed"] = *cfg.seed;
  out["agent_label"] = cfg.agent_label;
  out["rng"] = {{"name", rng::kAlgorithmName}, {"version", rng::kAlgorithmVersion}};
  return out;
}

IrtItemBank make_item_bank(const SimConfig& cfg, std::uint64_t seed) {
  rng::Rng rng(seed);
  IrtItemBank bank;
  bank.items.resize(static_cast<std::size_t>(cfg.j));
  for (auto& item : bank.items) {
    item.a = cfg.a_dist.sample(rng);
    item.b = cfg.b_dist.sample(rng);
    item.c = cfg.c;
    if (item.a <= 0.0) fail_validation("item discrimination must be positive; check a_dist");
  }
  return bank;
}

namespace {

std::vector<std::uint8_t> pattern_from_bank(const IrtItemBank& bank, double theta, bool reverse_b,
                                            rng::Rng& rng) {
  std::vector<std::uint8_t> row(static_cast<std::size_t>(bank.n_items()));
  for (std::size_t k = 0; k < row.size(); ++k) {
    IrtItem item = bank.items[k];
    if (reverse_b) item.b = -item.b;
    row[k] = rng.bernoulli(three_pl_probability(item, theta)) ? 1 : 0;
  }
  return row;
}

}  // namespace

std::vector<std::uint8_t> sample_human(const IrtItemBank& bank, double theta,
                                       std::uint64_t seed) {
  rng::Rng rng(seed);
  return pattern_from_bank(bank, theta, false, rng);
}

std::vector<std::uint8_t> sample_difficulty_blind(int j, double accuracy, std::uint64_t seed) {
  if (!(accuracy > 0.0 && accuracy < 1.0))
    fail_validation("difficulty-blind accuracy must lie in (0, 1)");
  rng::Rng rng(seed);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(j));
  for (auto& cell : row) cell = rng.bernoulli(accuracy) ? 1 : 0;
  return row;
}

std::vector<std::uint8_t> sample_reversed_difficulty(const IrtItemBank& bank, double theta,
                                                     std::uint64_t seed) {
  rng::Rng rng(seed);
  return pattern_from_bank(bank, theta, true, rng);
}

std::vector<std::uint8_t> sample_conditional_null(const pfs::ItemStats& stats, int r,
                                                  std::uint64_t seed) {
  const int j = static_cast<int>(stats.n_items());
  if (r <= 0 || r >= j)
    fail_validation("conditional null patterns require 0 < r < J, got r = " + std::to_string(r));
  rng::Rng rng(seed);
  auto ones = rng::sample_without_replacement(static_cast<std::size_t>(j),
                                              static_cast<std::size_t>(r), rng);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(j), 0);
  for (std::size_t k : ones) row[k] = 1;
  return row;
}

ResponseMatrix sample_population(int n_human, int n_aberrant, const IrtItemBank& bank,
                                 const SimConfig& cfg, std::uint64_t seed) {
  if (bank.n_items() != cfg.j) fail_validation("item bank size does not match J");
  if (n_human < 0 || n_aberrant < 0 || n_human + n_aberrant < 1)
    fail_validation("population must contain at least one respondent");

  const std::size_t j = static_cast<std::size_t>(cfg.j);
  const std::size_t n_total = static_cast<std::size_t>(n_human) + n_aberrant;
  std::vector<std::uint8_t> cells(n_total * j);

  // every row owns a derived seed, so generation is order- and thread-free
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_human); ++i) {
    rng::Rng row_rng(rng::derive_seed(seed, rng::kStreamHuman, static_cast<std::uint64_t>(i)));
    double theta = cfg.theta_dist.sample(row_rng);
    auto row = pattern_from_bank(bank, theta, false, row_rng);
    std::copy(row.begin(), row.end(), cells.begin() + static_cast<std::size_t>(i) * j);
  }

  double accuracy = 0.0;
  if (n_aberrant > 0 && cfg.aberrance.kind == AberranceConfig::Kind::DifficultyBlind) {
    if (cfg.aberrance.accuracy) {
      accuracy = *cfg.aberrance.accuracy;
    } else {
      if (n_human == 0)
        fail_validation("matched difficulty-blind accuracy needs human rows in the population");
      double total = 0.0;
      for (std::size_t idx = 0; idx < static_cast<std::size_t>(n_human) * j; ++idx)
        total += cells[idx];
      accuracy = std::clamp(total / (static_cast<double>(n_human) * static_cast<double>(j)),
                            1e-3, 1.0 - 1e-3);
    }
  }

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_aberrant); ++i) {
    rng::Rng row_rng(rng::derive_seed(seed, rng::kStreamAgent, static_cast<std::uint64_t>(i)));
    std::vector<std::uint8_t> row;
    switch (cfg.aberrance.kind) {
      case AberranceConfig::Kind::DifficultyBlind: {
        row.resize(j);
        for (auto& cell : row) cell = row_rng.bernoulli(accuracy) ? 1 : 0;
        break;
      }
      case AberranceConfig::Kind::ReversedDifficulty: {
        double theta = cfg.theta_dist.sample(row_rng);
        row = pattern_from_bank(bank, theta, true, row_rng);
        break;
      }
      case AberranceConfig::Kind::HumanIrt: {
        double theta = cfg.theta_dist.sample(row_rng);
        row = pattern_from_bank(bank, theta, false, row_rng);
        break;
      }
    }
    std::copy(row.begin(), row.end(),
              cells.begin() + (static_cast<std::size_t>(n_human) + i) * j);
  }

  std::vector<Respondent> respondents;
  respondents.reserve(n_total);
  for (int i = 0; i < n_human; ++i)
    respondents.push_back({"h" + padded(static_cast<std::uint64_t>(i) + 1, 5), Source::human()});
  for (int i = 0; i < n_aberrant; ++i)
    respondents.push_back({cfg.agent_label + "_" + padded(static_cast<std::uint64_t>(i) + 1, 5),
                           Source::agent(cfg.agent_label)});

  const int width = cfg.j >= 100 ? 3 : 2;
  std::vector<std::string> items;
  items.reserve(j);
  for (int k = 0; k < cfg.j; ++k)
    items.push_back("item_" + padded(static_cast<std::uint64_t>(k) + 1, width));

  return {std::move(respondents), std::move(items), std::move(cells)};
}

ResponseMatrix sample_population(const SimConfig& cfg, std::uint64_t seed) {
  IrtItemBank bank = make_item_bank(cfg, rng::derive_seed(seed, rng::kStreamBank, 0));
  return sample_population(cfg.n_human, cfg.n_aberrant, bank, cfg, seed);
}

double mean_proportion_correct(const ResponseMatrix& m) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.n_respondents(); ++i) total += m.row_score(i);
  return total / (static_cast<double>(m.n_respondents()) * static_cast<double>(m.n_items()));
}

}  // namespace perfit::sim
