#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "perfit/types.hpp"

namespace perfit {

// Unscored selections: one option string per cell, "" meaning blank.
struct RawResponses {
  std::vector<Respondent> respondents;
  std::vector<std::string> items;
  std::vector<std::string> cells;  // row-major N x J
};

struct AnswerKey {
  std::vector<std::string> items;  // file order
  std::unordered_map<std::string, std::string> correct;
};

namespace io {

// Scored matrix CSV: header "respondent_id,source,<item...>", cells 0/1,
// source "human" or "agent:<name>".
ResponseMatrix parse_scored_csv(const std::string& path);
ResponseMatrix parse_scored_csv_text(std::string_view text, const std::string& origin);

RawResponses parse_raw_csv(const std::string& path);
RawResponses parse_raw_csv_text(std::string_view text, const std::string& origin);

// Answer key CSV: header "item_id,correct_option".
AnswerKey parse_key_csv(const std::string& path);
AnswerKey parse_key_csv_text(std::string_view text, const std::string& origin);

std::string to_scored_csv(const ResponseMatrix& m);
void write_scored_csv(const ResponseMatrix& m, const std::string& path);

}  // namespace io

// Dichotomize: 1 iff the selection matches the key entry; blanks and any
// other selection score 0. Every item must appear in the key.
ResponseMatrix score(const RawResponses& raw, const AnswerKey& key);

struct FilterResult {
  ResponseMatrix matrix;
  std::vector<std::string> dropped_items;  // all-correct or all-incorrect columns
};

// Drop degenerate columns (column sum 0 or N). Errors if nothing informative
// remains. Idempotent.
FilterResult filter_degenerate_items(const ResponseMatrix& m);

}  // namespace perfit
