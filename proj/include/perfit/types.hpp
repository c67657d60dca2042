#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "perfit/error.hpp"

namespace perfit {

// Who produced a response row. Agent rows carry the model label from the
// "agent:<name>" source tag.
struct Source {
  enum class Kind { Human, Agent };

  Kind kind = Kind::Human;
  std::string name;  // empty for humans

  static Source human() { return {}; }
  static Source agent(std::string n) { return {Kind::Agent, std::move(n)}; }

  bool is_agent() const { return kind == Kind::Agent; }
  std::string label() const { return is_agent() ? "agent:" + name : "human"; }

  static Source parse(const std::string& text);

  friend bool operator==(const Source&, const Source&) = default;
};

struct Respondent {
  std::string id;
  Source source;
};

// Person-fit measures exposed across the toolchain. Tokens are the CLI/JSON
// spellings, columns the CSV header spellings.
enum class Measure { G, GStar, U3, ZU3 };

const std::vector<Measure>& all_measures();
std::string measure_token(Measure m);    // "g", "gstar", "u3", "zu3"
std::string measure_column(Measure m);   // "G", "G_star", "U3", "ZU3"
Measure parse_measure(const std::string& token);

// Dichotomous N x J response matrix, row-major, cells strictly 0/1.
// Respondent ids and item ids are unique; row and column order are stable.
class ResponseMatrix {
public:
  ResponseMatrix(std::vector<Respondent> respondents,
                 std::vector<std::string> items,
                 std::vector<std::uint8_t> cells);

  std::size_t n_respondents() const { return respondents_.size(); }
  std::size_t n_items() const { return items_.size(); }

  const std::vector<Respondent>& respondents() const { return respondents_; }
  const std::vector<std::string>& items() const { return items_; }

  std::uint8_t cell(std::size_t row, std::size_t col) const {
    return cells_[row * items_.size() + col];
  }

  std::span<const std::uint8_t> row(std::size_t r) const {
    return {cells_.data() + r * items_.size(), items_.size()};
  }

  int row_score(std::size_t r) const;
  std::size_t column_sum(std::size_t col) const;

private:
  std::vector<Respondent> respondents_;
  std::vector<std::string> items_;
  std::vector<std::uint8_t> cells_;
};

// New matrix keeping only columns where drop[col] == false.
ResponseMatrix drop_columns(const ResponseMatrix& m, const std::vector<bool>& drop);

// New matrix keeping rows[i] in the given order.
ResponseMatrix select_rows(const ResponseMatrix& m, const std::vector<std::size_t>& rows);

}  // namespace perfit
