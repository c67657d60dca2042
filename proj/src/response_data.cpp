#include "perfit/response_data.hpp"

#include <algorithm>
#include <unordered_set>

#include "perfit/csv.hpp"

namespace perfit {

Source Source::parse(const std::string& text) {
  if (text == "human") return human();
  constexpr std::string_view prefix = "agent:";
  if (text.starts_with(prefix)) {
    std::string name = text.substr(prefix.size());
    if (name.empty()) fail_validation("empty agent name in source \"" + text + "\"");
    return agent(std::move(name));
  }
  fail_validation("source must be \"human\" or \"agent:<name>\", got \"" + text + "\"");
}

const std::vector<Measure>& all_measures() {
  static const std::vector<Measure> all{Measure::G, Measure::GStar, Measure::U3, Measure::ZU3};
  return all;
}

std::string measure_token(Measure m) {
  switch (m) {
    case Measure::G: return "g";
    case Measure::GStar: return "gstar";
    case Measure::U3: return "u3";
    case Measure::ZU3: return "zu3";
  }
  return "g";
}

std::string measure_column(Measure m) {
  switch (m) {
    case Measure::G: return "G";
    case Measure::GStar: return "G_star";
    case Measure::U3: return "U3";
    case Measure::ZU3: return "ZU3";
  }
  return "G";
}

Measure parse_measure(const std::string& token) {
  for (Measure m : all_measures())
    if (measure_token(m) == token) return m;
  fail_validation("unknown measure \"" + token + "\" (expected g, gstar, u3 or zu3)");
}

ResponseMatrix::ResponseMatrix(std::vector<Respondent> respondents,
                               std::vector<std::string> items,
                               std::vector<std::uint8_t> cells)
    : respondents_(std::move(respondents)), items_(std::move(items)), cells_(std::move(cells)) {
  if (respondents_.empty()) fail_validation("response matrix has no respondents");
  if (items_.empty()) fail_validation("response matrix has no items");
  if (cells_.size() != respondents_.size() * items_.size())
    fail_validation("response matrix cell count does not match its dimensions");
  for (std::uint8_t v : cells_)
    if (v > 1) fail_validation("response matrix cells must be 0 or 1");

  std::unordered_set<std::string> seen;
  for (const auto& r : respondents_)
    if (!seen.insert(r.id).second) fail_validation("duplicate respondent id \"" + r.id + "\"");
  seen.clear();
  for (const auto& item : items_)
    if (!seen.insert(item).second) fail_validation("duplicate item id \"" + item + "\"");
}

int ResponseMatrix::row_score(std::size_t r) const {
  int sum = 0;
  for (std::uint8_t v : row(r)) sum += v;
  return sum;
}

std::size_t ResponseMatrix::column_sum(std::size_t col) const {
  std::size_t sum = 0;
  for (std::size_t i = 0; i < n_respondents(); ++i) sum += cell(i, col);
  return sum;
}

ResponseMatrix drop_columns(const ResponseMatrix& m, const std::vector<bool>& drop) {
  std::vector<std::string> items;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < m.n_items(); ++j) {
    if (!drop[j]) {
      keep.push_back(j);
      items.push_back(m.items()[j]);
    }
  }
  if (keep.empty()) fail_validation("no informative items remain after filtering");
  std::vector<std::uint8_t> cells;
  cells.reserve(m.n_respondents() * keep.size());
  for (std::size_t i = 0; i < m.n_respondents(); ++i)
    for (std::size_t j : keep) cells.push_back(m.cell(i, j));
  return {m.respondents(), std::move(items), std::move(cells)};
}

ResponseMatrix select_rows(const ResponseMatrix& m, const std::vector<std::size_t>& rows) {
  std::vector<Respondent> respondents;
  respondents.reserve(rows.size());
  std::vector<std::uint8_t> cells;
  cells.reserve(rows.size() * m.n_items());
  for (std::size_t i : rows) {
    respondents.push_back(m.respondents()[i]);
    auto r = m.row(i);
    cells.insert(cells.end(), r.begin(), r.end());
  }
  return {std::move(respondents), m.items(), std::move(cells)};
}

namespace io {
namespace {

// Blank lines (a single empty field) are tolerated anywhere.
bool is_blank_row(const std::vector<std::string>& row) {
  return row.size() == 1 && row[0].empty();
}

void check_row_width(const std::string& origin, std::size_t row_no, std::size_t got,
                     std::size_t want) {
  if (got != want)
    fail_validation(origin + ": row " + std::to_string(row_no) + " has " + std::to_string(got) +
                    " fields, expected " + std::to_string(want));
}

struct ResponseHeader {
  std::vector<std::string> items;
};

ResponseHeader parse_response_header(const CsvTable& table, const std::string& origin) {
  if (table.empty()) fail_validation(origin + ": empty file");
  const auto& header = table[0];
  if (header.size() < 3 || header[0] != "respondent_id" || header[1] != "source")
    fail_validation(origin + ": header must start with respondent_id,source followed by item ids");
  return {std::vector<std::string>(header.begin() + 2, header.end())};
}

}  // namespace

ResponseMatrix parse_scored_csv_text(std::string_view text, const std::string& origin) {
  CsvTable table = parse_csv(text, origin);
  auto header = parse_response_header(table, origin);
  const std::size_t j = header.items.size();

  std::vector<Respondent> respondents;
  std::vector<std::uint8_t> cells;
  for (std::size_t rn = 1; rn < table.size(); ++rn) {
    const auto& row = table[rn];
    if (is_blank_row(row)) continue;
    check_row_width(origin, rn + 1, row.size(), j + 2);
    respondents.push_back({row[0], Source::parse(row[1])});
    for (std::size_t k = 0; k < j; ++k) {
      const std::string& cell = row[2 + k];
      if (cell == "0")
        cells.push_back(0);
      else if (cell == "1")
        cells.push_back(1);
      else
        fail_validation(origin + ": row " + std::to_string(rn + 1) + ", item \"" +
                        header.items[k] + "\": cell must be 0 or 1, got \"" + cell + "\"");
    }
  }
  if (respondents.empty()) fail_validation(origin + ": no response rows");
  return {std::move(respondents), std::move(header.items), std::move(cells)};
}

ResponseMatrix parse_scored_csv(const std::string& path) {
  return parse_scored_csv_text(read_file(path), path);
}

RawResponses parse_raw_csv_text(std::string_view text, const std::string& origin) {
  CsvTable table = parse_csv(text, origin);
  auto header = parse_response_header(table, origin);
  const std::size_t j = header.items.size();

  RawResponses raw;
  raw.items = header.items;
  for (std::size_t rn = 1; rn < table.size(); ++rn) {
    const auto& row = table[rn];
    if (is_blank_row(row)) continue;
    check_row_width(origin, rn + 1, row.size(), j + 2);
    raw.respondents.push_back({row[0], Source::parse(row[1])});
    raw.cells.insert(raw.cells.end(), row.begin() + 2, row.end());
  }
  if (raw.respondents.empty()) fail_validation(origin + ": no response rows");
  return raw;
}

RawResponses parse_raw_csv(const std::string& path) {
  return parse_raw_csv_text(read_file(path), path);
}

AnswerKey parse_key_csv_text(std::string_view text, const std::string& origin) {
  CsvTable table = parse_csv(text, origin);
  if (table.empty()) fail_validation(origin + ": empty file");
  if (table[0].size() != 2 || table[0][0] != "item_id" || table[0][1] != "correct_option")
    fail_validation(origin + ": header must be item_id,correct_option");
  AnswerKey key;
  for (std::size_t rn = 1; rn < table.size(); ++rn) {
    const auto& row = table[rn];
    if (is_blank_row(row)) continue;
    check_row_width(origin, rn + 1, row.size(), 2);
    if (row[1].empty())
      fail_validation(origin + ": row " + std::to_string(rn + 1) + ": empty correct_option");
    if (!key.correct.emplace(row[0], row[1]).second)
      fail_validation(origin + ": duplicate key entry for item \"" + row[0] + "\"");
    key.items.push_back(row[0]);
  }
  if (key.items.empty()) fail_validation(origin + ": no key entries");
  return key;
}

AnswerKey parse_key_csv(const std::string& path) {
  return parse_key_csv_text(read_file(path), path);
}

std::string to_scored_csv(const ResponseMatrix& m) {
  std::string out = "respondent_id,source";
  for (const auto& item : m.items()) {
    out += ',';
    out += csv_field(item);
  }
  out += '\n';
  for (std::size_t i = 0; i < m.n_respondents(); ++i) {
    const auto& r = m.respondents()[i];
    out += csv_field(r.id);
    out += ',';
    out += csv_field(r.source.label());
    for (std::uint8_t v : m.row(i)) {
      out += ',';
      out += static_cast<char>('0' + v);
    }
    out += '\n';
  }
  return out;
}

void write_scored_csv(const ResponseMatrix& m, const std::string& path) {
  write_file_atomic(path, to_scored_csv(m));
}

}  // namespace io

ResponseMatrix score(const RawResponses& raw, const AnswerKey& key) {
  const std::size_t j = raw.items.size();
  std::vector<const std::string*> correct(j);
  for (std::size_t k = 0; k < j; ++k) {
    auto it = key.correct.find(raw.items[k]);
    if (it == key.correct.end())
      fail_validation("answer key has no entry for item \"" + raw.items[k] + "\"");
    correct[k] = &it->second;
  }
  std::vector<std::uint8_t> cells(raw.cells.size());
  for (std::size_t idx = 0; idx < raw.cells.size(); ++idx) {
    const std::string& sel = raw.cells[idx];
    // blanks and off-key selections both count as incorrect
    cells[idx] = (!sel.empty() && sel == *correct[idx % j]) ? 1 : 0;
  }
  return {raw.respondents, raw.items, std::move(cells)};
}

FilterResult filter_degenerate_items(const ResponseMatrix& m) {
  const std::size_t n = m.n_respondents();
  std::vector<bool> drop(m.n_items(), false);
  std::vector<std::string> dropped;
  for (std::size_t col = 0; col < m.n_items(); ++col) {
    std::size_t sum = m.column_sum(col);
    if (sum == 0 || sum == n) {
      drop[col] = true;
      dropped.push_back(m.items()[col]);
    }
  }
  if (dropped.empty()) return {m, {}};
  return {drop_columns(m, drop), std::move(dropped)};
}

}  // namespace perfit
