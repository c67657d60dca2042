#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace perfit::io {

// Rows of fields, header included. Quoted fields, embedded commas/quotes and
// CRLF line ends are handled; a trailing newline is optional.
using CsvTable = std::vector<std::vector<std::string>>;

CsvTable parse_csv(std::string_view text, const std::string& origin);
CsvTable read_csv_file(const std::string& path);

std::string csv_field(const std::string& value);  // quote iff needed

std::string read_file(const std::string& path);

// Write via temp file + rename so readers never observe partial output.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace perfit::io
