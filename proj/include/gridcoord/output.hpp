#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace gridcoord::io {

using Cell = std::variant<std::string, double>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

enum class Format { Csv, Json };

/// Fixed six-decimal rendering; negative zero prints as zero.
std::string format_number(double v);

/// CSV with a header row, '.' decimals and LF line endings.
std::string to_csv(const Table& table);

/// JSON array of row objects using the same number rendering as CSV.
std::string to_json(const Table& table);

/// Writes `<dir>/<stem>.csv` or `<dir>/<stem>.json` and returns the path.
std::filesystem::path write_table(const std::filesystem::path& dir, const std::string& stem,
                                  const Table& table, Format format);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Parses a two-or-more column numeric CSV with a header row. Returns the
/// header and the rows; throws std::runtime_error on malformed input.
Table read_numeric_csv(const std::string& text);

}  // namespace gridcoord::io
