#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cohbench::csv {

using Cell = std::variant<std::string, double, long long>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

/// Full-precision decimal rendering (17 significant digits, trailing zeros
/// trimmed); bit-identical across runs for identical values.
std::string format_double(double v);

/// Render as RFC-4180-style CSV with '\n' newlines, a leading
/// "# run:<id>" comment line, then the header row. Throws
/// std::invalid_argument on empty or ragged rows.
std::string render(const Table& table, const std::string& run_id);

/// Render and write; throws std::runtime_error when the path cannot be
/// written.
void write_csv(const Table& table, const std::string& path,
               const std::string& run_id);

/// FNV-1a 64-bit content hash, hex encoded; the deterministic run id.
std::string content_hash(std::string_view data);

}  // namespace cohbench::csv
