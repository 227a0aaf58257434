#include "cohbench/csv.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cohbench::csv {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

namespace {

std::string escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string cell_text(const Cell& cell) {
  if (std::holds_alternative<double>(cell)) {
    return format_double(std::get<double>(cell));
  }
  if (std::holds_alternative<long long>(cell)) {
    return std::to_string(std::get<long long>(cell));
  }
  return escape(std::get<std::string>(cell));
}

}  // namespace

std::string render(const Table& table, const std::string& run_id) {
  if (table.header.empty() || table.rows.empty()) {
    throw std::invalid_argument("csv: rows must be non-empty");
  }
  std::ostringstream os;
  os << "# run:" << run_id << '\n';
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) os << ',';
    os << escape(table.header[i]);
  }
  os << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::invalid_argument("csv: ragged row");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << cell_text(row[i]);
    }
    os << '\n';
  }
  return os.str();
}

void write_csv(const Table& table, const std::string& path,
               const std::string& run_id) {
  const std::string text = render(table, run_id);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("write failed for '" + path + "'");
  }
}

std::string content_hash(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xF];
    h >>= 4;
  }
  return std::string(buf, 16);
}

}  // namespace cohbench::csv
