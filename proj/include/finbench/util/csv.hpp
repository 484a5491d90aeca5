#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace finbench {

// Minimal CSV support: comma-separated, no quoting (market data exports in
// this project never embed commas). Empty cells are preserved as empty
// strings so callers can distinguish "missing" from "unparsable".
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number of each data row in the source file.
  std::vector<int> line_numbers;

  std::optional<int> column(std::string_view name) const;
};

CsvTable read_csv(const std::string& path);

std::vector<std::string> split_csv_line(std::string_view line);

// Shortest round-trip representation of a double.
std::string format_double(double x);

// Epoch seconds, ISO date (YYYY-MM-DD), or ISO datetime
// (YYYY-MM-DD[T ]HH:MM:SS, UTC). Returns nullopt on malformed input.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

std::optional<double> parse_double(std::string_view text);

}  // namespace finbench
