#pragma once

// CSV and file helpers shared by the command-line front end.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cvqkd {

/// Shortest round-trip decimal representation ("." separator).
std::string format_number(double value);

/// 64-bit FNV-1a hash.
std::uint64_t fnv1a64(std::string_view data);

/// `# metadata: key=value ...` with the pairs in the given order.
std::string metadata_line(const std::vector<std::pair<std::string, std::string>>& fields);

/// Header + rows, rendered RFC-4180 style (quoting only where needed).
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  /// Comment lines (each starting with '#') come first, then the header and rows.
  std::string render(const std::vector<std::string>& comments = {}) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parsed CSV: comment lines ('#') and blank lines are skipped, the first remaining
/// line is the header.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(std::string_view name) const;  // ConfigError if absent
};
CsvData parse_csv(std::string_view text, std::string_view source_name = "csv");

/// Single-column `eta` sample file; DomainError-free: bad cells raise ConfigError.
std::vector<double> read_eta_csv(const std::filesystem::path& path);
std::vector<double> parse_eta_csv(std::string_view text, std::string_view source_name = "csv");

struct Cn2Row {
  std::string label;
  double cn2;
};
/// Columns `hour` (any unique label) and `cn2` (> 0).
std::vector<Cn2Row> read_cn2_series(const std::filesystem::path& path);
std::vector<Cn2Row> parse_cn2_series(std::string_view text, std::string_view source_name = "csv");

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace cvqkd
