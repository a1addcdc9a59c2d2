#include "cvqkd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

#include "cvqkd/errors.hpp"

namespace cvqkd {
namespace {

std::string quote_cell(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_record(std::string_view line, std::string_view source, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ConfigError(fmt::format("{}:{}: unterminated quoted field", source, line_no));
  cells.push_back(trim(cur));
  return cells;
}

double parse_double(const std::string& cell, std::string_view source, std::size_t line_no) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || cell.empty() || !std::isfinite(v))
    throw ConfigError(fmt::format("{}:{}: '{}' is not a finite number", source, line_no, cell));
  return v;
}

}  // namespace

std::string format_number(double value) { return fmt::format("{}", value); }

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string metadata_line(const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string line = "# metadata:";
  for (const auto& [k, v] : fields) line += fmt::format(" {}={}", k, v);
  return line;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size())
    throw InternalError(fmt::format("CSV row has {} cells, header has {}", row.size(), header_.size()));
  rows_.push_back(std::move(row));
}

std::string CsvTable::render(const std::vector<std::string>& comments) const {
  std::string out;
  for (const auto& c : comments) {
    out += c;
    out += '\n';
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += quote_cell(cells[i]);
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

std::size_t CsvData::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError(fmt::format("CSV has no column '{}'", name));
  return static_cast<std::size_t>(it - header.begin());
}

CsvData parse_csv(std::string_view text, std::string_view source_name) {
  CsvData data;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split_record(line, source_name, line_no);
    if (!have_header) {
      data.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != data.header.size())
      throw ConfigError(fmt::format("{}:{}: expected {} fields, found {}", source_name, line_no, data.header.size(),
                                    cells.size()));
    data.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ConfigError(fmt::format("{}: no header row", source_name));
  return data;
}

std::vector<double> parse_eta_csv(std::string_view text, std::string_view source_name) {
  const CsvData data = parse_csv(text, source_name);
  const std::size_t col = data.column("eta");
  std::vector<double> eta;
  eta.reserve(data.rows.size());
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const double v = parse_double(data.rows[i][col], source_name, i + 2);
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(fmt::format("{}: eta = {} is outside [0, 1]", source_name, v));
    eta.push_back(v);
  }
  if (eta.empty()) throw ConfigError(fmt::format("{}: no samples", source_name));
  return eta;
}

std::vector<double> read_eta_csv(const std::filesystem::path& path) {
  return parse_eta_csv(read_file(path), path.string());
}

std::vector<Cn2Row> parse_cn2_series(std::string_view text, std::string_view source_name) {
  const CsvData data = parse_csv(text, source_name);
  const std::size_t label = data.column("hour");
  const std::size_t value = data.column("cn2");
  std::vector<Cn2Row> rows;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    Cn2Row r{data.rows[i][label], parse_double(data.rows[i][value], source_name, i + 2)};
    if (!(r.cn2 > 0.0)) throw ConfigError(fmt::format("{}: cn2 must be > 0 (row '{}')", source_name, r.label));
    if (!seen.insert(r.label).second) throw ConfigError(fmt::format("{}: duplicate label '{}'", source_name, r.label));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ConfigError(fmt::format("{}: empty series", source_name));
  return rows;
}

std::vector<Cn2Row> read_cn2_series(const std::filesystem::path& path) {
  return parse_cn2_series(read_file(path), path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(fmt::format("error reading '{}'", path.string()));
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError(fmt::format("error writing '{}'", path.string()));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(fmt::format("cannot move output into '{}'", path.string()));
  }
}

}  // namespace cvqkd
