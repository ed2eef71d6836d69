#include "cssm/table_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "cssm/errors.hpp"

namespace cssm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
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
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

std::size_t TextTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("missing column '" + name + "'", 1, 0);
  return static_cast<std::size_t>(it - header.begin());
}

bool is_missing_token(const std::string& field) {
  const std::string f = trim(field);
  if (f.empty()) return true;
  return f.size() == 2 && std::toupper(static_cast<unsigned char>(f[0])) == 'N' &&
         std::toupper(static_cast<unsigned char>(f[1])) == 'A';
}

double parse_cell(const std::string& field, std::size_t row, std::size_t column) {
  if (is_missing_token(field)) return std::numeric_limits<double>::quiet_NaN();
  const std::string f = trim(field);
  double v = 0.0;
  const char* first = f.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
    throw ParseError("cannot parse '" + f + "' as a number", row, column);
  return v;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

TextTable read_text_csv(std::istream& is) {
  TextTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno, std::min(fields.size(), t.header.size()) + 1);
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw ParseError("empty CSV input (no header row)", 1, 1);
  return t;
}

TextTable read_text_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string() + " for reading");
  try {
    return read_text_csv(is);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.row(), e.column());
  }
}

NumericTable read_numeric_csv(std::istream& is) {
  const TextTable t = read_text_csv(is);
  NumericTable n;
  n.header = t.header;
  n.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.header.size(); ++c)
      n.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_cell(t.rows[r][c], r + 2, c + 1);
  return n;
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string() + " for reading");
  try {
    return read_numeric_csv(is);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.row(), e.column());
  }
}

void write_csv(std::ostream& os, const TextTable& table) {
  for (std::size_t c = 0; c < table.header.size(); ++c) os << (c ? "," : "") << quote_if_needed(table.header[c]);
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << quote_if_needed(row[c]);
    os << "\n";
  }
}

void write_csv(std::ostream& os, const NumericTable& table) {
  for (std::size_t c = 0; c < table.header.size(); ++c) os << (c ? "," : "") << quote_if_needed(table.header[c]);
  os << "\n";
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) os << (c ? "," : "") << format_double(table.values(r, c));
    os << "\n";
  }
}

namespace {

template <class Table>
void write_file(const std::filesystem::path& path, const Table& table) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(os, table);
  os.flush();
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_csv(const std::filesystem::path& path, const TextTable& table) { write_file(path, table); }
void write_csv(const std::filesystem::path& path, const NumericTable& table) { write_file(path, table); }

}  // namespace cssm
