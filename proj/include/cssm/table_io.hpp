#pragma once

// CSV tables with header rows. Missing values are empty fields or "NA" in any case.

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cssm {

struct TextTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws ParseError if absent.
  std::size_t column(const std::string& name) const;
};

struct NumericTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;  // NaN marks a missing cell
};

bool is_missing_token(const std::string& field);
/// Parses a number or missing token (NaN); ParseError carries 1-based file coordinates.
double parse_cell(const std::string& field, std::size_t row, std::size_t column);
/// 17 significant digits, so the value reads back exactly; NaN becomes "NA".
std::string format_double(double x);

TextTable read_text_csv(std::istream& is);
TextTable read_text_csv(const std::filesystem::path& path);
NumericTable read_numeric_csv(std::istream& is);
NumericTable read_numeric_csv(const std::filesystem::path& path);

void write_csv(std::ostream& os, const TextTable& table);
void write_csv(const std::filesystem::path& path, const TextTable& table);
void write_csv(std::ostream& os, const NumericTable& table);
void write_csv(const std::filesystem::path& path, const NumericTable& table);

}  // namespace cssm
