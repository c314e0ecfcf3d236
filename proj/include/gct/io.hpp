#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gct {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws IoError when absent.
  std::size_t column(std::string_view name) const;
};

/// 9 significant digits; NaN becomes the empty string.
std::string format_float(double x);
/// Empty field -> NaN. Throws IoError on malformed numbers.
double parse_float(std::string_view field);

/// RFC 4180 quoting for fields with commas, quotes or newlines; LF line ends.
std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

void write_text(const std::string& path, std::string_view text);
std::string read_text(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace gct
