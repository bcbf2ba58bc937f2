#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace anisoflux {

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

// Comma-separated writer with a fixed header; values are formatted with
// format_double so identical runs produce identical bytes.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns);

  void row(std::initializer_list<double> values);
  void row(const std::vector<std::string>& cells);
  std::size_t columns() const { return columns_.size(); }

 private:
  std::ofstream out_;
  std::vector<std::string> columns_;
};

// Reads a CSV written by CsvWriter; header row excluded.
std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path);

}  // namespace anisoflux
