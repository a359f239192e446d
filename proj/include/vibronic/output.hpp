// output.hpp - deterministic CSV text and file checksums.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vibronic {

// Bumped whenever a column is added, removed or reordered.
inline constexpr int kCsvSchemaVersion = 1;

// "%.12g"; non-finite values become "nan", "inf" or "-inf".
std::string format_number(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row(const std::vector<double>& values);
  // Mixed text/number rows; numbers should already be formatted.
  CsvTable& text_row(const std::vector<std::string>& cells);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_; }
  // Header line plus rows, LF line endings.
  const std::string& str() const { return text_; }

 private:
  std::vector<std::string> header_;
  std::string text_;
  std::size_t rows_ = 0;
};

std::string sha256_hex(std::string_view bytes);

struct WrittenFile {
  std::string name;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

// Writes `content` as binary and returns its checksum.
WrittenFile write_file(const std::filesystem::path& dir, const std::string& name, const std::string& content);

}  // namespace vibronic
