#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fvgm {

/// Column-major table of Boolean observations.
class BoolDataset {
 public:
  BoolDataset() = default;
  explicit BoolDataset(std::vector<std::string> columns);

  void add_row(const std::vector<std::uint8_t>& row);

  const std::vector<std::string>& columns() const { return names_; }
  std::size_t num_rows() const { return rows_; }
  std::size_t num_columns() const { return names_.size(); }
  bool has_column(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;
  const std::vector<std::uint8_t>& column(std::size_t index) const { return data_[index]; }
  const std::vector<std::uint8_t>& column(const std::string& name) const { return data_[column_index(name)]; }
  std::uint8_t at(std::size_t row, std::size_t col) const { return data_[col][row]; }

  /// Rows whose index is listed, in the listed order.
  BoolDataset select_rows(const std::vector<std::size_t>& rows) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::uint8_t>> data_;
  std::size_t rows_ = 0;
};

/// A raw CSV table. Cells are kept as text; numeric access parses on demand.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for diagnostics.
  std::vector<std::size_t> lines;

  std::size_t column_index(const std::string& name) const;
  bool has_column(const std::string& name) const;
  /// Parses every cell of a column as a double; throws InputError with the line number on failure.
  std::vector<double> numeric_column(const std::string& name) const;
  const std::string& cell(std::size_t row, std::size_t col) const { return rows[row][col]; }
};

/// Parses comma-separated text with a header row. Double-quoted fields may contain commas.
Table parse_csv(const std::string& text);
Table read_csv(const std::string& path);
std::string write_csv(const Table& table);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// FNV-1a 64-bit digest, hex encoded.
std::string content_hash(const std::string& bytes);

}  // namespace fvgm
