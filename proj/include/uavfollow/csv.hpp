#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uavfollow::csv {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form.
std::string format(double v);

/// Comma-separated table with a header row. Empty cells are allowed.
class Table {
 public:
  static Table read(const std::filesystem::path& path);
  static Table parse(std::string_view text, std::string source = "<memory>");

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return cells_.size(); }
  std::optional<std::size_t> find(std::string_view column) const;
  /// Throws ParseError when none of the names is present.
  std::size_t column(std::initializer_list<std::string_view> names) const;

  const std::string& cell(std::size_t row, std::size_t col) const { return cells_[row][col]; }
  bool empty_cell(std::size_t row, std::size_t col) const { return cells_[row][col].empty(); }
  /// Throws ParseError naming the file, line and column.
  double number(std::size_t row, std::size_t col) const;
  long integer(std::size_t row, std::size_t col) const;
  std::optional<double> optional_number(std::size_t row, std::size_t col) const;

  /// 1-based line number in the source for a data row.
  std::size_t line_of(std::size_t row) const { return row + 2; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
};

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

  Writer& operator<<(double v);
  Writer& operator<<(long v);
  Writer& operator<<(int v) { return *this << static_cast<long>(v); }
  Writer& operator<<(std::string_view v);
  Writer& operator<<(const std::optional<double>& v);
  /// Terminates the current row.
  void end_row();

 private:
  void separate();
  std::ofstream out_;
  bool row_started_ = false;
};

}  // namespace uavfollow::csv
