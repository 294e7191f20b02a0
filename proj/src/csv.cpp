#include "uavfollow/csv.hpp"

#include <array>
#include <charconv>
#include <sstream>

namespace uavfollow::csv {

std::string format(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
      cell.remove_suffix(1);
    }
    out.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Table Table::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(path.string() + ": cannot open");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

Table Table::parse(std::string_view text, std::string source) {
  Table t;
  t.source_ = std::move(source);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
    ++line_no;
    pos = nl == text.npos ? text.size() + 1 : nl + 1;
    if (line.empty() || line == "\r") {
      continue;
    }
    auto cells = split(line);
    if (!have_header) {
      t.header_ = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header_.size()) {
      throw ParseError(t.source_ + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(t.header_.size()) + " fields, got " +
                       std::to_string(cells.size()));
    }
    t.cells_.push_back(std::move(cells));
  }
  if (!have_header) {
    throw ParseError(t.source_ + ": missing header row");
  }
  return t;
}

std::optional<std::size_t> Table::find(std::string_view column) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == column) return i;
  }
  return std::nullopt;
}

std::size_t Table::column(std::initializer_list<std::string_view> names) const {
  for (auto n : names) {
    if (auto i = find(n)) return *i;
  }
  std::string list;
  for (auto n : names) {
    list += (list.empty() ? "" : "|") + std::string(n);
  }
  throw ParseError(source_ + ": missing column " + list);
}

double Table::number(std::size_t row, std::size_t col) const {
  const std::string& s = cells_[row][col];
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(source_ + ":" + std::to_string(line_of(row)) + ": column '" + header_[col] +
                     "' is not a number: '" + s + "'");
  }
  return v;
}

long Table::integer(std::size_t row, std::size_t col) const {
  const std::string& s = cells_[row][col];
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(source_ + ":" + std::to_string(line_of(row)) + ": column '" + header_[col] +
                     "' is not an integer: '" + s + "'");
  }
  return v;
}

std::optional<double> Table::optional_number(std::size_t row, std::size_t col) const {
  if (empty_cell(row, col)) return std::nullopt;
  return number(row, col);
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) {
    throw std::runtime_error(path.string() + ": cannot open for writing");
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    out_ << (i ? "," : "") << header[i];
  }
  out_ << '\n';
}

void Writer::separate() {
  if (row_started_) out_ << ',';
  row_started_ = true;
}

Writer& Writer::operator<<(double v) {
  separate();
  out_ << format(v);
  return *this;
}

Writer& Writer::operator<<(long v) {
  separate();
  out_ << v;
  return *this;
}

Writer& Writer::operator<<(std::string_view v) {
  separate();
  out_ << v;
  return *this;
}

Writer& Writer::operator<<(const std::optional<double>& v) {
  separate();
  if (v) out_ << format(*v);
  return *this;
}

void Writer::end_row() {
  out_ << '\n';
  row_started_ = false;
}

}  // namespace uavfollow::csv
