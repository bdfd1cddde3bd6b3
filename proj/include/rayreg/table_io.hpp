#pragma once

// Headered CSV tables for tabular model data.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "rayreg/errors.hpp"
#include "rayreg/image_io.hpp"

namespace rayreg::io {

class Table {
 public:
  Table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows,
        std::vector<std::size_t> row_lines, std::vector<std::size_t> row_offsets)
      : header_(std::move(header)), rows_(std::move(rows)), lines_(std::move(row_lines)), offsets_(std::move(row_offsets)) {}

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return rows_.size(); }

  std::size_t column_index(const std::string& name) const {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) throw Error("column '" + name + "' not found");
    return static_cast<std::size_t>(it - header_.begin());
  }

  std::vector<std::string> text_column(const std::string& name) const {
    const std::size_t j = column_index(name);
    std::vector<std::string> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r[j]);
    return out;
  }

  Eigen::VectorXd numeric_column(const std::string& name) const {
    const std::size_t j = column_index(name);
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t i = 0; i < rows_.size(); ++i)
      out(static_cast<Eigen::Index>(i)) = parse_double(rows_[i][j], lines_[i], offsets_[i]);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
  std::vector<std::size_t> offsets_;
};

namespace detail {
inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
    if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
    out.emplace_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}
}  // namespace detail

inline Table parse_table(std::string_view text) {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines, offsets;
  std::size_t pos = 0, line = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view row = text.substr(pos, eol - pos);
    ++line;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (!row.empty() && row.front() != '#') {
      auto fields = detail::split_fields(row);
      if (header.empty()) {
        header = std::move(fields);
      } else {
        if (fields.size() != header.size())
          throw ParseError("row has " + std::to_string(fields.size()) + " fields, header has " +
                               std::to_string(header.size()),
                           line, pos);
        rows.push_back(std::move(fields));
        lines.push_back(line);
        offsets.push_back(pos);
      }
    }
    pos = eol + 1;
  }
  if (header.empty()) throw ParseError("missing header row", line, pos);
  return Table(std::move(header), std::move(rows), std::move(lines), std::move(offsets));
}

inline Table read_table(const std::string& path) {
  const std::string data = read_file(path);
  try {
    return parse_table(data);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line(), e.byte_offset());
  }
}

}  // namespace rayreg::io
