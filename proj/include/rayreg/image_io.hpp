#pragma once

// Image and mask file formats.
//
//   CSV   one image row per line, comma-separated reals.
//   RRM1  "RRM1", uint32 rows, uint32 cols (little endian), then rows*cols
//         little-endian IEEE-754 doubles in row-major order.
//   PGM   binary P5, maxval 255, anomalous pixels 255 (masks only).

#include <algorithm>
#include <array>
#include <cctype>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rayreg/detection.hpp"
#include "rayreg/errors.hpp"
#include "rayreg/morphology.hpp"

namespace rayreg::io {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed for '" + path + "'");
}

// Shortest decimal representation that round-trips.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view field, std::size_t line, std::size_t offset) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
    field.remove_prefix(1);
    ++offset;
  }
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') {
    field.remove_prefix(1);
    ++offset;
  }
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size())
    throw ParseError("invalid number '" + std::string(field) + "'", line, offset);
  return v;
}

// ---- CSV images ----

inline ImageMatrix parse_csv_image(std::string_view text) {
  std::vector<double> px;
  std::size_t cols = 0, rows = 0, line = 0, pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view row = text.substr(pos, eol - pos);
    ++line;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (!row.empty()) {
      std::size_t n = 0, start = 0;
      while (true) {
        const std::size_t comma = row.find(',', start);
        const std::string_view field = row.substr(start, comma == std::string_view::npos ? row.size() - start : comma - start);
        px.push_back(parse_double(field, line, pos + start));
        ++n;
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (rows == 0)
        cols = n;
      else if (n != cols)
        throw ParseError("row has " + std::to_string(n) + " values, expected " + std::to_string(cols), line, pos);
      ++rows;
    }
    pos = eol + 1;
  }
  if (rows == 0) throw ParseError("empty image", line, pos);
  return ImageMatrix(rows, cols, std::move(px));
}

inline std::string to_csv(const ImageMatrix& img) {
  std::string out;
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t c = 0; c < img.cols(); ++c) {
      if (c) out += ',';
      out += format_double(img(r, c));
    }
    out += '\n';
  }
  return out;
}

// ---- RRM1 binary images ----

namespace detail {
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xffu);
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xffu);
}
inline std::uint64_t get_le(std::string_view s, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[at + i])) << (8 * i);
  return v;
}
}  // namespace detail

inline std::string to_rrm(const ImageMatrix& img) {
  std::string out = "RRM1";
  out.reserve(12 + 8 * img.size());
  detail::put_u32(out, static_cast<std::uint32_t>(img.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(img.cols()));
  for (double v : img.pixels()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline ImageMatrix parse_rrm(std::string_view data) {
  if (data.size() < 12 || data.substr(0, 4) != "RRM1") throw ParseError("missing RRM1 magic", 1, 0);
  const auto rows = static_cast<std::size_t>(detail::get_le(data, 4, 4));
  const auto cols = static_cast<std::size_t>(detail::get_le(data, 8, 4));
  const std::size_t expected = 12 + 8 * rows * cols;
  if (data.size() != expected)
    throw ParseError("RRM1 payload is " + std::to_string(data.size()) + " bytes, expected " + std::to_string(expected), 1,
                     std::min(data.size(), expected));
  std::vector<double> px(rows * cols);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = std::bit_cast<double>(detail::get_le(data, 12 + 8 * i, 8));
  return ImageMatrix(rows, cols, std::move(px));
}

// Format chosen by content: RRM1 magic, otherwise CSV.
inline ImageMatrix read_image(const std::string& path) {
  const std::string data = read_file(path);
  try {
    if (data.size() >= 4 && data.compare(0, 4, "RRM1") == 0) return parse_rrm(data);
    return parse_csv_image(data);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line(), e.byte_offset());
  } catch (const DomainError& e) {
    throw DomainError(path + ": " + e.what());
  }
}

inline void write_image(const std::string& path, const ImageMatrix& img, bool binary) {
  write_file(path, binary ? to_rrm(img) : to_csv(img));
}

// ---- masks ----

inline std::string to_pgm(const BinaryMask& m) {
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n255\n";
  out.reserve(out.size() + m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out += static_cast<char>(m.at(i) ? 0xff : 0x00);
  return out;
}

inline BinaryMask parse_pgm(std::string_view data) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    return data.substr(start, pos - start);
  };
  if (token() != "P5") throw ParseError("not a binary PGM (P5)", 1, 0);
  const auto cols = static_cast<std::size_t>(parse_double(token(), 1, pos));
  const auto rows = static_cast<std::size_t>(parse_double(token(), 1, pos));
  if (token() != "255") throw ParseError("PGM maxval must be 255", 1, pos);
  ++pos;  // single whitespace before the raster
  if (data.size() - pos != rows * cols) throw ParseError("PGM raster size mismatch", 1, pos);
  BinaryMask m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) m.set(i, static_cast<unsigned char>(data[pos + i]) != 0);
  return m;
}

inline std::string to_csv(const BinaryMask& m) {
  std::string out;
  out.reserve(m.size() * 2);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += m(r, c) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

}  // namespace rayreg::io
