#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rayreg {

// Base class for every error the library throws on contract violations that
// depend on data (as opposed to programming errors, which use std::logic_error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Identity-link predictor produced mu <= 0 at a given observation.
class NonPositiveMeanError : public Error {
 public:
  explicit NonPositiveMeanError(std::size_t index)
      : Error("non-positive mean at observation " + std::to_string(index)), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Response values outside the Rayleigh support (y <= 0).
class NonPositiveResponseError : public Error {
 public:
  explicit NonPositiveResponseError(std::vector<std::size_t> indices)
      : Error(describe(indices)), indices_(std::move(indices)) {}
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }

 private:
  static std::string describe(const std::vector<std::size_t>& idx) {
    std::string msg = std::to_string(idx.size()) + " non-positive response value(s)";
    if (!idx.empty()) {
      msg += " at index";
      for (std::size_t i = 0; i < idx.size() && i < 10; ++i) msg += " " + std::to_string(idx[i]);
      if (idx.size() > 10) msg += " ...";
    }
    return msg;
  }
  std::vector<std::size_t> indices_;
};

class RankDeficientError : public Error {
 public:
  using Error::Error;
};

class DegenerateDesignError : public Error {
 public:
  using Error::Error;
};

class NotConvergedError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; line is 1-based, byte_offset is from the start of the file.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t byte_offset)
      : Error(what + " (line " + std::to_string(line) + ", byte " + std::to_string(byte_offset) + ")"),
        line_(line),
        byte_offset_(byte_offset) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t line_;
  std::size_t byte_offset_;
};

}  // namespace rayreg
