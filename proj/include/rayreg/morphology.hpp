#pragma once

// Binary morphology with filled square structuring elements and background
// (zero) padding, plus 8-connected component labelling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rayreg/errors.hpp"

namespace rayreg {

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t rows, std::size_t cols, bool value = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, value ? 1 : 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { bits_[r * cols_ + c] = v ? 1 : 0; }
  bool at(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t count() const { return static_cast<std::size_t>(std::accumulate(bits_.begin(), bits_.end(), std::size_t{0})); }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  BinaryMask complement() const {
    BinaryMask out(rows_, cols_);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] ? 0 : 1;
    return out;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

namespace detail {

inline void check_se(std::size_t se) {
  if (se == 0 || se % 2 == 0) throw DomainError("structuring element size must be odd and >= 1");
}

// One separable pass of a square element along rows (horizontal) or columns.
// For dilation the output is the OR over the window clipped to the image; for
// erosion it is the AND over the full window, with outside pixels counting as 0.
inline BinaryMask pass(const BinaryMask& in, std::size_t se, bool horizontal, bool dilation) {
  const auto half = static_cast<std::ptrdiff_t>(se / 2);
  const auto rows = static_cast<std::ptrdiff_t>(in.rows());
  const auto cols = static_cast<std::ptrdiff_t>(in.cols());
  BinaryMask out(in.rows(), in.cols());
  const std::ptrdiff_t lines = horizontal ? rows : cols;
  const std::ptrdiff_t len = horizontal ? cols : rows;
  std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
  for (std::ptrdiff_t l = 0; l < lines; ++l) {
    auto get = [&](std::ptrdiff_t p) {
      return horizontal ? in(static_cast<std::size_t>(l), static_cast<std::size_t>(p))
                        : in(static_cast<std::size_t>(p), static_cast<std::size_t>(l));
    };
    prefix[0] = 0;
    for (std::ptrdiff_t p = 0; p < len; ++p) prefix[static_cast<std::size_t>(p) + 1] = prefix[static_cast<std::size_t>(p)] + (get(p) ? 1 : 0);
    for (std::ptrdiff_t p = 0; p < len; ++p) {
      const std::ptrdiff_t lo = p - half;
      const std::ptrdiff_t hi = p + half;
      bool v;
      if (dilation) {
        const std::ptrdiff_t a = std::max<std::ptrdiff_t>(lo, 0);
        const std::ptrdiff_t b = std::min<std::ptrdiff_t>(hi, len - 1);
        v = prefix[static_cast<std::size_t>(b) + 1] - prefix[static_cast<std::size_t>(a)] > 0;
      } else {
        v = lo >= 0 && hi < len &&
            prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)] == static_cast<int>(se);
      }
      if (horizontal)
        out.set(static_cast<std::size_t>(l), static_cast<std::size_t>(p), v);
      else
        out.set(static_cast<std::size_t>(p), static_cast<std::size_t>(l), v);
    }
  }
  return out;
}

}  // namespace detail

inline BinaryMask dilate(const BinaryMask& m, std::size_t se) {
  detail::check_se(se);
  return detail::pass(detail::pass(m, se, true, true), se, false, true);
}

inline BinaryMask erode(const BinaryMask& m, std::size_t se) {
  detail::check_se(se);
  return detail::pass(detail::pass(m, se, true, false), se, false, false);
}

inline BinaryMask open(const BinaryMask& m, std::size_t se) { return dilate(erode(m, se), se); }

inline BinaryMask close(const BinaryMask& m, std::size_t se) { return erode(dilate(m, se), se); }

struct Cluster {
  double row = 0.0;  // centroid
  double col = 0.0;
  std::size_t pixels = 0;
};

// 8-connected components of the foreground, ordered by their first pixel in
// row-major order.
inline std::vector<Cluster> connected_components(const BinaryMask& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  std::vector<int> label(m.size(), -1);
  std::vector<Cluster> out;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < m.size(); ++start) {
    if (!m.at(start) || label[start] >= 0) continue;
    const int id = static_cast<int>(out.size());
    double sr = 0.0, sc = 0.0;
    std::size_t n = 0;
    stack.assign(1, start);
    label[start] = id;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t r = p / cols;
      const std::size_t c = p % cols;
      sr += static_cast<double>(r);
      sc += static_cast<double>(c);
      ++n;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const auto nr = static_cast<std::ptrdiff_t>(r) + dr;
          const auto nc = static_cast<std::ptrdiff_t>(c) + dc;
          if (nr < 0 || nc < 0 || nr >= static_cast<std::ptrdiff_t>(rows) || nc >= static_cast<std::ptrdiff_t>(cols))
            continue;
          const std::size_t q = static_cast<std::size_t>(nr) * cols + static_cast<std::size_t>(nc);
          if (m.at(q) && label[q] < 0) {
            label[q] = id;
            stack.push_back(q);
          }
        }
      }
    }
    out.push_back(Cluster{sr / static_cast<double>(n), sc / static_cast<double>(n), n});
  }
  return out;
}

// Merge clusters whose centroids are closer than `distance` (strictly), taking
// the transitive closure. Merged centroids are pixel-weighted.
inline std::vector<Cluster> merge_clusters(const std::vector<Cluster>& clusters, double distance) {
  const std::size_t n = clusters.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::hypot(clusters[i].row - clusters[j].row, clusters[i].col - clusters[j].col);
      if (d < distance) {
        const std::size_t a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<Cluster> out;
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<std::ptrdiff_t>(out.size());
      out.push_back(Cluster{0.0, 0.0, 0});
    }
    Cluster& c = out[static_cast<std::size_t>(slot[root])];
    c.row += clusters[i].row * static_cast<double>(clusters[i].pixels);
    c.col += clusters[i].col * static_cast<double>(clusters[i].pixels);
    c.pixels += clusters[i].pixels;
  }
  for (auto& c : out) {
    c.row /= static_cast<double>(c.pixels);
    c.col /= static_cast<double>(c.pixels);
  }
  return out;
}

}  // namespace rayreg
