#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rayreg/detection.hpp"
#include "rayreg/morphology.hpp"

using namespace rayreg;

namespace {

BinaryMask square(std::size_t rows, std::size_t cols, std::size_t r0, std::size_t c0, std::size_t side) {
  BinaryMask m(rows, cols);
  for (std::size_t r = r0; r < r0 + side; ++r)
    for (std::size_t c = c0; c < c0 + side; ++c) m.set(r, c, true);
  return m;
}

BinaryMask unite(BinaryMask a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a.set(i, a.at(i) || b.at(i));
  return a;
}

// Interior window that is unaffected by the zero padding at the borders.
bool equal_inside(const BinaryMask& a, const BinaryMask& b, std::size_t margin) {
  for (std::size_t r = margin; r + margin < a.rows(); ++r)
    for (std::size_t c = margin; c + margin < a.cols(); ++c)
      if (a(r, c) != b(r, c)) return false;
  return true;
}

BinaryMask pad(const BinaryMask& m, std::size_t p) {
  BinaryMask out(m.rows() + 2 * p, m.cols() + 2 * p);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out.set(r + p, c + p, m(r, c));
  return out;
}

}  // namespace

TEST(Morphology, MatchesSetDefinitionOnRandomMasks) {
  std::mt19937_64 gen(99);
  for (int t = 0; t < 200; ++t) {
    const BinaryMask m = oracle::random_mask(gen, 16, 16, 0.1 + 0.8 * (t % 9) / 8.0);
    for (int se : {1, 3, 5, 7}) {
      ASSERT_EQ(dilate(m, se), oracle::dilate(m, se)) << t << " " << se;
      ASSERT_EQ(erode(m, se), oracle::erode(m, se)) << t << " " << se;
      ASSERT_EQ(open(m, se), oracle::open(m, se)) << t << " " << se;
      ASSERT_EQ(close(m, se), oracle::close(m, se)) << t << " " << se;
    }
  }
}

TEST(Morphology, NonSquareImages) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 30; ++t) {
    const BinaryMask m = oracle::random_mask(gen, 5 + t % 7, 23 - t % 11, 0.5);
    EXPECT_EQ(dilate(m, 5), oracle::dilate(m, 5));
    EXPECT_EQ(erode(m, 3), oracle::erode(m, 3));
  }
}

TEST(Morphology, RejectsEvenOrZeroElement) {
  const BinaryMask m(4, 4);
  EXPECT_THROW(dilate(m, 0), DomainError);
  EXPECT_THROW(erode(m, 4), DomainError);
}

TEST(Morphology, OpeningIdempotent) {
  std::mt19937_64 gen(7);
  for (int t = 0; t < 100; ++t) {
    const BinaryMask m = oracle::random_mask(gen, 16, 16, 0.6);
    for (int se : {3, 5}) {
      const BinaryMask o = open(m, se);
      EXPECT_EQ(open(o, se), o);
    }
  }
}

TEST(Morphology, ClosingIdempotentAwayFromBorder) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 100; ++t) {
    // Background margin keeps the padded border from clipping the dilation.
    const BinaryMask m = pad(oracle::random_mask(gen, 12, 12, 0.4), 8);
    for (int se : {3, 5}) {
      const BinaryMask c = close(m, se);
      EXPECT_EQ(close(c, se), c);
    }
  }
}

TEST(Morphology, ErosionDilationDuality) {
  std::mt19937_64 gen(9);
  for (int t = 0; t < 100; ++t) {
    const BinaryMask m = oracle::random_mask(gen, 16, 16, 0.5);
    for (int se : {3, 5}) {
      // complement(erode(m)) = dilate(complement(m)) where the window stays inside
      EXPECT_TRUE(equal_inside(erode(m, se).complement(), dilate(m.complement(), se), se / 2));
    }
  }
}

TEST(Morphology, OrderingProperties) {
  std::mt19937_64 gen(10);
  for (int t = 0; t < 100; ++t) {
    const BinaryMask m = oracle::random_mask(gen, 16, 16, 0.5);
    const BinaryMask o = open(m, 3), c = close(m, 3), d = dilate(m, 3), e = erode(m, 3);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_LE(e.at(i), o.at(i));
      EXPECT_LE(o.at(i), m.at(i));
      EXPECT_LE(m.at(i), d.at(i));
    }
    (void)c;
  }
}

TEST(Morphology, SinglePixelRemovedByOpening) {
  BinaryMask m(9, 9);
  m.set(4, 4, true);
  EXPECT_EQ(open(m, 3).count(), 0u);
}

TEST(Morphology, BlobGrowsByHalfElementPerSide) {
  const BinaryMask blob = square(30, 30, 12, 12, 5);
  const BinaryMask grown = dilate(blob, 7);
  EXPECT_EQ(grown, square(30, 30, 9, 9, 11));
  EXPECT_EQ(open(blob, 3), blob);
}

TEST(Morphology, PostprocessJoinsBlobsEightApart) {
  // gap of 5 background pixels between two 5x5 blobs; dilation by 7 grows each by 3
  const BinaryMask m = unite(square(30, 40, 10, 5, 5), square(30, 40, 10, 15, 5));
  DetectorConfig cfg;
  const auto comps = connected_components(postprocess(m, cfg));
  EXPECT_EQ(comps.size(), 1u);
}

TEST(Morphology, PostprocessLeavesNoTinyComponents) {
  std::mt19937_64 gen(11);
  DetectorConfig cfg;
  for (int t = 0; t < 50; ++t) {
    const BinaryMask m = oracle::random_mask(gen, 40, 40, 0.2 + 0.01 * t);
    // smallest survivor is a 3x3 opening residue in a corner, dilated and clipped to 6x6
    for (const auto& c : connected_components(postprocess(m, cfg))) EXPECT_GE(c.pixels, 36u);
  }
}

TEST(Components, MatchUnionFindOracle) {
  std::mt19937_64 gen(12);
  for (int t = 0; t < 200; ++t) {
    const BinaryMask m = oracle::random_mask(gen, 16, 16, 0.05 + 0.5 * (t % 10) / 10.0);
    const auto got = connected_components(m);
    auto want = oracle::components(m);
    std::vector<oracle::Component> mine;
    for (const auto& c : got) mine.push_back({c.pixels, c.row, c.col});
    std::sort(mine.begin(), mine.end());
    ASSERT_EQ(mine.size(), want.size());
    for (std::size_t i = 0; i < mine.size(); ++i) {
      EXPECT_EQ(mine[i].pixels, want[i].pixels);
      EXPECT_NEAR(mine[i].row, want[i].row, 1e-12);
      EXPECT_NEAR(mine[i].col, want[i].col, 1e-12);
    }
  }
}

TEST(Components, DiagonalNeighboursConnect) {
  BinaryMask m(4, 4);
  m.set(0, 0, true);
  m.set(1, 1, true);
  m.set(2, 2, true);
  m.set(0, 3, true);
  const auto c = connected_components(m);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].pixels, 3u);
  EXPECT_DOUBLE_EQ(c[0].row, 1.0);
  EXPECT_EQ(c[1].pixels, 1u);
}

TEST(Merge, StrictlyCloserThanDistance) {
  const std::vector<Cluster> two{{0.0, 0.0, 4}, {0.0, 10.0, 4}};
  EXPECT_EQ(merge_clusters(two, 10.0).size(), 2u);
  const auto m = merge_clusters(two, 10.0 + 1e-9);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_DOUBLE_EQ(m[0].col, 5.0);
  EXPECT_EQ(m[0].pixels, 8u);
}

TEST(Merge, TransitiveChainsAndWeights) {
  const std::vector<Cluster> chain{{0.0, 0.0, 1}, {0.0, 6.0, 1}, {0.0, 12.0, 2}, {50.0, 50.0, 1}};
  const auto m = merge_clusters(chain, 10.0);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].pixels, 4u);
  EXPECT_DOUBLE_EQ(m[0].col, 7.5);
  EXPECT_DOUBLE_EQ(m[1].row, 50.0);
}

TEST(Merge, PixelMassConserved) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<Cluster> cs;
    for (int i = 0; i < 40; ++i) cs.push_back({u(gen), u(gen), 1 + static_cast<std::size_t>(gen() % 20)});
    std::size_t total = 0;
    for (const auto& c : cs) total += c.pixels;
    const auto m = merge_clusters(cs, 10.0);
    std::size_t merged_total = 0;
    for (const auto& c : m) merged_total += c.pixels;
    EXPECT_EQ(merged_total, total);
    EXPECT_LE(m.size(), cs.size());
  }
}
