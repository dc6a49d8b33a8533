#include <gtest/gtest.h>

#include <random>
#include <set>

#include "gamerge/error.hpp"
#include "gamerge/ingest.hpp"
#include "gamerge/partition.hpp"
#include "oracles.hpp"

using namespace gamerge;

namespace {

GaMap ga_from(Matrix values) {
  return GaMap{std::move(values), 0.5, 0.5};
}

GaMap increasing(int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows * cols; ++i) m(i / cols, i % cols) = i;
  return ga_from(m);
}

}  // namespace

TEST(SelectSalient, ZeroFraction) {
  EXPECT_TRUE(select_salient(increasing(4, 4), 0.0).empty());
}

TEST(SelectSalient, TopTenOfHundred) {
  std::mt19937_64 rng(1);
  std::vector<double> vals(100);
  for (int i = 0; i < 100; ++i) vals[i] = i * 0.01;
  std::shuffle(vals.begin(), vals.end(), rng);
  Matrix m(10, 10);
  for (int i = 0; i < 100; ++i) m(i / 10, i % 10) = vals[i];
  const auto sel = select_salient(ga_from(m), 0.1);
  ASSERT_EQ(sel.size(), 10u);
  for (int idx : sel) EXPECT_GE(m(idx / 10, idx % 10), 0.895);
}

TEST(SelectSalient, TiesPreferLowerIndex) {
  const auto sel = select_salient(ga_from(Matrix::Constant(4, 4, 0.5)), 0.25);
  EXPECT_EQ(sel, (std::vector<int>{0, 1, 2, 3}));
}

TEST(SelectSalient, CeilOfFraction) {
  EXPECT_EQ(select_salient(increasing(28, 37), 0.1).size(), 104u);
  EXPECT_EQ(select_salient(increasing(10, 10), 0.07).size(), 7u);
  EXPECT_EQ(select_salient(increasing(3, 3), 0.999).size(), 9u);
  EXPECT_THROW(select_salient(increasing(2, 2), 1.0), ConfigError);
}

TEST(SelectDst, FirstFrameTakesEverything) {
  const auto dst = select_dst(increasing(4, 4), {}, 0);
  EXPECT_EQ(dst.size(), 16u);
}

TEST(SelectDst, FirstFrameExcludesSalient) {
  const std::vector<int> salient = {3, 7};
  const auto dst = select_dst(increasing(4, 4), salient, 0);
  EXPECT_EQ(dst.size(), 14u);
  EXPECT_EQ(std::count(dst.begin(), dst.end(), 3), 0);
}

TEST(SelectDst, LowestScorePerCell) {
  EXPECT_EQ(select_dst(increasing(4, 4), {}, 1), (std::vector<int>{0, 2, 8, 10}));
}

TEST(SelectDst, FullySalientCellYieldsNothing) {
  const std::vector<int> salient = {0, 1, 4, 5};
  EXPECT_EQ(select_dst(increasing(4, 4), salient, 1), (std::vector<int>{2, 8, 10}));
}

TEST(SelectDst, SalientTokenSkippedWithinCell) {
  const std::vector<int> salient = {0};
  EXPECT_EQ(select_dst(increasing(4, 4), salient, 2), (std::vector<int>{1, 2, 8, 10}));
}

TEST(SelectDst, TiesPreferLowerIndex) {
  Matrix m = Matrix::Constant(2, 2, 1.0);
  m(0, 1) = 0.0;
  m(1, 0) = 0.0;
  EXPECT_EQ(select_dst(ga_from(m), {}, 1), (std::vector<int>{1}));
}

TEST(SelectDst, OddLatticeCoverage) {
  // 3x5 lattice: cells of 2x2, 2x1, 1x2 and 1x1.
  const auto dst = select_dst(increasing(3, 5), {}, 1);
  EXPECT_EQ(dst, (std::vector<int>{0, 2, 4, 10, 12, 14}));
}

TEST(BuildPartition, SingleFrameHasNoSrc) {
  const std::vector<GaMap> maps = {increasing(4, 6)};
  const auto p = build_partition(maps, 0.1);
  EXPECT_EQ(p.count(TokenLabel::Src), 0);
  EXPECT_EQ(p.count(TokenLabel::Special), 5);
  EXPECT_EQ(p.per_frame[0].salient + p.per_frame[0].dst, 24);
}

TEST(BuildPartition, CountsPerLaterFrame) {
  std::mt19937_64 rng(5);
  std::vector<GaMap> maps;
  // Cell position dominates the score, so salient tokens never fill a cell.
  for (int f = 0; f < 4; ++f) {
    Matrix m = oracle::random_matrix(rng, 8, 10, 0, 1);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 10; ++c) m(r, c) += 10.0 * ((r % 2) * 2 + (c % 2));
    maps.push_back(ga_from(m));
  }
  const auto p = build_partition(maps, 0.1);
  const int n = 80;
  for (int f = 1; f < 4; ++f) {
    const FrameCounts& c = p.per_frame[static_cast<std::size_t>(f)];
    EXPECT_EQ(c.salient, 8);
    EXPECT_EQ(c.dst, 20);
    EXPECT_EQ(c.src, n - c.salient - c.dst);
  }
  EXPECT_EQ(p.per_frame[0].src, 0);
  const auto pc = oracle::count_partition(maps, 0.1, 5);
  EXPECT_EQ(pc.src, p.count(TokenLabel::Src));
}

TEST(BuildPartition, ExhaustiveAndExclusive) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 1 + trial % 6, cols = 1 + (trial * 3) % 7, frames = 1 + trial % 4;
    std::vector<GaMap> maps;
    for (int f = 0; f < frames; ++f) maps.push_back(ga_from(oracle::random_matrix(rng, rows, cols, 0, 1)));
    const double fraction = 0.05 * (trial % 10);
    const auto p = build_partition(maps, fraction);
    ASSERT_EQ(static_cast<int>(p.labels.size()), frames * (rows * cols + 5));
    int sum = 0;
    for (const auto& c : p.per_frame) sum += c.salient + c.dst + c.src;
    EXPECT_EQ(sum + 5 * frames, p.layout.total());
    EXPECT_EQ(p.count(TokenLabel::Salient) + p.count(TokenLabel::Dst) + p.count(TokenLabel::Src) +
                  p.count(TokenLabel::Special),
              p.layout.total());
    for (int k = 0; k < 5; ++k) EXPECT_EQ(p.label(p.layout.special_index(frames - 1, k)), TokenLabel::Special);
    for (int i = 0; i < rows * cols; ++i) EXPECT_NE(p.patch_label(0, i), TokenLabel::Src);
    const auto pc = oracle::count_partition(maps, fraction, 5);
    EXPECT_EQ(pc.src, p.count(TokenLabel::Src));
  }
}

TEST(BuildPartition, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(7);
  std::vector<GaMap> maps, transformed;
  for (int f = 0; f < 3; ++f) {
    Matrix m = oracle::random_matrix(rng, 6, 6, 0, 1);
    maps.push_back(ga_from(m));
    transformed.push_back(ga_from((m.array().cube() * 3.0 + 1.0).matrix()));
  }
  EXPECT_EQ(build_partition(maps, 0.15).labels, build_partition(transformed, 0.15).labels);
}

TEST(LabelRaster, Values) {
  const std::vector<GaMap> maps = {increasing(2, 2), increasing(2, 2)};
  const auto p = build_partition(maps, 0.25);
  const Matrix r = label_raster(p, 1);
  // Frame 1: token 3 salient, token 0 dst, tokens 1 and 2 src.
  EXPECT_DOUBLE_EQ(r(1, 1) * 255.0, 255.0);
  EXPECT_DOUBLE_EQ(r(0, 0) * 255.0, 170.0);
  EXPECT_DOUBLE_EQ(r(0, 1) * 255.0, 85.0);
}
