#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "gamerge/attention.hpp"
#include "gamerge/error.hpp"
#include "gamerge/merge.hpp"
#include "oracles.hpp"

using namespace gamerge;

namespace {

// Random labels on a layout: frame 0 gets no Src, specials stay Special.
PartitionLabels random_labels(std::mt19937_64& rng, int frames, int rows, int cols) {
  PartitionLabels p;
  p.layout = {frames, rows, cols, 5};
  p.labels.assign(static_cast<std::size_t>(p.layout.total()), TokenLabel::Special);
  p.per_frame.resize(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    for (int i = 0; i < rows * cols; ++i) {
      const auto roll = rng() % 10;
      TokenLabel l = roll < 1 ? TokenLabel::Salient : roll < 4 ? TokenLabel::Dst : TokenLabel::Src;
      if (f == 0 && l == TokenLabel::Src) l = TokenLabel::Dst;
      p.labels[static_cast<std::size_t>(p.layout.patch_index(f, i))] = l;
    }
  }
  return p;
}

MergePlan random_plan(std::mt19937_64& rng, const PartitionLabels& labels) {
  std::vector<int> dst;
  for (int i = 0; i < labels.layout.total(); ++i)
    if (labels.label(i) == TokenLabel::Dst) dst.push_back(i);
  MergePlan plan;
  plan.total_tokens = labels.layout.total();
  for (int i = 0; i < labels.layout.total(); ++i)
    if (labels.label(i) == TokenLabel::Src) plan.assignment.push_back({i, dst[rng() % dst.size()], 0.0});
  plan.finalize();
  return plan;
}

std::vector<double> row_of(const Matrix& m, int r) {
  return std::vector<double>(m.row(r).data(), m.row(r).data() + m.cols());
}

}  // namespace

TEST(Cosine, Examples) {
  const std::vector<double> a = {1.0, 2.0, -3.0};
  const std::vector<double> neg = {-1.0, -2.0, 3.0};
  const std::vector<double> x = {1.0, 0.0}, y = {0.0, 2.0};
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-12);
  EXPECT_EQ(cosine_similarity(x, y), 0.0);
  EXPECT_NEAR(cosine_similarity(a, neg), -1.0, 1e-12);
  const std::vector<double> zero = {0.0, 0.0, 0.0};
  EXPECT_EQ(cosine_similarity(a, zero), -1.0);
  EXPECT_THROW(cosine_similarity(a, x), ShapeError);
}

TEST(ComputePlan, SingleFrameKeepsEverything) {
  std::mt19937_64 rng(1);
  const std::vector<GaMap> maps = {GaMap{oracle::random_matrix(rng, 4, 4, 0, 1)}};
  const auto labels = build_partition(maps, 0.1);
  const MergePlan plan = compute_merge_plan(oracle::random_matrix(rng, 21, 8), labels, 0);
  EXPECT_TRUE(plan.assignment.empty());
  EXPECT_EQ(plan.merged_size(), 21);
  EXPECT_EQ(plan.keep_ratio(), 1.0);
}

TEST(ComputePlan, MatchesExhaustiveArgmax) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int frames = 1 + trial % 4, rows = 2 + trial % 3, cols = 2 + (trial / 3) % 3;
    const auto labels = random_labels(rng, frames, rows, cols);
    const Matrix feats = oracle::random_matrix(rng, labels.layout.total(), 8);
    const MergePlan plan = compute_merge_plan(feats, labels, 3);
    const auto expected = oracle::exhaustive_matching(feats, labels);
    ASSERT_EQ(plan.assignment.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(plan.assignment[i].src, expected[i].first);
      EXPECT_EQ(plan.assignment[i].dst, expected[i].second);
    }
    EXPECT_EQ(plan.built_at_layer, 3);
  }
}

TEST(ComputePlan, DuplicateFramesMatchAtSimilarityOne) {
  const auto frames = synth_scene({4, 56, 56, 0, Texture::Mixed, 3}, 8);
  const auto params = TokenizerParams::make(14, 32, 3, 1);
  std::vector<TokenGrid> grids;
  std::vector<GaMap> maps;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    grids.push_back(tokenize(frames[i], params));
    maps.push_back(compute_ga_map(frames[i], grids.back(), 14));
  }
  const auto labels = build_partition(maps, 0.1);
  const Matrix seq = pack_sequence(grids);
  const MergePlan plan = compute_merge_plan(seq, labels, 0);
  ASSERT_FALSE(plan.assignment.empty());
  for (const Assignment& a : plan.assignment) {
    EXPECT_GE(a.similarity, 1.0 - 1e-6);
    // The positional counterpart in frame 0 has identical features.
    const int local = labels.layout.local_of(a.src);
    const int counterpart = labels.layout.patch_index(0, local - 5);
    if (labels.label(counterpart) == TokenLabel::Dst) {
      EXPECT_LE(a.dst, counterpart);
      EXPECT_EQ(labels.layout.frame_of(a.dst), 0);
    }
  }
}

TEST(ComputePlan, StructuralInvariants) {
  std::mt19937_64 rng(3);
  const auto labels = random_labels(rng, 3, 4, 4);
  const MergePlan plan = compute_merge_plan(oracle::random_matrix(rng, labels.layout.total(), 8), labels, 0);
  std::set<int> srcs;
  for (const Assignment& a : plan.assignment) {
    EXPECT_EQ(labels.label(a.src), TokenLabel::Src);
    EXPECT_EQ(labels.label(a.dst), TokenLabel::Dst);
    EXPECT_TRUE(srcs.insert(a.src).second);
  }
  EXPECT_EQ(static_cast<int>(srcs.size()), labels.count(TokenLabel::Src));
  int group_total = 0;
  for (int g : plan.group_size) group_total += g;
  EXPECT_EQ(group_total, labels.layout.total());
  EXPECT_EQ(plan.merged_size() + static_cast<int>(srcs.size()), labels.layout.total());
}

TEST(ComputePlan, MinSimilarityKeepsPoorMatches) {
  std::mt19937_64 rng(4);
  const auto labels = random_labels(rng, 2, 4, 4);
  const Matrix feats = oracle::random_matrix(rng, labels.layout.total(), 8);
  const MergePlan all = compute_merge_plan(feats, labels, 0);
  const MergePlan strict = compute_merge_plan(feats, labels, 0, 0.999);
  EXPECT_LT(strict.assignment.size(), all.assignment.size());
  for (const Assignment& a : strict.assignment) EXPECT_GE(a.similarity, 0.999);
}

TEST(ComputePlan, Errors) {
  std::mt19937_64 rng(5);
  auto labels = random_labels(rng, 2, 2, 2);
  EXPECT_THROW(compute_merge_plan(Matrix::Zero(3, 8), labels, 0), ShapeError);
  for (auto& l : labels.labels)
    if (l == TokenLabel::Dst || l == TokenLabel::Salient) l = TokenLabel::Src;
  EXPECT_THROW(compute_merge_plan(Matrix::Ones(labels.layout.total(), 8), labels, 0), ShapeError);
}

TEST(ApplyMerge, EmptyAssignmentIsIdentity) {
  std::mt19937_64 rng(6);
  const Matrix x = oracle::random_matrix(rng, 9, 4);
  const MergePlan plan = MergePlan::identity(9);
  EXPECT_EQ(apply_merge(x, plan), x);
  EXPECT_EQ(apply_unmerge(apply_merge(x, plan), plan), x);
}

TEST(ApplyMerge, PairAveragesAndReplicates) {
  Matrix x(2, 3);
  x << 1, 2, 3, 5, 8, 13;
  MergePlan plan;
  plan.total_tokens = 2;
  plan.assignment = {{1, 0, 0.9}};
  plan.finalize();
  const Matrix merged = apply_merge(x, plan);
  ASSERT_EQ(merged.rows(), 1);
  EXPECT_EQ(merged(0, 0), 3.0);
  EXPECT_EQ(merged(0, 1), 5.0);
  EXPECT_EQ(merged(0, 2), 8.0);
  const Matrix back = apply_unmerge(merged, plan);
  EXPECT_EQ(back.row(0), merged.row(0));
  EXPECT_EQ(back.row(1), merged.row(0));
}

TEST(ApplyMerge, IdenticalSourcesLeaveDstUnchanged) {
  Matrix x(3, 2);
  x << 0.5, -1.5, 0.5, -1.5, 0.5, -1.5;
  MergePlan plan;
  plan.total_tokens = 3;
  plan.assignment = {{1, 0, 1.0}, {2, 0, 1.0}};
  plan.finalize();
  EXPECT_EQ(plan.group_size, std::vector<int>{3});
  EXPECT_EQ(apply_merge(x, plan).row(0), x.row(0));
}

TEST(ApplyMerge, Errors) {
  const MergePlan plan = MergePlan::identity(4);
  EXPECT_THROW(apply_merge(Matrix::Zero(3, 2), plan), ShapeError);
  EXPECT_THROW(apply_unmerge(Matrix::Zero(3, 2), plan), ShapeError);
  MergePlan bad;
  bad.total_tokens = 3;
  bad.assignment = {{1, 7, 0.0}};
  EXPECT_THROW(bad.finalize(), ShapeError);
  MergePlan chained;
  chained.total_tokens = 3;
  chained.assignment = {{1, 0, 0.0}, {2, 1, 0.0}};
  EXPECT_THROW(chained.finalize(), ShapeError);
}

TEST(MergeProperties, RandomPlans) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto labels = random_labels(rng, 1 + trial % 4, 1 + trial % 5, 2 + trial % 3);
    const MergePlan plan = random_plan(rng, labels);
    const Matrix x = oracle::random_matrix(rng, labels.layout.total(), 6);
    const Matrix merged = apply_merge(x, plan);
    const Matrix back = apply_unmerge(merged, plan);
    ASSERT_EQ(back.rows(), x.rows());
    for (int i = 0; i < x.rows(); ++i) {
      const TokenLabel l = labels.label(i);
      if (l == TokenLabel::Salient || l == TokenLabel::Special) EXPECT_EQ(back.row(i), x.row(i));
    }
    // Group mean preservation: each merged row is the mean of its members.
    for (int k = 0; k < plan.merged_size(); ++k) {
      RowVector sum = RowVector::Zero(6);
      int members = 0;
      for (int i = 0; i < x.rows(); ++i)
        if (plan.slot[static_cast<std::size_t>(i)] == k) {
          sum += x.row(i);
          ++members;
        }
      EXPECT_EQ(members, plan.group_size[static_cast<std::size_t>(k)]);
      EXPECT_LT((sum / members - merged.row(k)).cwiseAbs().maxCoeff(), 1e-12);
    }
    // Merging an already-unmerged sequence again changes nothing.
    EXPECT_LT((apply_merge(back, plan) - merged).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MergeProperties, PermutingSourcesWithinGroup) {
  Matrix x(4, 2);
  x << 1, 1, 2, 4, 8, 16, -3, 5;
  MergePlan a, b;
  a.total_tokens = b.total_tokens = 4;
  a.assignment = {{1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  a.finalize();
  // Swap features of the sources instead of the assignment order.
  Matrix y = x;
  y.row(1) = x.row(3);
  y.row(3) = x.row(1);
  EXPECT_LT((apply_merge(x, a) - apply_merge(y, a)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PlanCache, IntervalOneRecomputesEveryLayer) {
  std::mt19937_64 rng(8);
  const auto labels = random_labels(rng, 2, 2, 2);
  const Matrix f = oracle::random_matrix(rng, labels.layout.total(), 8);
  PlanCache cache(1);
  for (int l = 0; l < 8; ++l) EXPECT_EQ(cache.get_or_compute(l, f, labels).built_at_layer, l);
  EXPECT_EQ(cache.computations(), 8);
  EXPECT_EQ(cache.hits(), 0);
}

TEST(PlanCache, SinglePlanAcrossTwentyFourLayers) {
  std::mt19937_64 rng(9);
  const auto labels = random_labels(rng, 2, 2, 2);
  const Matrix f = oracle::random_matrix(rng, labels.layout.total(), 8);
  PlanCache cache(24);
  for (int l = 0; l < 24; ++l) EXPECT_EQ(cache.get_or_compute(l, f, labels).built_at_layer, 0);
  EXPECT_EQ(cache.computations(), 1);
  EXPECT_EQ(cache.hits(), 23);
}

TEST(PlanCache, GroupSchedule) {
  std::mt19937_64 rng(10);
  const auto labels = random_labels(rng, 3, 3, 3);
  const Matrix f = oracle::random_matrix(rng, labels.layout.total(), 8);
  for (int r : {1, 2, 3, 4, 6, 24}) {
    PlanCache cache(r);
    for (int l = 0; l < 24; ++l) {
      const MergePlan& plan = cache.get_or_compute(l, f, labels);
      EXPECT_EQ(plan.built_at_layer, (l / r) * r);
      // Features are frozen, so cached plans equal a fresh computation.
      const MergePlan fresh = compute_merge_plan(f, labels, l);
      EXPECT_EQ(plan.kept, fresh.kept);
      EXPECT_EQ(plan.slot, fresh.slot);
    }
    EXPECT_EQ(cache.computations(), 24 / r);
    cache.clear();
    EXPECT_EQ(cache.computations(), 0);
    EXPECT_TRUE(cache.plans().empty());
  }
  EXPECT_THROW(PlanCache(0), ConfigError);
}

TEST(PlanJson, RoundTrip) {
  std::mt19937_64 rng(11);
  const auto labels = random_labels(rng, 3, 2, 3);
  const MergePlan plan =
      compute_merge_plan(oracle::random_matrix(rng, labels.layout.total(), 8), labels, 5);
  const MergePlan back = plan_from_json(plan_to_json(plan));
  EXPECT_EQ(back.kept, plan.kept);
  EXPECT_EQ(back.group_size, plan.group_size);
  EXPECT_EQ(back.built_at_layer, 5);
  EXPECT_EQ(back.keep_ratio(), plan.keep_ratio());
  EXPECT_THROW(plan_from_json("{\"kept\": 3}"), FormatError);
}
