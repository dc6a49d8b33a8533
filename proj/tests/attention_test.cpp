#include <gtest/gtest.h>

#include <random>

#include "gamerge/attention.hpp"
#include "gamerge/error.hpp"
#include "oracles.hpp"

using namespace gamerge;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.layers = 4;
  c.heads = 4;
  c.dim = 32;
  c.seed = 3;
  return c;
}

std::vector<ImageFrame> small_scene(int frames, int shift = 3) {
  return synth_scene({frames, 56, 70, shift, Texture::Mixed, 3}, 21);
}

bool bit_equal(const ForwardOutput& a, const ForwardOutput& b) {
  if (a.dense.size() != b.dense.size()) return false;
  for (std::size_t f = 0; f < a.dense.size(); ++f)
    if (a.dense[f] != b.dense[f] || a.specials[f] != b.specials[f]) return false;
  return true;
}

}  // namespace

TEST(Model, BuildIsDeterministic) {
  const Model a = build_model(small_config());
  const Model b = build_model(small_config());
  ASSERT_EQ(a.layers.size(), 4u);
  EXPECT_EQ(a.layers[2].wq, b.layers[2].wq);
  EXPECT_EQ(a.head, b.head);
  ModelConfig other = small_config();
  other.seed = 4;
  EXPECT_NE(build_model(other).layers[0].wq, a.layers[0].wq);
}

TEST(Model, ConfigValidation) {
  ModelConfig c;
  EXPECT_EQ(c.head_dim(), 16);
  c.dim = 60;
  c.heads = 8;
  EXPECT_THROW(c.validate(), ConfigError);
  ModelConfig odd;
  odd.layers = 3;
  EXPECT_THROW(build_model(odd), ConfigError);
}

TEST(Attention, SingleTokenAttendsToItself) {
  const Model model = build_model(small_config());
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(rng, 1, 32);
  const LayerWeights& w = model.layers[0];
  const Matrix normed = layer_norm(x, w.norm1_scale, w.norm1_shift);
  const Matrix expected = (normed * w.wv) * w.wo;
  EXPECT_LT((attention_core(normed, w, 4) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Attention, IdenticalTokensGiveIdenticalOutputs) {
  const Model model = build_model(small_config());
  std::mt19937_64 rng(2);
  const Matrix one = oracle::random_matrix(rng, 1, 32);
  const Matrix x = one.replicate(6, 1);
  const Matrix out = multi_head_attention(x, model.layers[1], 4);
  for (int i = 1; i < 6; ++i) EXPECT_LT((out.row(i) - out.row(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Attention, MatchesLoopReference) {
  const Model model = build_model(small_config());
  std::mt19937_64 rng(3);
  for (int m : {1, 2, 7, 33}) {
    const Matrix x = oracle::random_matrix(rng, m, 32);
    const Matrix got = multi_head_attention(x, model.layers[0], 4);
    EXPECT_LT((got - oracle::naive_mha(x, model.layers[0], 4)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Attention, ProbabilityRowsSumToOne) {
  const Model model = build_model(small_config());
  std::mt19937_64 rng(4);
  const Matrix x = oracle::random_matrix(rng, 12, 32);
  for (int h = 0; h < 4; ++h) {
    const Matrix p = attention_probabilities(x, model.layers[0], 4, h);
    ASSERT_EQ(p.rows(), 12);
    for (int i = 0; i < 12; ++i) {
      EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
      EXPECT_GE(p.row(i).minCoeff(), 0.0);
    }
  }
}

TEST(Attention, LayerNormMatchesReference) {
  std::mt19937_64 rng(5);
  const Matrix x = oracle::random_matrix(rng, 9, 16);
  const RowVector g = oracle::random_matrix(rng, 1, 16);
  const RowVector b = oracle::random_matrix(rng, 1, 16);
  EXPECT_LT((layer_norm(x, g, b) - oracle::naive_layer_norm(x, g, b)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(FrameLayer, FramesAreIndependent) {
  const Model model = build_model(small_config());
  const SequenceLayout layout{3, 2, 3, 5};
  std::mt19937_64 rng(6);
  const Matrix x = oracle::random_matrix(rng, layout.total(), 32);
  const Matrix out = frame_attention_layer(x, layout, model.layers[0], 4);
  Matrix perturbed = x;
  perturbed.row(layout.patch_index(2, 4)).array() += 1.0;
  const Matrix out2 = frame_attention_layer(perturbed, layout, model.layers[0], 4);
  const int stride = layout.frame_stride();
  EXPECT_EQ(out.topRows(2 * stride), out2.topRows(2 * stride));
  EXPECT_NE(out.bottomRows(stride), out2.bottomRows(stride));
}

TEST(FrameLayer, SingleFrameEqualsFullAttention) {
  const Model model = build_model(small_config());
  const SequenceLayout layout{1, 3, 3, 5};
  std::mt19937_64 rng(7);
  const Matrix x = oracle::random_matrix(rng, layout.total(), 32);
  EXPECT_EQ(frame_attention_layer(x, layout, model.layers[0], 4),
            multi_head_attention(x, model.layers[0], 4));
  EXPECT_EQ(global_attention_layer(x, model.layers[0], 4),
            frame_attention_layer(x, layout, model.layers[0], 4));
}

TEST(GlobalLayer, IdentityPlanIsBitIdentical) {
  const Model model = build_model(small_config());
  std::mt19937_64 rng(8);
  const Matrix x = oracle::random_matrix(rng, 40, 32);
  const MergePlan plan = MergePlan::identity(40);
  EXPECT_EQ(global_attention_layer(x, model.layers[1], 4, &plan),
            global_attention_layer(x, model.layers[1], 4));
  const MergePlan wrong = MergePlan::identity(39);
  EXPECT_THROW(global_attention_layer(x, model.layers[1], 4, &wrong), ShapeError);
}

TEST(GlobalLayer, MergedOutputIsConstantOverGroups) {
  const Model model = build_model(small_config());
  std::mt19937_64 rng(9);
  const Matrix x = oracle::random_matrix(rng, 6, 32);
  MergePlan plan;
  plan.total_tokens = 6;
  plan.assignment = {{4, 1, 0.0}, {5, 1, 0.0}};
  plan.finalize();
  const Matrix out = global_attention_layer(x, model.layers[1], 4, &plan);
  const Matrix delta = out - x;
  EXPECT_LT((delta.row(4) - delta.row(1)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((delta.row(5) - delta.row(1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sequence, PackUnpackRoundTrip) {
  const auto frames = small_scene(3);
  const auto params = TokenizerParams::make(14, 32, 3, 1);
  std::vector<TokenGrid> grids;
  for (const auto& f : frames) grids.push_back(tokenize(f, params));
  const Matrix seq = pack_sequence(grids);
  EXPECT_EQ(seq.rows(), 3 * (5 + 4 * 5));
  const auto back = unpack_sequence(seq, grids);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    EXPECT_EQ(back[i].tokens, grids[i].tokens);
    EXPECT_EQ(back[i].specials, grids[i].specials);
  }
  EXPECT_THROW(unpack_sequence(seq.topRows(10), grids), ShapeError);
}

TEST(Forward, ShapesForEveryMode) {
  const Model model = build_model(small_config());
  const auto frames = small_scene(3);
  for (MergeMode mode : {MergeMode::Off, MergeMode::GaMerge}) {
    for (int r : {1, 2}) {
      MergeSettings s;
      s.mode = mode;
      s.cache_interval = r;
      const ForwardOutput out = forward(model, frames, s);
      EXPECT_EQ(out.rows, 4);
      EXPECT_EQ(out.cols, 5);
      ASSERT_EQ(out.dense.size(), 3u);
      for (const Matrix& d : out.dense) {
        EXPECT_EQ(d.rows(), 20);
        EXPECT_EQ(d.cols(), 32);
        EXPECT_TRUE(d.allFinite());
      }
      EXPECT_EQ(out.stats.global_layers, 2);
    }
  }
}

TEST(Forward, Deterministic) {
  const Model model = build_model(small_config());
  const auto frames = small_scene(3);
  MergeSettings s;
  s.mode = MergeMode::GaMerge;
  EXPECT_TRUE(bit_equal(forward(model, frames, s), forward(model, frames, s)));
}

TEST(Forward, AllSalientMergeEqualsBaseline) {
  const Model model = build_model(small_config());
  const auto frames = small_scene(3);
  MergeSettings s;
  s.mode = MergeMode::GaMerge;
  s.salient_fraction = 0.99;
  const ForwardOutput merged = forward(model, frames, s);
  EXPECT_EQ(merged.stats.counts.src, 0);
  EXPECT_TRUE(bit_equal(merged, forward(model, frames)));
}

TEST(Forward, MergeCountsAreConsistent) {
  const Model model = build_model(small_config());
  const auto frames = small_scene(4);
  MergeSettings s;
  s.mode = MergeMode::GaMerge;
  const ForwardOutput out = forward(model, frames, s);
  const TokenCounts& c = out.stats.counts;
  EXPECT_EQ(c.total, 4 * 25);
  EXPECT_EQ(c.specials, 20);
  EXPECT_EQ(c.salient + c.dst + c.src + c.specials, c.total);
  EXPECT_EQ(c.kept, c.total - c.src);
  ASSERT_TRUE(out.first_plan.has_value());
  EXPECT_EQ(out.first_plan->merged_size(), c.kept);
  EXPECT_EQ(out.stats.plan_computations, 4);
}

TEST(Forward, DuplicateFramesMatchOnTokenizerOutput) {
  const Model model = build_model(small_config());
  MergeSettings s;
  s.mode = MergeMode::GaMerge;
  const ForwardOutput out = forward(model, small_scene(3, 0), s);
  ASSERT_TRUE(out.first_plan.has_value());
  ASSERT_FALSE(out.first_plan->assignment.empty());
  for (const Assignment& a : out.first_plan->assignment) EXPECT_GE(a.similarity, 1.0 - 1e-6);
}

TEST(Forward, RejectsMismatchedFrames) {
  const Model model = build_model(small_config());
  std::vector<ImageFrame> frames = small_scene(2);
  frames.push_back(ImageFrame::filled(28, 28, 3, 0, 2));
  EXPECT_THROW(forward(model, frames), DimensionError);
  EXPECT_THROW(forward(model, std::vector<ImageFrame>{}), ConfigError);
}
