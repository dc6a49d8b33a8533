#include "gamerge/attention.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "gamerge/error.hpp"
#include "gamerge/flops.hpp"
#include "gamerge/rng.hpp"

namespace gamerge {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Query rows per score block; bounds the m x m score buffer.
constexpr Eigen::Index kQueryBlock = 256;

void softmax_rows(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    auto row = s.row(r);
    const double mx = row.maxCoeff();
    row = (row.array() - mx).exp().matrix();
    row /= row.sum();
  }
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

}  // namespace

void ModelConfig::validate() const {
  if (layers < 2 || layers % 2 != 0) {
    throw ConfigError("layers must be even and at least 2, got " + std::to_string(layers));
  }
  if (heads < 1) throw ConfigError("heads must be positive");
  if (dim < 8) throw ConfigError("dim must be at least 8");
  if (dim % heads != 0) {
    throw ConfigError("dim " + std::to_string(dim) + " is not divisible by heads " +
                      std::to_string(heads));
  }
  if (!(mlp_ratio > 0.0)) throw ConfigError("mlp_ratio must be positive");
  if (patch_size < 1) throw ConfigError("patch_size must be positive");
  if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
  if (specials < 0) throw ConfigError("specials must be non-negative");
}

Model build_model(const ModelConfig& config) {
  config.validate();
  Model model;
  model.config = config;
  model.tokenizer = TokenizerParams::make(config.patch_size, config.dim, config.channels,
                                          derive_seed(config.seed, "tokenizer"), config.specials);

  const int d = config.dim;
  const int hidden = std::max(1, static_cast<int>(std::lround(config.mlp_ratio * d)));
  const double proj_scale = std::sqrt(3.0 / d);
  model.layers.reserve(static_cast<std::size_t>(config.layers));
  for (int l = 0; l < config.layers; ++l) {
    Rng rng(derive_seed(config.seed, "layer", static_cast<std::uint64_t>(l)));
    LayerWeights w;
    w.wq = rng.matrix(d, d, proj_scale);
    w.wk = rng.matrix(d, d, proj_scale);
    w.wv = rng.matrix(d, d, proj_scale);
    w.wo = rng.matrix(d, d, 0.5 * proj_scale);
    w.w1 = rng.matrix(d, hidden, proj_scale);
    w.b1 = rng.matrix(1, hidden, 0.02);
    w.w2 = rng.matrix(hidden, d, 0.5 * std::sqrt(3.0 / hidden));
    w.b2 = rng.matrix(1, d, 0.02);
    w.norm1_scale = (rng.matrix(1, d, 0.1).array() + 1.0).matrix();
    w.norm1_shift = rng.matrix(1, d, 0.1);
    w.norm2_scale = (rng.matrix(1, d, 0.1).array() + 1.0).matrix();
    w.norm2_shift = rng.matrix(1, d, 0.1);
    model.layers.push_back(std::move(w));
  }
  Rng head_rng(derive_seed(config.seed, "dense_head"));
  model.head = head_rng.matrix(d, d, proj_scale);
  model.head_bias = head_rng.matrix(1, d, 0.02);
  return model;
}

Matrix layer_norm(const Matrix& x, const RowVector& scale, const RowVector& shift) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + 1e-6);
    out.row(r) = (((x.row(r).array() - mean) * inv) * scale.array() + shift.array()).matrix();
  }
  return out;
}

Matrix attention_core(const Matrix& normed, const LayerWeights& w, int heads) {
  const Eigen::Index m = normed.rows();
  const Eigen::Index d = normed.cols();
  const Eigen::Index hd = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  const Matrix q = normed * w.wq;
  const Matrix k = normed * w.wk;
  const Matrix v = normed * w.wv;
  Matrix context(m, d);
  for (int h = 0; h < heads; ++h) {
    const Matrix qh = q.middleCols(h * hd, hd);
    const Matrix kh_t = k.middleCols(h * hd, hd).transpose();
    const Matrix vh = v.middleCols(h * hd, hd);
    for (Eigen::Index r0 = 0; r0 < m; r0 += kQueryBlock) {
      const Eigen::Index rows = std::min(kQueryBlock, m - r0);
      Matrix scores = (qh.middleRows(r0, rows) * kh_t) * scale;
      softmax_rows(scores);
      context.block(r0, h * hd, rows, hd) = scores * vh;
    }
  }
  return context * w.wo;
}

Matrix attention_probabilities(const Matrix& seq, const LayerWeights& w, int heads, int head) {
  const Matrix normed = layer_norm(seq, w.norm1_scale, w.norm1_shift);
  const Eigen::Index hd = normed.cols() / heads;
  const Matrix qh = (normed * w.wq).middleCols(head * hd, hd);
  const Matrix kh = (normed * w.wk).middleCols(head * hd, hd);
  Matrix scores = (qh * kh.transpose()) / std::sqrt(static_cast<double>(hd));
  softmax_rows(scores);
  return scores;
}

Matrix multi_head_attention(const Matrix& seq, const LayerWeights& w, int heads) {
  return seq + attention_core(layer_norm(seq, w.norm1_scale, w.norm1_shift), w, heads);
}

Matrix mlp_block(const Matrix& x, const LayerWeights& w) {
  Matrix hidden = layer_norm(x, w.norm2_scale, w.norm2_shift) * w.w1;
  hidden.rowwise() += w.b1;
  hidden = hidden.unaryExpr(&gelu);
  Matrix out = hidden * w.w2;
  out.rowwise() += w.b2;
  return x + out;
}

Matrix pack_sequence(std::span<const TokenGrid> grids) {
  if (grids.empty()) return {};
  const TokenGrid& first = grids.front();
  const Eigen::Index stride = first.specials.rows() + first.tokens.rows();
  Matrix seq(stride * static_cast<Eigen::Index>(grids.size()), first.dim());
  for (std::size_t f = 0; f < grids.size(); ++f) {
    const TokenGrid& g = grids[f];
    if (g.specials.rows() != first.specials.rows() || g.tokens.rows() != first.tokens.rows() ||
        g.dim() != first.dim()) {
      throw ShapeError("all frames must share one token lattice and width");
    }
    const Eigen::Index base = static_cast<Eigen::Index>(f) * stride;
    seq.middleRows(base, g.specials.rows()) = g.specials;
    seq.middleRows(base + g.specials.rows(), g.tokens.rows()) = g.tokens;
  }
  return seq;
}

std::vector<TokenGrid> unpack_sequence(const Matrix& seq, std::span<const TokenGrid> shape_like) {
  std::vector<TokenGrid> out(shape_like.begin(), shape_like.end());
  Eigen::Index base = 0;
  for (TokenGrid& g : out) {
    g.specials = seq.middleRows(base, g.specials.rows());
    base += g.specials.rows();
    g.tokens = seq.middleRows(base, g.tokens.rows());
    base += g.tokens.rows();
  }
  if (base != seq.rows()) throw ShapeError("sequence length does not match frame shapes");
  return out;
}

Matrix frame_attention_layer(const Matrix& seq, const SequenceLayout& layout,
                             const LayerWeights& w, int heads) {
  if (seq.rows() != layout.total()) throw ShapeError("sequence does not match layout");
  Matrix out(seq.rows(), seq.cols());
  const int stride = layout.frame_stride();
  for (int f = 0; f < layout.frames; ++f) {
    out.middleRows(f * stride, stride) =
        multi_head_attention(seq.middleRows(f * stride, stride), w, heads);
  }
  return out;
}

std::vector<TokenGrid> frame_attention_layer(std::span<const TokenGrid> grids,
                                             const LayerWeights& w, int heads) {
  if (grids.empty()) return {};
  const SequenceLayout layout{static_cast<int>(grids.size()), grids.front().rows,
                              grids.front().cols,
                              static_cast<int>(grids.front().specials.rows())};
  return unpack_sequence(frame_attention_layer(pack_sequence(grids), layout, w, heads), grids);
}

Matrix global_attention_layer(const Matrix& seq, const LayerWeights& w, int heads,
                              const MergePlan* plan) {
  if (plan == nullptr) return multi_head_attention(seq, w, heads);
  if (plan->total_tokens != seq.rows()) throw ShapeError("merge plan does not match sequence");
  const Matrix merged = apply_merge(seq, *plan);
  const Matrix delta =
      attention_core(layer_norm(merged, w.norm1_scale, w.norm1_shift), w, heads);
  return seq + apply_unmerge(delta, *plan);
}

Matrix global_attention_layer(const Matrix& seq, const LayerWeights& w, int heads,
                              MergeContext& ctx) {
  if (ctx.mode == MergeMode::Off) return global_attention_layer(seq, w, heads, nullptr);
  if (ctx.labels == nullptr || ctx.cache == nullptr) {
    throw ConfigError("merge context needs partition labels and a plan cache");
  }
  const MergePlan& plan = ctx.cache->get_or_compute(ctx.layer, seq, *ctx.labels);
  return global_attention_layer(seq, w, heads, &plan);
}

std::vector<TokenGrid> global_attention_layer(std::span<const TokenGrid> grids,
                                              const LayerWeights& w, int heads,
                                              MergeContext& ctx) {
  return unpack_sequence(global_attention_layer(pack_sequence(grids), w, heads, ctx), grids);
}

ForwardOutput forward(const Model& model, std::span<const ImageFrame> frames,
                      const MergeSettings& merge) {
  if (frames.empty()) throw ConfigError("forward needs at least one frame");
  const ModelConfig& cfg = model.config;
  const bool merging = merge.mode == MergeMode::GaMerge;

  ForwardOutput out;
  ForwardStats& stats = out.stats;

  auto t0 = Clock::now();
  std::vector<TokenGrid> grids;
  std::vector<ImageFrame> expanded;
  grids.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const ImageFrame* frame = &frames[i];
    if (frame->height != frames[0].height || frame->width != frames[0].width) {
      throw DimensionError("all frames must share one resolution");
    }
    if (frame->channels == 1 && model.tokenizer.channels == 3) {
      expanded.push_back(expand_to_rgb(*frame));
      frame = &expanded.back();
    }
    TokenGrid g = tokenize(*frame, model.tokenizer);
    // Position in the sequence decides the special-token set.
    g.frame_index = static_cast<int>(i);
    g.specials = i == 0 ? model.tokenizer.first_specials : model.tokenizer.shared_specials;
    grids.push_back(std::move(g));
    expanded.clear();
  }
  stats.times.tokenize_ms = elapsed_ms(t0);

  const SequenceLayout layout{static_cast<int>(grids.size()), grids.front().rows,
                              grids.front().cols, model.tokenizer.num_specials};
  out.rows = layout.rows;
  out.cols = layout.cols;
  stats.counts.total = layout.total();
  stats.counts.specials = layout.frames * layout.specials;
  stats.counts.kept = layout.total();

  PartitionLabels labels;
  if (merging) {
    t0 = Clock::now();
    std::vector<GaMap> maps;
    maps.reserve(grids.size());
    const GaMapParams params{merge.alpha, merge.beta, merge.variance_projection};
    for (std::size_t i = 0; i < grids.size(); ++i) {
      maps.push_back(compute_ga_map(frames[i], grids[i], cfg.patch_size, params));
    }
    stats.times.gamap_ms = elapsed_ms(t0);

    t0 = Clock::now();
    labels = build_partition(maps, merge.salient_fraction, layout.specials);
    stats.times.partition_ms = elapsed_ms(t0);
    stats.counts.salient = labels.count(TokenLabel::Salient);
    stats.counts.dst = labels.count(TokenLabel::Dst);
    stats.counts.src = labels.count(TokenLabel::Src);
  }

  Matrix x = pack_sequence(grids);
  PlanCache cache(merging ? merge.cache_interval : 1, merge.min_sim);
  double sim_sum = 0.0;
  std::size_t sim_count = 0;
  double plan_ms = 0.0;

  t0 = Clock::now();
  for (int l = 0; l < cfg.layers; ++l) {
    const LayerWeights& w = model.layers[static_cast<std::size_t>(l)];
    const MergePlan* plan = nullptr;
    if (merging) {
      const auto tp = Clock::now();
      const int before = cache.computations();
      plan = &cache.get_or_compute(l, x, labels);
      plan_ms += elapsed_ms(tp);
      if (cache.computations() != before) {
        for (const Assignment& a : plan->assignment) {
          stats.match_similarity_min = std::min(
              stats.match_similarity_min.value_or(a.similarity), a.similarity);
          sim_sum += a.similarity;
          ++sim_count;
        }
      }
    }
    if (l % 2 == 0) {
      x = frame_attention_layer(x, layout, w, cfg.heads);
    } else {
      x = global_attention_layer(x, w, cfg.heads, plan);
      const std::uint64_t m = plan ? plan->kept.size() : static_cast<std::uint64_t>(x.rows());
      stats.global_attention_flops += count_attention_flops(m, cfg.dim, cfg.heads, 1);
      stats.global_quadratic_flops += count_quadratic_flops(m, cfg.dim, 1);
      ++stats.global_layers;
    }
    x = mlp_block(x, w);
  }

  const int stride = layout.frame_stride();
  out.dense.reserve(grids.size());
  out.specials.reserve(grids.size());
  for (int f = 0; f < layout.frames; ++f) {
    out.specials.push_back(x.middleRows(f * stride, layout.specials));
    Matrix dense = x.middleRows(f * stride + layout.specials, layout.patches_per_frame()) * model.head;
    dense.rowwise() += model.head_bias;
    out.dense.push_back(std::move(dense));
  }
  stats.times.attention_ms = elapsed_ms(t0) - plan_ms;
  stats.times.plan_ms = plan_ms;

  if (merging) {
    stats.plan_computations = cache.computations();
    stats.plan_cache_hits = cache.hits();
    out.first_plan = cache.plans().begin()->second;
    // Partition is fixed per pass, so every plan keeps the same count.
    stats.counts.kept = out.first_plan->merged_size();
    if (sim_count > 0) stats.match_similarity_mean = sim_sum / static_cast<double>(sim_count);
  }
  return out;
}

}  // namespace gamerge
