#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gamerge/gamap.hpp"
#include "gamerge/ingest.hpp"
#include "gamerge/merge.hpp"
#include "gamerge/partition.hpp"

namespace gamerge {

enum class MergeMode { Off, GaMerge };

struct MergeSettings {
  MergeMode mode = MergeMode::Off;
  int cache_interval = 1;
  double alpha = 0.5;
  double beta = 0.5;
  double salient_fraction = 0.10;
  double min_sim = -1.0;
  VarianceProjection variance_projection = VarianceProjection::Mean;
};

struct ModelConfig {
  int layers = 8;  // even; layer 2k is frame attention, 2k+1 global attention
  int heads = 4;
  int dim = 64;
  double mlp_ratio = 4.0;
  std::uint64_t seed = 0;
  int patch_size = 14;
  int channels = 3;
  int specials = 5;

  int head_dim() const { return dim / heads; }
  /// Throws ConfigError on violated invariants.
  void validate() const;
};

struct LayerWeights {
  Matrix wq, wk, wv, wo;  // d x d
  Matrix w1;              // d x hidden
  RowVector b1;
  Matrix w2;  // hidden x d
  RowVector b2;
  RowVector norm1_scale, norm1_shift;
  RowVector norm2_scale, norm2_shift;
};

struct Model {
  ModelConfig config;
  TokenizerParams tokenizer;
  std::vector<LayerWeights> layers;
  Matrix head;  // d x d toy dense head
  RowVector head_bias;
};

Model build_model(const ModelConfig& config);

Matrix layer_norm(const Matrix& x, const RowVector& scale, const RowVector& shift);

/// softmax(Q K^T / sqrt(head_dim)) V per head, concatenated and projected by
/// wo. `normed` is the already-normalized input. No residual.
Matrix attention_core(const Matrix& normed, const LayerWeights& w, int heads);

/// Full m x m attention probabilities of one head, for inspection.
Matrix attention_probabilities(const Matrix& seq, const LayerWeights& w, int heads, int head);

/// seq + attention_core(layer_norm(seq)).
Matrix multi_head_attention(const Matrix& seq, const LayerWeights& w, int heads);

/// x + W2 gelu(W1 layer_norm(x) + b1) + b2.
Matrix mlp_block(const Matrix& x, const LayerWeights& w);

/// Concatenates grids into the global sequence layout and back.
Matrix pack_sequence(std::span<const TokenGrid> grids);
std::vector<TokenGrid> unpack_sequence(const Matrix& seq, std::span<const TokenGrid> shape_like);

/// Attention restricted to each frame's specials + patches.
Matrix frame_attention_layer(const Matrix& seq, const SequenceLayout& layout,
                             const LayerWeights& w, int heads);
std::vector<TokenGrid> frame_attention_layer(std::span<const TokenGrid> grids,
                                             const LayerWeights& w, int heads);

/// Attention over the whole sequence. With a plan, attention runs over the
/// merged sequence and its output is unmerged before the residual add.
Matrix global_attention_layer(const Matrix& seq, const LayerWeights& w, int heads,
                              const MergePlan* plan = nullptr);

struct MergeContext {
  MergeMode mode = MergeMode::Off;
  const PartitionLabels* labels = nullptr;
  PlanCache* cache = nullptr;
  int layer = 0;
};

Matrix global_attention_layer(const Matrix& seq, const LayerWeights& w, int heads,
                              MergeContext& ctx);
std::vector<TokenGrid> global_attention_layer(std::span<const TokenGrid> grids,
                                              const LayerWeights& w, int heads,
                                              MergeContext& ctx);

struct TokenCounts {
  int total = 0;
  int salient = 0;
  int dst = 0;
  int src = 0;
  int specials = 0;
  int kept = 0;
};

struct StageTimes {
  double tokenize_ms = 0;
  double gamap_ms = 0;
  double partition_ms = 0;
  double plan_ms = 0;
  double attention_ms = 0;

  double total_ms() const {
    return tokenize_ms + gamap_ms + partition_ms + plan_ms + attention_ms;
  }
};

struct ForwardStats {
  TokenCounts counts;
  std::uint64_t global_attention_flops = 0;
  std::uint64_t global_quadratic_flops = 0;  // score + weighted-sum terms only
  int global_layers = 0;
  int plan_computations = 0;
  int plan_cache_hits = 0;
  // Cosine similarity of src to chosen dst over all computed plans.
  std::optional<double> match_similarity_min;
  std::optional<double> match_similarity_mean;
  StageTimes times;
};

struct ForwardOutput {
  int rows = 0;
  int cols = 0;
  std::vector<Matrix> dense;     // per frame: (rows*cols) x d, lattice row-major
  std::vector<Matrix> specials;  // per frame: s x d
  ForwardStats stats;
  std::optional<MergePlan> first_plan;
};

/// tokenize -> GA map -> partition -> alternating frame/global layers ->
/// toy dense head. Pure: identical inputs give bit-identical outputs.
ForwardOutput forward(const Model& model, std::span<const ImageFrame> frames,
                      const MergeSettings& merge = {});

}  // namespace gamerge
