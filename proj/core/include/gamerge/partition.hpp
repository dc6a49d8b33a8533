#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gamerge/gamap.hpp"
#include "gamerge/layout.hpp"

namespace gamerge {

enum class TokenLabel : std::uint8_t { Salient, Dst, Src, Special };

struct FrameCounts {
  int salient = 0;
  int dst = 0;
  int src = 0;
};

struct PartitionLabels {
  SequenceLayout layout;
  std::vector<TokenLabel> labels;  // one per token, global sequence order
  std::vector<FrameCounts> per_frame;

  int frame_count() const { return layout.frames; }
  TokenLabel label(int global) const { return labels[static_cast<std::size_t>(global)]; }
  TokenLabel patch_label(int frame, int patch) const {
    return label(layout.patch_index(frame, patch));
  }
  int count(TokenLabel which) const;
};

/// The ceil(fraction * n) highest-scoring tokens of one frame, returned in
/// ascending index order. Ties prefer the lower linear index.
std::vector<int> select_salient(const GaMap& ga, double fraction);

/// Frame 0: every non-salient token. Later frames: the lowest-scoring
/// non-salient token of each disjoint 2x2 cell (trailing odd row/column
/// cells are 2x1, 1x2 or 1x1). A fully salient cell yields nothing.
std::vector<int> select_dst(const GaMap& ga, std::span<const int> salient, int frame_index);

/// Salient first, then Dst from the remainder, everything else Src.
PartitionLabels build_partition(std::span<const GaMap> ga_maps, double fraction,
                                int specials_per_frame = 5);

/// Label raster for one frame in [0,1] units; written as a PGM it becomes
/// Salient=255, Dst=170, Src=85.
Matrix label_raster(const PartitionLabels& labels, int frame);

}  // namespace gamerge
