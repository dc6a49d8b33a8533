#include "gamerge/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gamerge/error.hpp"

namespace gamerge {

int PartitionLabels::count(TokenLabel which) const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), which));
}

std::vector<int> select_salient(const GaMap& ga, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ConfigError("salient fraction must lie in [0, 1)");
  }
  const int n = ga.size();
  // The small offset keeps products such as 0.07 * 100 from rounding up.
  const int k = std::clamp(static_cast<int>(std::ceil(fraction * n - 1e-9)), 0, n);
  if (k == 0) return {};

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto& v = ga.values;
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
    if (v(a) != v(b)) return v(a) > v(b);
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<int> select_dst(const GaMap& ga, std::span<const int> salient, int frame_index) {
  const int rows = ga.rows(), cols = ga.cols();
  std::vector<char> is_salient(static_cast<std::size_t>(rows * cols), 0);
  for (int s : salient) {
    if (s < 0 || s >= rows * cols) throw ShapeError("salient index out of range");
    is_salient[static_cast<std::size_t>(s)] = 1;
  }

  std::vector<int> dst;
  if (frame_index == 0) {
    for (int i = 0; i < rows * cols; ++i) {
      if (!is_salient[static_cast<std::size_t>(i)]) dst.push_back(i);
    }
    return dst;
  }

  for (int r0 = 0; r0 < rows; r0 += 2) {
    for (int c0 = 0; c0 < cols; c0 += 2) {
      int best = -1;
      for (int r = r0; r < std::min(r0 + 2, rows); ++r) {
        for (int c = c0; c < std::min(c0 + 2, cols); ++c) {
          const int idx = r * cols + c;
          if (is_salient[static_cast<std::size_t>(idx)]) continue;
          // Visiting order is not linear-index order, so ties are resolved explicitly.
          if (best < 0 || ga.values(idx) < ga.values(best) ||
              (ga.values(idx) == ga.values(best) && idx < best)) {
            best = idx;
          }
        }
      }
      if (best >= 0) dst.push_back(best);
    }
  }
  std::sort(dst.begin(), dst.end());
  return dst;
}

PartitionLabels build_partition(std::span<const GaMap> ga_maps, double fraction,
                                int specials_per_frame) {
  if (ga_maps.empty()) throw ShapeError("partition needs at least one frame");
  PartitionLabels out;
  out.layout.frames = static_cast<int>(ga_maps.size());
  out.layout.rows = ga_maps.front().rows();
  out.layout.cols = ga_maps.front().cols();
  out.layout.specials = specials_per_frame;
  out.labels.assign(static_cast<std::size_t>(out.layout.total()), TokenLabel::Src);
  out.per_frame.resize(ga_maps.size());

  for (int f = 0; f < out.layout.frames; ++f) {
    const GaMap& ga = ga_maps[static_cast<std::size_t>(f)];
    if (ga.rows() != out.layout.rows || ga.cols() != out.layout.cols) {
      throw ShapeError("all frames must share one token lattice");
    }
    for (int k = 0; k < specials_per_frame; ++k) {
      out.labels[static_cast<std::size_t>(out.layout.special_index(f, k))] = TokenLabel::Special;
    }
    const std::vector<int> salient = select_salient(ga, fraction);
    const std::vector<int> dst = select_dst(ga, salient, f);
    for (int s : salient) {
      out.labels[static_cast<std::size_t>(out.layout.patch_index(f, s))] = TokenLabel::Salient;
    }
    for (int d : dst) {
      out.labels[static_cast<std::size_t>(out.layout.patch_index(f, d))] = TokenLabel::Dst;
    }
    FrameCounts& counts = out.per_frame[static_cast<std::size_t>(f)];
    counts.salient = static_cast<int>(salient.size());
    counts.dst = static_cast<int>(dst.size());
    counts.src = out.layout.patches_per_frame() - counts.salient - counts.dst;
  }
  return out;
}

Matrix label_raster(const PartitionLabels& labels, int frame) {
  const SequenceLayout& lay = labels.layout;
  if (frame < 0 || frame >= lay.frames) throw ShapeError("frame index out of range");
  Matrix raster(lay.rows, lay.cols);
  for (int p = 0; p < lay.patches_per_frame(); ++p) {
    double v = 0.0;
    switch (labels.patch_label(frame, p)) {
      case TokenLabel::Salient: v = 255.0; break;
      case TokenLabel::Dst: v = 170.0; break;
      case TokenLabel::Src: v = 85.0; break;
      case TokenLabel::Special: v = 0.0; break;
    }
    raster(p / lay.cols, p % lay.cols) = v / 255.0;
  }
  return raster;
}

}  // namespace gamerge
