#pragma once

#include <cassert>

namespace gamerge {

/// Position of every token in the concatenated multi-frame sequence.
/// Each frame contributes its special tokens first, then its patch tokens
/// in row-major lattice order.
struct SequenceLayout {
  int frames = 0;
  int rows = 0;      // h_t
  int cols = 0;      // w_t
  int specials = 5;  // per frame

  int patches_per_frame() const { return rows * cols; }
  int frame_stride() const { return specials + rows * cols; }
  int total() const { return frames * frame_stride(); }

  int special_index(int frame, int k) const {
    assert(k >= 0 && k < specials);
    return frame * frame_stride() + k;
  }
  int patch_index(int frame, int patch) const {
    assert(patch >= 0 && patch < patches_per_frame());
    return frame * frame_stride() + specials + patch;
  }
  int frame_of(int global) const { return global / frame_stride(); }
  // Local offset within the frame; values below `specials` are special tokens.
  int local_of(int global) const { return global % frame_stride(); }
  bool is_special(int global) const { return local_of(global) < specials; }

  bool operator==(const SequenceLayout&) const = default;
};

}  // namespace gamerge
