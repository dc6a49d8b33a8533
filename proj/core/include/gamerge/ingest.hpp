#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "gamerge/tensor.hpp"

namespace gamerge {

struct ImageFrame {
  int height = 0;
  int width = 0;
  int channels = 1;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> pixels;  // row-major, channel-interleaved
  int frame_index = 0;

  std::uint8_t at(int y, int x, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int y, int x, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  static ImageFrame filled(int height, int width, int channels, std::uint8_t value,
                           int frame_index = 0);
};

struct GrayImage {
  Matrix intensity;  // H x W, entries in [0, 1]

  int height() const { return static_cast<int>(intensity.rows()); }
  int width() const { return static_cast<int>(intensity.cols()); }
};

struct TokenizerParams {
  int patch_size = 14;
  int embed_dim = 64;
  int channels = 3;
  int num_specials = 5;  // 1 camera + 4 register
  std::uint64_t seed = 0;
  Matrix projection;       // (patch_size^2 * channels) x embed_dim
  Matrix first_specials;   // num_specials x embed_dim, frame 0 only
  Matrix shared_specials;  // num_specials x embed_dim, every later frame

  static TokenizerParams make(int patch_size, int embed_dim, int channels, std::uint64_t seed,
                              int num_specials = 5);
};

struct TokenGrid {
  int rows = 0;  // h_t
  int cols = 0;  // w_t
  Matrix tokens;    // (rows*cols) x d, row-major over the lattice
  Matrix specials;  // s x d
  int frame_index = 0;

  int size() const { return rows * cols; }
  int dim() const { return static_cast<int>(tokens.cols()); }
};

enum class Texture { Checker, Ramp, Flat, Mixed };

Texture parse_texture(std::string_view name);
std::string_view to_string(Texture texture);

struct SceneSpec {
  int n_frames = 8;
  int height = 392;
  int width = 518;
  int overlap_shift_px = 14;
  Texture texture = Texture::Mixed;
  int channels = 3;
};

/// Loads an image and checks that both dimensions are divisible by patch_size.
ImageFrame load_image(const std::filesystem::path& path, int patch_size = 14);

/// Luma 0.299 R + 0.587 G + 0.114 B for RGB, scaled to [0, 1].
GrayImage to_grayscale(const ImageFrame& frame);

/// Replicates a gray frame into three identical channels; RGB frames pass through.
ImageFrame expand_to_rgb(const ImageFrame& frame);

/// Flattened, [0,1]-normalized patches right-multiplied by the projection.
/// Frame 0 receives the first-frame special set; all later frames share one set.
TokenGrid tokenize(const ImageFrame& frame, const TokenizerParams& params);

/// Frame k is frame 0 translated left by k * overlap_shift_px with wrap-around.
std::vector<ImageFrame> synth_scene(const SceneSpec& spec, std::uint64_t seed);

}  // namespace gamerge
