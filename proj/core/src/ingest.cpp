#include "gamerge/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gamerge/error.hpp"
#include "gamerge/image_io.hpp"
#include "gamerge/rng.hpp"

namespace gamerge {

ImageFrame ImageFrame::filled(int height, int width, int channels, std::uint8_t value,
                              int frame_index) {
  ImageFrame f;
  f.height = height;
  f.width = width;
  f.channels = channels;
  f.frame_index = frame_index;
  f.pixels.assign(static_cast<std::size_t>(height) * width * channels, value);
  return f;
}

TokenizerParams TokenizerParams::make(int patch_size, int embed_dim, int channels,
                                      std::uint64_t seed, int num_specials) {
  if (patch_size < 1) throw ConfigError("patch_size must be positive");
  if (embed_dim < 8) throw ConfigError("embed_dim must be at least 8");
  if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
  if (num_specials < 0) throw ConfigError("num_specials must be non-negative");

  TokenizerParams p;
  p.patch_size = patch_size;
  p.embed_dim = embed_dim;
  p.channels = channels;
  p.num_specials = num_specials;
  p.seed = seed;
  const int fan_in = patch_size * patch_size * channels;
  Rng proj_rng(derive_seed(seed, "tokenizer.projection"));
  p.projection = proj_rng.matrix(fan_in, embed_dim, std::sqrt(3.0 / fan_in));
  Rng first_rng(derive_seed(seed, "tokenizer.specials.first"));
  p.first_specials = first_rng.matrix(num_specials, embed_dim, 0.5);
  Rng shared_rng(derive_seed(seed, "tokenizer.specials.shared"));
  p.shared_specials = shared_rng.matrix(num_specials, embed_dim, 0.5);
  return p;
}

Texture parse_texture(std::string_view name) {
  if (name == "checker") return Texture::Checker;
  if (name == "ramp") return Texture::Ramp;
  if (name == "flat") return Texture::Flat;
  if (name == "mixed") return Texture::Mixed;
  throw ConfigError("unknown texture '" + std::string(name) + "'");
}

std::string_view to_string(Texture texture) {
  switch (texture) {
    case Texture::Checker: return "checker";
    case Texture::Ramp: return "ramp";
    case Texture::Flat: return "flat";
    case Texture::Mixed: return "mixed";
  }
  return "unknown";
}

ImageFrame load_image(const std::filesystem::path& path, int patch_size) {
  ImageFrame frame = decode_image_file(path);
  if (patch_size < 1 || frame.height % patch_size != 0 || frame.width % patch_size != 0) {
    throw DimensionError(path.string() + ": " + std::to_string(frame.height) + "x" +
                         std::to_string(frame.width) + " is not divisible by patch size " +
                         std::to_string(patch_size));
  }
  return frame;
}

GrayImage to_grayscale(const ImageFrame& frame) {
  GrayImage gray;
  gray.intensity.resize(frame.height, frame.width);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      double v;
      if (frame.channels == 3) {
        v = 0.299 * frame.at(y, x, 0) + 0.587 * frame.at(y, x, 1) + 0.114 * frame.at(y, x, 2);
      } else {
        v = frame.at(y, x, 0);
      }
      gray.intensity(y, x) = std::clamp(v / 255.0, 0.0, 1.0);
    }
  }
  return gray;
}

ImageFrame expand_to_rgb(const ImageFrame& frame) {
  if (frame.channels == 3) return frame;
  ImageFrame rgb = ImageFrame::filled(frame.height, frame.width, 3, 0, frame.frame_index);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = frame.at(y, x, 0);
    }
  }
  return rgb;
}

TokenGrid tokenize(const ImageFrame& frame, const TokenizerParams& params) {
  const int p = params.patch_size;
  if (frame.channels != params.channels) {
    throw DimensionError("frame has " + std::to_string(frame.channels) +
                         " channels, tokenizer expects " + std::to_string(params.channels));
  }
  if (frame.height % p != 0 || frame.width % p != 0 || frame.height == 0 || frame.width == 0) {
    throw DimensionError("frame " + std::to_string(frame.height) + "x" +
                         std::to_string(frame.width) + " is not divisible by patch size " +
                         std::to_string(p));
  }

  TokenGrid grid;
  grid.rows = frame.height / p;
  grid.cols = frame.width / p;
  grid.frame_index = frame.frame_index;

  const int fan_in = p * p * frame.channels;
  Matrix patches(grid.rows * grid.cols, fan_in);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int token = r * grid.cols + c;
      int k = 0;
      for (int dy = 0; dy < p; ++dy) {
        for (int dx = 0; dx < p; ++dx) {
          for (int ch = 0; ch < frame.channels; ++ch) {
            patches(token, k++) = frame.at(r * p + dy, c * p + dx, ch) / 255.0;
          }
        }
      }
    }
  }
  grid.tokens = patches * params.projection;
  grid.specials = frame.frame_index == 0 ? params.first_specials : params.shared_specials;
  return grid;
}

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

Rgb random_color(Rng& rng) {
  return {static_cast<std::uint8_t>(rng.next() % 256), static_cast<std::uint8_t>(rng.next() % 256),
          static_cast<std::uint8_t>(rng.next() % 256)};
}

void put(ImageFrame& f, int y, int x, Rgb c) {
  if (f.channels == 3) {
    f.at(y, x, 0) = c.r;
    f.at(y, x, 1) = c.g;
    f.at(y, x, 2) = c.b;
  } else {
    f.at(y, x, 0) = static_cast<std::uint8_t>((c.r + c.g + c.b) / 3);
  }
}

void paint_checker(ImageFrame& f, int y0, int y1, int x0, int x1, int square, Rgb a, Rgb b) {
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      put(f, y, x, (((y - y0) / square + (x - x0) / square) % 2 == 0) ? a : b);
    }
  }
}

void paint_ramp(ImageFrame& f, int y0, int y1, int x0, int x1, bool horizontal, Rgb tint) {
  const int span = std::max(1, (horizontal ? x1 - x0 : y1 - y0) - 1);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double t = static_cast<double>(horizontal ? x - x0 : y - y0) / span;
      put(f, y, x,
          {static_cast<std::uint8_t>(std::lround(t * tint.r)),
           static_cast<std::uint8_t>(std::lround(t * tint.g)),
           static_cast<std::uint8_t>(std::lround(t * tint.b))});
    }
  }
}

void paint_flat(ImageFrame& f, int y0, int y1, int x0, int x1, Rgb c) {
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) put(f, y, x, c);
  }
}

ImageFrame base_frame(const SceneSpec& spec, std::uint64_t seed) {
  ImageFrame f = ImageFrame::filled(spec.height, spec.width, spec.channels, 0, 0);
  Rng rng(derive_seed(seed, "scene.base"));
  switch (spec.texture) {
    case Texture::Checker:
      paint_checker(f, 0, f.height, 0, f.width, 7, {40, 48, 56}, {215, 208, 200});
      break;
    case Texture::Ramp:
      paint_ramp(f, 0, f.height, 0, f.width, true, {255, 255, 255});
      break;
    case Texture::Flat:
      paint_flat(f, 0, f.height, 0, f.width, {128, 128, 128});
      break;
    case Texture::Mixed: {
      constexpr int kBlocks = 4;
      for (int by = 0; by < kBlocks; ++by) {
        for (int bx = 0; bx < kBlocks; ++bx) {
          const int y0 = by * f.height / kBlocks, y1 = (by + 1) * f.height / kBlocks;
          const int x0 = bx * f.width / kBlocks, x1 = (bx + 1) * f.width / kBlocks;
          const Rgb a = random_color(rng);
          const Rgb b = random_color(rng);
          switch (rng.next() % 4) {
            case 0:
              paint_checker(f, y0, y1, x0, x1, 4 + static_cast<int>(rng.next() % 13), a, b);
              break;
            case 1:
              paint_ramp(f, y0, y1, x0, x1, rng.next() % 2 == 0, a);
              break;
            default:
              paint_flat(f, y0, y1, x0, x1, a);
              break;
          }
        }
      }
      // Mild sensor noise so flat regions are not exactly constant.
      for (auto& v : f.pixels) {
        const int noisy = static_cast<int>(v) + static_cast<int>(rng.next() % 7) - 3;
        v = static_cast<std::uint8_t>(std::clamp(noisy, 0, 255));
      }
      break;
    }
  }
  return f;
}

}  // namespace

std::vector<ImageFrame> synth_scene(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.n_frames < 1 || spec.height < 1 || spec.width < 1) {
    throw ConfigError("scene needs at least one frame and positive dimensions");
  }
  if (spec.overlap_shift_px < 0 ||
      static_cast<long long>(spec.overlap_shift_px) * (spec.n_frames - 1) >= spec.width) {
    throw ConfigError("scene infeasible: shift * (n_frames - 1) must be below the width");
  }
  if (spec.channels != 1 && spec.channels != 3) throw ConfigError("channels must be 1 or 3");

  std::vector<ImageFrame> frames;
  frames.reserve(static_cast<std::size_t>(spec.n_frames));
  frames.push_back(base_frame(spec, seed));
  const ImageFrame& base = frames.front();
  for (int k = 1; k < spec.n_frames; ++k) {
    ImageFrame f = ImageFrame::filled(spec.height, spec.width, spec.channels, 0, k);
    const int offset = k * spec.overlap_shift_px;
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const int sx = (x + offset) % spec.width;
        for (int c = 0; c < spec.channels; ++c) f.at(y, x, c) = base.at(y, sx, c);
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace gamerge
