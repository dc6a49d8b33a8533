#include "gamerge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "gamerge/error.hpp"

namespace gamerge {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_pnm_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

int parse_header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string token = next_pnm_token(in);
  try {
    std::size_t used = 0;
    const int value = std::stoi(token, &used);
    if (used != token.size() || value <= 0) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw FormatError("malformed PNM header in " + path.string());
  }
}

ImageFrame decode_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = next_pnm_token(in);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError("unsupported PNM variant '" + magic + "' in " + path.string());
  }
  const int width = parse_header_int(in, path);
  const int height = parse_header_int(in, path);
  const int maxval = parse_header_int(in, path);
  // A single whitespace byte separates the header from the raster and was
  // consumed by next_pnm_token.
  if (maxval > 65535) throw FormatError("bad maxval in " + path.string());

  ImageFrame frame;
  frame.height = height;
  frame.width = width;
  frame.channels = channels;
  const std::size_t samples = static_cast<std::size_t>(height) * width * channels;
  frame.pixels.resize(samples);
  if (maxval < 256) {
    in.read(reinterpret_cast<char*>(frame.pixels.data()), static_cast<std::streamsize>(samples));
    if (static_cast<std::size_t>(in.gcount()) != samples) {
      throw IoError("truncated raster in " + path.string());
    }
    if (maxval != 255) {
      for (auto& p : frame.pixels) {
        p = static_cast<std::uint8_t>(std::lround(std::min<int>(p, maxval) * 255.0 / maxval));
      }
    }
  } else {
    std::vector<unsigned char> raw(samples * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw IoError("truncated raster in " + path.string());
    }
    for (std::size_t i = 0; i < samples; ++i) {
      const int v = std::min<int>((raw[2 * i] << 8) | raw[2 * i + 1], maxval);
      frame.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0 / maxval));
    }
  }
  return frame;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

ImageFrame decode_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  unsigned char signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw FormatError("not a PNG file: " + path.string());
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialisation failed");
  }

  ImageFrame frame;
  std::vector<png_bytep> rows;
  // libpng reports errors through longjmp; no objects with non-trivial
  // destructors may be created between setjmp and the end of decoding.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_strip_16(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  frame.width = static_cast<int>(png_get_image_width(png, info));
  frame.height = static_cast<int>(png_get_image_height(png, info));
  frame.channels = static_cast<int>(png_get_channels(png, info));
  if (frame.channels != 1 && frame.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG channel layout: " + path.string());
  }
  frame.pixels.resize(static_cast<std::size_t>(frame.height) * frame.width * frame.channels);
  rows.resize(static_cast<std::size_t>(frame.height));
  for (int y = 0; y < frame.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        frame.pixels.data() + static_cast<std::size_t>(y) * frame.width * frame.channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return frame;
}

}  // namespace

ImageFrame decode_image_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return decode_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return decode_pnm(path);
  throw FormatError("unsupported image format: " + path.string());
}

void write_pgm(const std::filesystem::path& path, int height, int width,
               const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("PGM raster size does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_unit_map_pgm(const std::filesystem::path& path, const Matrix& values) {
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(values.size()));
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = std::clamp(values(r, c), 0.0, 1.0);
      pixels[static_cast<std::size_t>(r * values.cols() + c)] =
          static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  write_pgm(path, static_cast<int>(values.rows()), static_cast<int>(values.cols()), pixels);
}

std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower_extension(entry.path());
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace gamerge
