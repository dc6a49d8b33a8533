#pragma once

#include <filesystem>
#include <vector>

#include "gamerge/ingest.hpp"
#include "gamerge/tensor.hpp"

namespace gamerge {

/// Decodes PNG, binary PGM (P5) or binary PPM (P6). PNG palettes are
/// expanded, alpha is dropped and 16-bit samples are reduced to 8 bits.
/// Dimensions are not validated against any patch size here.
ImageFrame decode_image_file(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM (P5) of the given size.
void write_pgm(const std::filesystem::path& path, int height, int width,
               const std::vector<std::uint8_t>& pixels);

/// Writes a map whose entries lie in [0, 1] as a PGM with value*255 rounded.
/// Entries outside [0, 1] are clamped.
void write_unit_map_pgm(const std::filesystem::path& path, const Matrix& values);

/// Image files (png/pgm/ppm) in a directory, sorted by file name.
std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir);

}  // namespace gamerge
