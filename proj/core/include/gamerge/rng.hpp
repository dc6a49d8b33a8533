#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "gamerge/tensor.hpp"

namespace gamerge {

/// Mixes a base seed with a stream tag so independent parameter groups
/// (projection, special tokens, layer weights) never share a stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

/// Seeded generator producing platform-independent values. Only the raw
/// 64-bit output of mt19937_64 is used; std distributions are avoided
/// because their algorithms differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [-scale, scale).
  double symmetric(double scale);
  std::uint64_t next() { return engine_(); }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols, double scale);

 private:
  std::mt19937_64 engine_;
};

}  // namespace gamerge
