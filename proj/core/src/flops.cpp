#include "gamerge/flops.hpp"

namespace gamerge {

std::uint64_t count_quadratic_flops(std::uint64_t m, std::uint64_t d, std::uint64_t layers) {
  return layers * 2 * m * m * d;
}

std::uint64_t count_attention_flops(std::uint64_t m, std::uint64_t d, std::uint64_t /*heads*/,
                                    std::uint64_t layers) {
  return count_quadratic_flops(m, d, layers) + layers * 4 * m * d * d;
}

}  // namespace gamerge
