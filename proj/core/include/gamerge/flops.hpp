#pragma once

#include <cstdint>

namespace gamerge {

/// Per global layer: 2*m^2*d (scores and weighted sum) + 4*m*d^2
/// (q/k/v/output projections), summed over `layers`. Head count does not
/// change the total.
std::uint64_t count_attention_flops(std::uint64_t m, std::uint64_t d, std::uint64_t heads,
                                    std::uint64_t layers);

std::uint64_t count_quadratic_flops(std::uint64_t m, std::uint64_t d, std::uint64_t layers);

}  // namespace gamerge
