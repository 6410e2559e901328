#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "gssl/tensor.hpp"

namespace gssl::ad {

enum class InitScheme { glorot_uniform, zeros, unit_phases };

std::optional<InitScheme> parse_init_scheme(std::string_view s);

/// Fresh leaf requiring a gradient. Glorot uses fan_in = shape[0] and
/// fan_out = shape[1] (both shape[0] for vectors); phases are uniform in
/// [0, 2*pi). Throws std::invalid_argument on an empty shape.
template <typename T>
Tensor<T> seeded_init(const Shape& shape, InitScheme scheme, std::uint64_t seed);

}  // namespace gssl::ad
