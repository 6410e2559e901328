#include "gssl/init.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gssl/rng.hpp"

namespace gssl::ad {

std::optional<InitScheme> parse_init_scheme(std::string_view s) {
  if (s == "glorot-uniform" || s == "glorot") return InitScheme::glorot_uniform;
  if (s == "zeros") return InitScheme::zeros;
  if (s == "unit-phases") return InitScheme::unit_phases;
  return std::nullopt;
}

template <typename T>
Tensor<T> seeded_init(const Shape& shape, InitScheme scheme, std::uint64_t seed) {
  if (shape.empty() || numel(shape) == 0) throw std::invalid_argument("seeded_init: empty shape");
  std::vector<T> data(numel(shape), T(0));
  Rng rng(seed);
  switch (scheme) {
    case InitScheme::zeros:
      break;
    case InitScheme::glorot_uniform: {
      const double fan_in = static_cast<double>(shape[0]);
      const double fan_out = static_cast<double>(shape.size() > 1 ? shape[1] : shape[0]);
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& x : data) x = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
      break;
    }
    case InitScheme::unit_phases:
      for (auto& x : data) x = static_cast<T>(2.0 * std::numbers::pi * uniform01(rng));
      break;
  }
  return Tensor<T>::from(shape, std::move(data), true);
}

template Tensor<float> seeded_init(const Shape&, InitScheme, std::uint64_t);
template Tensor<double> seeded_init(const Shape&, InitScheme, std::uint64_t);

}  // namespace gssl::ad
