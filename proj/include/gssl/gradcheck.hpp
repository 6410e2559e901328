#pragma once

#include <functional>
#include <vector>

#include "gssl/tensor.hpp"

namespace gssl::ad {

template <typename T>
using ScalarFn = std::function<Tensor<T>(const std::vector<Tensor<T>>&)>;

/// Compares backward gradients of f against central differences for every
/// element of every input. Returns max |analytic - numeric| / max(1, |numeric|).
/// Inputs are perturbed in place and restored. Throws NumericError when an
/// evaluation is non-finite.
template <typename T>
double grad_check(const ScalarFn<T>& f, std::vector<Tensor<T>> inputs, double eps = 1e-6);

template <typename T>
double grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, Tensor<T> x,
                  double eps = 1e-6);

}  // namespace gssl::ad
