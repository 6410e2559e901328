#pragma once

#include <cstddef>
#include <vector>

#include "gssl/tensor.hpp"

namespace gssl::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  AdamOptions opts;
  std::size_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

/// One bias-corrected Adam update using each parameter's current gradient
/// (a parameter without a gradient is treated as g = 0). Throws NumericError
/// on a non-finite gradient, before touching any parameter.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state);

template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamOptions opts = {});
  void step() { adam_step(params_, state_); }
  void zero_grad();
  const AdamState<T>& state() const { return state_; }

 private:
  std::vector<Tensor<T>> params_;
  AdamState<T> state_;
};

}  // namespace gssl::ad
