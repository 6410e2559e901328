#include "gssl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gssl/error.hpp"

namespace gssl::ad {

namespace {

template <typename T>
T eval_finite(const ScalarFn<T>& f, const std::vector<Tensor<T>>& inputs) {
  auto y = f(inputs);
  const T v = y.item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value");
  return v;
}

}  // namespace

template <typename T>
double grad_check(const ScalarFn<T>& f, std::vector<Tensor<T>> inputs, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("grad_check: eps must be > 0");
  for (auto& x : inputs) {
    x.set_requires_grad(true);
    x.zero_grad();
  }
  auto y = f(inputs);
  if (y.requires_grad()) backward(y);
  double worst = 0;
  for (auto& x : inputs) {
    std::vector<T> analytic(x.numel(), T(0));
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
    for (T a : analytic) {
      if (!std::isfinite(a)) throw NumericError("grad_check: non-finite analytic gradient");
    }
    auto data = x.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const T orig = data[i];
      data[i] = orig + static_cast<T>(eps);
      const double up = eval_finite(f, inputs);
      data[i] = orig - static_cast<T>(eps);
      const double down = eval_finite(f, inputs);
      data[i] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double err = std::abs(static_cast<double>(analytic[i]) - numeric) /
                         std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

template <typename T>
double grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, Tensor<T> x, double eps) {
  return grad_check<T>([&](const std::vector<Tensor<T>>& in) { return f(in[0]); },
                       std::vector<Tensor<T>>{std::move(x)}, eps);
}

template double grad_check(const ScalarFn<float>&, std::vector<Tensor<float>>, double);
template double grad_check(const ScalarFn<double>&, std::vector<Tensor<double>>, double);
template double grad_check(const std::function<Tensor<float>(const Tensor<float>&)>&, Tensor<float>, double);
template double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>&, Tensor<double>, double);

}  // namespace gssl::ad
