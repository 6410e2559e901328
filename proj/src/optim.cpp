#include "gssl/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gssl/error.hpp"

namespace gssl::ad {

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state) {
  const auto& o = state.opts;
  if (!(o.lr > 0)) throw std::invalid_argument("adam: lr must be > 0");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), T(0));
      state.v.emplace_back(p.numel(), T(0));
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam: parameter list changed");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.m[k].size() != params[k].numel()) throw std::invalid_argument("adam: parameter shape changed");
    for (T g : params[k].grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter " + std::to_string(k) + " at step " +
                           std::to_string(state.step + 1));
      }
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(o.beta1), b2 = static_cast<T>(o.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].has_grad()) {
      // g = 0: moments decay; the parameter moves only if momentum remains.
      for (auto& x : state.m[k]) x *= b1;
      for (auto& x : state.v[k]) x *= b2;
    } else {
      auto g = params[k].grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        state.m[k][i] = b1 * state.m[k][i] + (T(1) - b1) * g[i];
        state.v[k][i] = b2 * state.v[k][i] + (T(1) - b2) * g[i] * g[i];
      }
    }
    auto theta = params[k].mutable_data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double mhat = state.m[k][i] / c1;
      const double vhat = state.v[k][i] / c2;
      theta[i] -= static_cast<T>(o.lr * mhat / (std::sqrt(vhat) + o.eps));
    }
  }
}

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamOptions opts) : params_(std::move(params)) {
  state_.opts = opts;
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template void adam_step(std::vector<Tensor<float>>&, AdamState<float>&);
template void adam_step(std::vector<Tensor<double>>&, AdamState<double>&);
template class Adam<float>;
template class Adam<double>;

}  // namespace gssl::ad
