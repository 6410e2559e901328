#include "gssl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace gssl::ad {

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace {

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

[[noreturn]] void shape_error(std::string_view op, const std::string& detail) {
  throw std::invalid_argument(std::string(op) + ": " + detail);
}

template <typename T>
void require_2d(std::string_view op, const Tensor<T>& a) {
  if (a.rank() != 2) shape_error(op, "expected a 2-D tensor, got " + shape_str(a.shape()));
}

template <typename T>
void require_same(std::string_view op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    shape_error(op, "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

// Builds an op result. Inputs and the backward closure are kept only when a
// gradient can flow.
template <typename T>
Tensor<T> make_result(std::string_view op, Shape shape, std::vector<T> value,
                      std::vector<NodePtr<T>> inputs, std::function<void(Node<T>&)> fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in->requires_grad;
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(fn);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Node<T>& in(Node<T>& self, std::size_t i) {
  return *self.inputs[i];
}

}  // namespace

// ---- Tensor ---------------------------------------------------------------

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T v, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->value.assign(ad::numel(shape), v);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
  if (ad::numel(shape) != data.size()) {
    throw std::invalid_argument("Tensor::from: " + std::to_string(data.size()) +
                                " values for shape " + shape_str(shape));
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw std::invalid_argument("item(): tensor has " + std::to_string(numel()) + " elements");
  return node_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(node_->shape, node_->value, false);
}

// ---- tape -------------------------------------------------------------------

template <typename T>
ComputationTape<T> record_tape(const Tensor<T>& root) {
  ComputationTape<T> tape;
  std::unordered_set<Node<T>*> seen;
  // Iterative post-order DFS: a node is emitted after all of its inputs.
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      tape.order.push_back(node);
      stack.pop_back();
    }
  }
  return tape;
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar");
  }
  if (!loss.requires_grad()) throw std::invalid_argument("backward: loss is detached from the tape");
  auto tape = record_tape(loss);
  // Intermediate gradients are per-call; leaves accumulate.
  for (auto* n : tape.order) {
    if (!n->is_leaf()) n->grad.clear();
  }
  loss.node()->grad_buffer()[0] += T(1);
  for (auto it = tape.order.rbegin(); it != tape.order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->is_leaf() || n->grad.empty()) continue;
    n->backward_fn(*n);
  }
}

// ---- primitives -------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_2d("matmul", a);
  require_2d("matmul", b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    shape_error("matmul", shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  std::vector<T> c(n * m, T(0));
  const T* A = a.data().data();
  const T* B = b.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    T* crow = c.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = A[i * k + p];
      if (av == T(0)) continue;
      const T* brow = B + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  return make_result<T>("matmul", {n, m}, std::move(c), {a.node_ptr(), b.node_ptr()},
                        [n, k, m](Node<T>& self) {
                          const T* G = self.grad.data();
                          Node<T>& na = in(self, 0);
                          Node<T>& nb = in(self, 1);
                          if (na.requires_grad) {
                            auto& ga = na.grad_buffer();
                            const T* Bv = nb.value.data();
                            for (std::size_t i = 0; i < n; ++i) {
                              const T* grow = G + i * m;
                              for (std::size_t p = 0; p < k; ++p) {
                                const T* brow = Bv + p * m;
                                T acc = 0;
                                for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
                                ga[i * k + p] += acc;
                              }
                            }
                          }
                          if (nb.requires_grad) {
                            auto& gb = nb.grad_buffer();
                            const T* Av = na.value.data();
                            for (std::size_t i = 0; i < n; ++i) {
                              const T* grow = G + i * m;
                              for (std::size_t p = 0; p < k; ++p) {
                                const T av = Av[i * k + p];
                                if (av == T(0)) continue;
                                T* gbrow = gb.data() + p * m;
                                for (std::size_t j = 0; j < m; ++j) gbrow[j] += av * grow[j];
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_2d("transpose", a);
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<T> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = a.data()[i * m + j];
  return make_result<T>("transpose", {m, n}, std::move(out), {a.node_ptr()},
                        [n, m](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[j * n + i];
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    shape_error("reshape", shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  return make_result<T>("reshape", std::move(shape), std::move(out), {a.node_ptr()},
                        [](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                        });
}

namespace {

template <typename T, typename Fwd, typename DA, typename DB>
Tensor<T> binary_elementwise(std::string_view op, const Tensor<T>& a, const Tensor<T>& b, Fwd fwd,
                             DA da, DB db) {
  require_same(op, a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.data()[i], b.data()[i]);
  return make_result<T>(op, a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                        [da, db](Node<T>& self) {
                          Node<T>& na = in(self, 0);
                          Node<T>& nb = in(self, 1);
                          if (na.requires_grad) {
                            auto& g = na.grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += self.grad[i] * da(na.value[i], nb.value[i]);
                          }
                          if (nb.requires_grad) {
                            auto& g = nb.grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += self.grad[i] * db(na.value[i], nb.value[i]);
                          }
                        });
}

// f'(x) expressed through the input x and the output y.
template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary_elementwise(std::string_view op, const Tensor<T>& a, Fwd fwd, Deriv deriv) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.data()[i]);
  return make_result<T>(op, a.shape(), std::move(out), {a.node_ptr()}, [deriv](Node<T>& self) {
    Node<T>& na = in(self, 0);
    auto& g = na.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * deriv(na.value[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "add", a, b, [](T x, T y) { return x + y; }, [](T, T) { return T(1); },
      [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "sub", a, b, [](T x, T y) { return x - y; }, [](T, T) { return T(1); },
      [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "hadamard", a, b, [](T x, T y) { return x * y; }, [](T, T y) { return y; },
      [](T x, T) { return x; });
}

template <typename T>
Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& b) {
  require_2d("add_row", a);
  const std::size_t n = a.rows(), m = a.cols();
  if (b.numel() != m) shape_error("add_row", "bias of " + std::to_string(b.numel()) + " for " + std::to_string(m) + " columns");
  std::vector<T> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += b.data()[j];
  return make_result<T>("add_row", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                        [n, m](Node<T>& self) {
                          Node<T>& na = in(self, 0);
                          Node<T>& nb = in(self, 1);
                          if (na.requires_grad) {
                            auto& g = na.grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                          }
                          if (nb.requires_grad) {
                            auto& g = nb.grad_buffer();
                            for (std::size_t i = 0; i < n; ++i)
                              for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
                          }
                        });
}

template <typename T>
Tensor<T> mul_col(const Tensor<T>& a, const Tensor<T>& s) {
  require_2d("mul_col", a);
  const std::size_t n = a.rows(), m = a.cols();
  if (s.numel() != n) shape_error("mul_col", "scale of " + std::to_string(s.numel()) + " for " + std::to_string(n) + " rows");
  std::vector<T> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = a.data()[i * m + j] * s.data()[i];
  return make_result<T>("mul_col", a.shape(), std::move(out), {a.node_ptr(), s.node_ptr()},
                        [n, m](Node<T>& self) {
                          Node<T>& na = in(self, 0);
                          Node<T>& ns = in(self, 1);
                          if (na.requires_grad) {
                            auto& g = na.grad_buffer();
                            for (std::size_t i = 0; i < n; ++i)
                              for (std::size_t j = 0; j < m; ++j)
                                g[i * m + j] += self.grad[i * m + j] * ns.value[i];
                          }
                          if (ns.requires_grad) {
                            auto& g = ns.grad_buffer();
                            for (std::size_t i = 0; i < n; ++i) {
                              T acc = 0;
                              for (std::size_t j = 0; j < m; ++j)
                                acc += self.grad[i * m + j] * na.value[i * m + j];
                              g[i] += acc;
                            }
                          }
                        });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  return unary_elementwise<T>("scale", a, [c](T x) { return c * x; }, [c](T, T) { return c; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  return unary_elementwise<T>("add_scalar", a, [c](T x) { return x + c; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> scale_rows(const Tensor<T>& a, std::span<const T> coef) {
  require_2d("scale_rows", a);
  const std::size_t n = a.rows(), m = a.cols();
  if (coef.size() != n) shape_error("scale_rows", "coefficient count differs from rows");
  std::vector<T> c(coef.begin(), coef.end());
  std::vector<T> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = a.data()[i * m + j] * c[i];
  return make_result<T>("scale_rows", a.shape(), std::move(out), {a.node_ptr()},
                        [n, m, c = std::move(c)](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[i * m + j] * c[i];
                        });
}

template <typename T>
Tensor<T> mul_const(const Tensor<T>& a, std::span<const T> mask) {
  if (mask.size() != a.numel()) shape_error("mul_const", "mask size differs from tensor size");
  std::vector<T> m(mask.begin(), mask.end());
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * m[i];
  return make_result<T>("mul_const", a.shape(), std::move(out), {a.node_ptr()},
                        [m = std::move(m)](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * m[i];
                        });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary_elementwise<T>(
      "relu", a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  return unary_elementwise<T>(
      "leaky_relu", a, [slope](T x) { return x > T(0) ? x : slope * x; },
      [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary_elementwise<T>(
      "sigmoid", a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary_elementwise<T>(
      "tanh", a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary_elementwise<T>(
      "exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  return unary_elementwise<T>(
      "log", a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> row_softmax(const Tensor<T>& a) {
  require_2d("row_softmax", a);
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<T> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const T* x = a.data().data() + i * m;
    T mx = *std::max_element(x, x + m);
    T z = 0;
    for (std::size_t j = 0; j < m; ++j) z += (out[i * m + j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] /= z;
  }
  return make_result<T>("row_softmax", a.shape(), std::move(out), {a.node_ptr()},
                        [n, m](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < n; ++i) {
                            const T* y = self.value.data() + i * m;
                            const T* gy = self.grad.data() + i * m;
                            T dot = 0;
                            for (std::size_t j = 0; j < m; ++j) dot += gy[j] * y[j];
                            for (std::size_t j = 0; j < m; ++j) g[i * m + j] += y[j] * (gy[j] - dot);
                          }
                        });
}

template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& a) {
  require_2d("log_softmax_rows", a);
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<T> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const T* x = a.data().data() + i * m;
    T mx = *std::max_element(x, x + m);
    T z = 0;
    for (std::size_t j = 0; j < m; ++j) z += std::exp(x[j] - mx);
    const T lz = mx + std::log(z);
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = x[j] - lz;
  }
  return make_result<T>("log_softmax_rows", a.shape(), std::move(out), {a.node_ptr()},
                        [n, m](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < n; ++i) {
                            const T* y = self.value.data() + i * m;
                            const T* gy = self.grad.data() + i * m;
                            T total = 0;
                            for (std::size_t j = 0; j < m; ++j) total += gy[j];
                            for (std::size_t j = 0; j < m; ++j)
                              g[i * m + j] += gy[j] - std::exp(y[j]) * total;
                          }
                        });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data()) s += v;
  return make_result<T>("sum", {1}, {s}, {a.node_ptr()}, [](Node<T>& self) {
    auto& g = in(self, 0).grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  T s = 0;
  for (T v : a.data()) s += v;
  const T inv = T(1) / static_cast<T>(a.numel());
  return make_result<T>("mean", {1}, {s * inv}, {a.node_ptr()}, [inv](Node<T>& self) {
    auto& g = in(self, 0).grad_buffer();
    for (auto& v : g) v += self.grad[0] * inv;
  });
}

template <typename T>
Tensor<T> row_sum(const Tensor<T>& a) {
  require_2d("row_sum", a);
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<T> out(n, T(0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i] += a.data()[i * m + j];
  return make_result<T>("row_sum", {n, 1}, std::move(out), {a.node_ptr()}, [n, m](Node<T>& self) {
    auto& g = in(self, 0).grad_buffer();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[i];
  });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t m = parts[0].cols();
  std::size_t n = 0;
  std::vector<NodePtr<T>> inputs;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    require_2d("concat_rows", p);
    if (p.cols() != m) shape_error("concat_rows", "column count mismatch");
    offsets.push_back(n * m);
    n += p.rows();
    inputs.push_back(p.node_ptr());
  }
  std::vector<T> out;
  out.reserve(n * m);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result<T>("concat_rows", {n, m}, std::move(out), std::move(inputs),
                        [offsets](Node<T>& self) {
                          for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                            Node<T>& p = in(self, k);
                            if (!p.requires_grad) continue;
                            auto& g = p.grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offsets[k] + i];
                          }
                        });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t n = parts[0].rows();
  std::size_t m = 0;
  std::vector<NodePtr<T>> inputs;
  std::vector<std::size_t> col_offsets, widths;
  for (const auto& p : parts) {
    require_2d("concat_cols", p);
    if (p.rows() != n) shape_error("concat_cols", "row count mismatch");
    col_offsets.push_back(m);
    widths.push_back(p.cols());
    m += p.cols();
    inputs.push_back(p.node_ptr());
  }
  std::vector<T> out(n * m);
  for (std::size_t k = 0; k < parts.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(parts[k].data().data() + i * widths[k], widths[k], out.data() + i * m + col_offsets[k]);
  return make_result<T>("concat_cols", {n, m}, std::move(out), std::move(inputs),
                        [n, m, col_offsets, widths](Node<T>& self) {
                          for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                            Node<T>& p = in(self, k);
                            if (!p.requires_grad) continue;
                            auto& g = p.grad_buffer();
                            for (std::size_t i = 0; i < n; ++i)
                              for (std::size_t j = 0; j < widths[k]; ++j)
                                g[i * widths[k] + j] += self.grad[i * m + col_offsets[k] + j];
                          }
                        });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t start, std::size_t count) {
  require_2d("slice_cols", a);
  const std::size_t n = a.rows(), m = a.cols();
  if (start + count > m) shape_error("slice_cols", "range exceeds column count");
  std::vector<T> out(n * count);
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(a.data().data() + i * m + start, count, out.data() + i * count);
  return make_result<T>("slice_cols", {n, count}, std::move(out), {a.node_ptr()},
                        [n, m, start, count](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t j = 0; j < count; ++j)
                              g[i * m + start + j] += self.grad[i * count + j];
                        });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& a, const Index& idx) {
  require_2d("gather_rows", a);
  const std::size_t m = a.cols();
  std::vector<T> out(idx.size() * m);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= a.rows()) shape_error("gather_rows", "index " + std::to_string(idx[i]) + " out of range");
    std::copy_n(a.data().data() + idx[i] * m, m, out.data() + i * m);
  }
  return make_result<T>("gather_rows", {idx.size(), m}, std::move(out), {a.node_ptr()},
                        [idx, m](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            T* dst = g.data() + idx[i] * m;
                            const T* src = self.grad.data() + i * m;
                            for (std::size_t j = 0; j < m; ++j) dst[j] += src[j];
                          }
                        });
}

template <typename T>
Tensor<T> scatter_add_rows(const Tensor<T>& a, const Index& idx, std::size_t n) {
  require_2d("scatter_add_rows", a);
  if (idx.size() != a.rows()) shape_error("scatter_add_rows", "index count differs from rows");
  const std::size_t m = a.cols();
  std::vector<T> out(n * m, T(0));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n) shape_error("scatter_add_rows", "index " + std::to_string(idx[i]) + " out of range");
    T* dst = out.data() + idx[i] * m;
    const T* src = a.data().data() + i * m;
    for (std::size_t j = 0; j < m; ++j) dst[j] += src[j];
  }
  return make_result<T>("scatter_add_rows", {n, m}, std::move(out), {a.node_ptr()},
                        [idx, m](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            const T* src = self.grad.data() + idx[i] * m;
                            for (std::size_t j = 0; j < m; ++j) g[i * m + j] += src[j];
                          }
                        });
}

template <typename T>
Tensor<T> select_per_row(const Tensor<T>& a, const Index& cols) {
  require_2d("select_per_row", a);
  const std::size_t n = a.rows(), m = a.cols();
  if (cols.size() != n) shape_error("select_per_row", "one column index per row required");
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cols[i] >= m) shape_error("select_per_row", "column index out of range");
    out[i] = a.data()[i * m + cols[i]];
  }
  return make_result<T>("select_per_row", {n, 1}, std::move(out), {a.node_ptr()},
                        [cols, m](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < cols.size(); ++i) g[i * m + cols[i]] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> diagonal(const Tensor<T>& a) {
  require_2d("diagonal", a);
  if (a.rows() != a.cols()) shape_error("diagonal", "matrix is not square");
  Index cols(a.rows());
  for (std::uint32_t i = 0; i < cols.size(); ++i) cols[i] = i;
  return select_per_row(a, cols);
}

template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& a) {
  require_2d("l2_normalize_rows", a);
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<T> norms(n, T(0));
  std::vector<T> out(n * m, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    T s = 0;
    for (std::size_t j = 0; j < m; ++j) s += a.data()[i * m + j] * a.data()[i * m + j];
    norms[i] = std::sqrt(s);
    if (norms[i] > T(0))
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] = a.data()[i * m + j] / norms[i];
  }
  return make_result<T>("l2_normalize_rows", a.shape(), std::move(out), {a.node_ptr()},
                        [n, m, norms = std::move(norms)](Node<T>& self) {
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < n; ++i) {
                            if (norms[i] == T(0)) continue;
                            const T* y = self.value.data() + i * m;
                            const T* gy = self.grad.data() + i * m;
                            T dot = 0;
                            for (std::size_t j = 0; j < m; ++j) dot += gy[j] * y[j];
                            for (std::size_t j = 0; j < m; ++j)
                              g[i * m + j] += (gy[j] - y[j] * dot) / norms[i];
                          }
                        });
}

template <typename T>
Tensor<T> complex_pair_rotate(const Tensor<T>& x, const Tensor<T>& angles) {
  require_2d("complex_pair_rotate", x);
  const std::size_t n = x.rows(), d = x.cols();
  if (d % 2 != 0) shape_error("complex_pair_rotate", "last dimension must be even, got " + std::to_string(d));
  const std::size_t k = d / 2;
  if (angles.numel() != n * k) {
    shape_error("complex_pair_rotate", "expected " + std::to_string(n) + "x" + std::to_string(k) +
                                           " angles, got " + shape_str(angles.shape()));
  }
  std::vector<T> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T t = angles.data()[i * k + p];
      const T c = std::cos(t), s = std::sin(t);
      const T re = x.data()[i * d + 2 * p], im = x.data()[i * d + 2 * p + 1];
      out[i * d + 2 * p] = re * c - im * s;
      out[i * d + 2 * p + 1] = re * s + im * c;
    }
  }
  return make_result<T>("complex_pair_rotate", x.shape(), std::move(out),
                        {x.node_ptr(), angles.node_ptr()}, [n, d, k](Node<T>& self) {
                          Node<T>& nx = in(self, 0);
                          Node<T>& na = in(self, 1);
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t p = 0; p < k; ++p) {
                              const T t = na.value[i * k + p];
                              const T c = std::cos(t), s = std::sin(t);
                              const T g0 = self.grad[i * d + 2 * p], g1 = self.grad[i * d + 2 * p + 1];
                              if (nx.requires_grad) {
                                auto& gx = nx.grad_buffer();
                                gx[i * d + 2 * p] += g0 * c + g1 * s;
                                gx[i * d + 2 * p + 1] += -g0 * s + g1 * c;
                              }
                              if (na.requires_grad) {
                                // d(out)/dt = (-re s - im c, re c - im s) = (-out1, out0)
                                const T y0 = self.value[i * d + 2 * p], y1 = self.value[i * d + 2 * p + 1];
                                na.grad_buffer()[i * k + p] += -g0 * y1 + g1 * y0;
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> segment_softmax(const Tensor<T>& logits, const Index& segment, std::size_t n) {
  if (logits.numel() != segment.size()) shape_error("segment_softmax", "one segment id per logit required");
  const std::size_t e = segment.size();
  std::vector<T> mx(n, -std::numeric_limits<T>::infinity());
  for (std::size_t i = 0; i < e; ++i) {
    if (segment[i] >= n) shape_error("segment_softmax", "segment id out of range");
    mx[segment[i]] = std::max(mx[segment[i]], logits.data()[i]);
  }
  std::vector<T> z(n, T(0));
  std::vector<T> out(e);
  for (std::size_t i = 0; i < e; ++i) z[segment[i]] += (out[i] = std::exp(logits.data()[i] - mx[segment[i]]));
  for (std::size_t i = 0; i < e; ++i) out[i] /= z[segment[i]];
  return make_result<T>("segment_softmax", {e, 1}, std::move(out), {logits.node_ptr()},
                        [segment, n](Node<T>& self) {
                          std::vector<T> dot(n, T(0));
                          for (std::size_t i = 0; i < segment.size(); ++i)
                            dot[segment[i]] += self.grad[i] * self.value[i];
                          auto& g = in(self, 0).grad_buffer();
                          for (std::size_t i = 0; i < segment.size(); ++i)
                            g[i] += self.value[i] * (self.grad[i] - dot[segment[i]]);
                        });
}

#define GSSL_INSTANTIATE(T)                                                                  \
  template class Tensor<T>;                                                                  \
  template ComputationTape<T> record_tape(const Tensor<T>&);                                 \
  template void backward(const Tensor<T>&);                                                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> transpose(const Tensor<T>&);                                            \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                       \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> hadamard(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> add_row(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> mul_col(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> scale(const Tensor<T>&, T);                                             \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                        \
  template Tensor<T> scale_rows(const Tensor<T>&, std::span<const T>);                       \
  template Tensor<T> mul_const(const Tensor<T>&, std::span<const T>);                        \
  template Tensor<T> relu(const Tensor<T>&);                                                 \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                        \
  template Tensor<T> sigmoid(const Tensor<T>&);                                              \
  template Tensor<T> tanh(const Tensor<T>&);                                                 \
  template Tensor<T> exp(const Tensor<T>&);                                                  \
  template Tensor<T> log(const Tensor<T>&);                                                  \
  template Tensor<T> row_softmax(const Tensor<T>&);                                          \
  template Tensor<T> log_softmax_rows(const Tensor<T>&);                                     \
  template Tensor<T> sum(const Tensor<T>&);                                                  \
  template Tensor<T> mean(const Tensor<T>&);                                                 \
  template Tensor<T> row_sum(const Tensor<T>&);                                              \
  template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                             \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                             \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                 \
  template Tensor<T> gather_rows(const Tensor<T>&, const Index&);                            \
  template Tensor<T> scatter_add_rows(const Tensor<T>&, const Index&, std::size_t);          \
  template Tensor<T> select_per_row(const Tensor<T>&, const Index&);                         \
  template Tensor<T> diagonal(const Tensor<T>&);                                             \
  template Tensor<T> l2_normalize_rows(const Tensor<T>&);                                    \
  template Tensor<T> complex_pair_rotate(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> segment_softmax(const Tensor<T>&, const Index&, std::size_t);

GSSL_INSTANTIATE(float)
GSSL_INSTANTIATE(double)

#undef GSSL_INSTANTIATE

}  // namespace gssl::ad
