#pragma once

// Minimal dense tensors with reverse-mode differentiation.
//
// Every op returns a new Tensor. When any input requires a gradient, the
// result keeps references to its inputs plus a closure that pushes the
// result's gradient back into them; `backward` replays those closures in
// reverse topological order. Tensors are instantiated for float (training)
// and double (gradient verification).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gssl::ad {

using Shape = std::vector<std::size_t>;
using Index = std::vector<std::uint32_t>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return !backward_fn; }
  std::vector<T>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T v, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t rows() const { return node_->shape.at(0); }
  std::size_t cols() const { return rank() > 1 ? node_->shape[1] : 1; }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  /// Mutable access, for parameter updates and initialization only.
  std::span<T> mutable_data() { return node_->value; }
  T item() const;
  T at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  /// Same values, cut from the tape.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Nodes reachable from a root, ordered so every node follows its inputs.
template <typename T>
struct ComputationTape {
  std::vector<Node<T>*> order;
};

template <typename T>
ComputationTape<T> record_tape(const Tensor<T>& root);

/// Populates gradients of every reachable tensor that requires one. Leaf
/// gradients accumulate across calls until zero_grad. Throws
/// std::invalid_argument for a non-scalar or detached loss.
template <typename T>
void backward(const Tensor<T>& loss);

// ---- primitives ---------------------------------------------------------
// 2-D tensors are row-major [rows, cols]. Column vectors are [n, 1].

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);
/// Same row-major values under a new shape of equal size.
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b);
/// a [n,m] + b broadcast over rows (b has m elements).
template <typename T> Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& b);
/// a [n,m] scaled row-wise by s [n,1].
template <typename T> Tensor<T> mul_col(const Tensor<T>& a, const Tensor<T>& s);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T c);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T c);
/// Row i multiplied by the constant coef[i].
template <typename T> Tensor<T> scale_rows(const Tensor<T>& a, std::span<const T> coef);
/// Elementwise product with a constant mask of the same size.
template <typename T> Tensor<T> mul_const(const Tensor<T>& a, std::span<const T> mask);

template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& a, T slope);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> tanh(const Tensor<T>& a);
template <typename T> Tensor<T> exp(const Tensor<T>& a);
/// Natural log; inputs must be positive.
template <typename T> Tensor<T> log(const Tensor<T>& a);

template <typename T> Tensor<T> row_softmax(const Tensor<T>& a);
template <typename T> Tensor<T> log_softmax_rows(const Tensor<T>& a);
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);
/// [n,m] -> [n,1]
template <typename T> Tensor<T> row_sum(const Tensor<T>& a);

template <typename T> Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& a, std::size_t start, std::size_t count);

/// out[i] = a[idx[i]]
template <typename T> Tensor<T> gather_rows(const Tensor<T>& a, const Index& idx);
/// out[idx[i]] += a[i]; out has n rows.
template <typename T> Tensor<T> scatter_add_rows(const Tensor<T>& a, const Index& idx, std::size_t n);
/// out[i] = a[i, cols[i]] as [n,1]
template <typename T> Tensor<T> select_per_row(const Tensor<T>& a, const Index& cols);
/// Diagonal of a square matrix as [n,1].
template <typename T> Tensor<T> diagonal(const Tensor<T>& a);

/// Each row divided by its Euclidean norm; zero rows stay zero (gradient 0).
template <typename T> Tensor<T> l2_normalize_rows(const Tensor<T>& a);

/// Rotates consecutive (re, im) pairs of x [n,2k] by angles [n,k]:
/// (a, b) -> (a cos t - b sin t, a sin t + b cos t).
template <typename T> Tensor<T> complex_pair_rotate(const Tensor<T>& x, const Tensor<T>& angles);

/// Softmax of logits [E,1] within groups sharing segment[e] (n groups).
template <typename T>
Tensor<T> segment_softmax(const Tensor<T>& logits, const Index& segment, std::size_t n);

}  // namespace gssl::ad
