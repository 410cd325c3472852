#pragma once

// Minimal dense tensors with reverse-mode differentiation.
//
// A Tensor is a shared handle to a graph node. Operations record their
// inputs and a backward closure whenever gradient tracking is enabled and
// at least one input requires a gradient. backward() walks the recorded
// graph once; the graph is consumed by that call.
//
// Every forward result and every propagated gradient is checked for NaN
// and Inf; the error names the producing op.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faor/resampling.hpp"

namespace faor::ad {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  bool consumed = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<T>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int axis) const;
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  // Direct write access, for leaves (parameters and inputs) only.
  std::span<T> mutable_data();
  std::span<const T> grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  std::string_view op() const { return node_->op; }
  T item() const;

  void zero_grad();

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Populates grad on every reachable tensor that requires it. Parameter
// gradients accumulate across calls until zero_grad().
template <typename T>
void backward(const Tensor<T>& loss);

// -- operations ------------------------------------------------------------

// (M x K) * (K x N) -> (M x N)
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);

// Element-wise with `b` broadcast over the leading axes of `a`:
// b's shape, minus leading ones, must equal the trailing axes of a.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T value);

// tanh approximation
template <typename T> Tensor<T> gelu(const Tensor<T>& x);

inline constexpr double kLayerNormEps = 1e-5;
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     T eps = T(kLayerNormEps));

// Numerically stable softmax over the last axis.
template <typename T> Tensor<T> softmax(const Tensor<T>& x);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
// Rank-2 concatenation / slicing along the last axis.
template <typename T> Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> slice_last(const Tensor<T>& x, int begin, int end);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);

// Mean absolute difference against a constant target; d/dx at zero is 0.
template <typename T> Tensor<T> l1_loss(const Tensor<T>& pred, std::span<const T> target);

// (H*W x C) -> (H*W x 9C) 3x3 patches; columns wrap around the seam and
// rows replicate at the poles.
template <typename T> Tensor<T> im2col_3x3(const Tensor<T>& x, int height, int width);

// (N x D) samples -> (M x D) through a resampling stencil.
template <typename T> Tensor<T> gather(const Tensor<T>& samples, const Stencil& stencil);

// matmul(x, weight) + bias
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// -- parameters ------------------------------------------------------------

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
};

// Named parameters in registration order; names are unique.
template <typename T>
class ParameterSet {
 public:
  Tensor<T> add(std::string name, Shape shape, std::vector<T> values);

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
  const Parameter<T>* find(std::string_view name) const;
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad() const;

 private:
  std::vector<Parameter<T>> params_;
};

}  // namespace faor::ad
