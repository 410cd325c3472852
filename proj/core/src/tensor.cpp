#include "faor/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cstdint>
#include <memory>
#include <type_traits>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "faor/errors.hpp"

namespace faor::ad {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw InputError("tensor dimensions must be positive, got " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace {

thread_local bool g_grad_enabled = true;

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
void check_finite(std::span<const T> values, std::string_view op, const char* stage) {
  // A value is non-finite exactly when its exponent bits are all ones.
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  constexpr Bits mask = sizeof(T) == 4 ? Bits(0x7f800000u) : Bits(0x7ff0000000000000ull);
  Bits bad = 0;
  for (T v : values) bad |= static_cast<Bits>((std::bit_cast<Bits>(v) & mask) == mask);
  if (bad) {
    throw NumericError(std::string("non-finite ") + stage + " produced by " + std::string(op));
  }
}

// Wraps a freshly computed value into a graph node, recording `parents`
// and `fn` when any parent needs a gradient.
template <typename T>
Tensor<T> make_result(std::string_view op, Shape shape, std::vector<T> value,
                      std::vector<NodePtr<T>> parents, std::function<void(Node<T>&)> fn) {
  check_finite<T>(value, op, "value");
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  if (g_grad_enabled) {
    const bool needs = std::any_of(parents.begin(), parents.end(),
                                   [](const NodePtr<T>& p) { return p->requires_grad; });
    if (needs) {
      node->requires_grad = true;
      node->parents = std::move(parents);
      node->backward = std::move(fn);
    }
  }
  return Tensor<T>(std::move(node));
}

// Number of trailing elements of `a` that `b` spans when broadcast.
template <typename T>
std::size_t broadcast_span(const Tensor<T>& a, const Tensor<T>& b, std::string_view op) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  std::size_t first = 0;
  while (first < bs.size() && bs[first] == 1) ++first;
  const std::size_t tail = bs.size() - first;
  if (tail > as.size() || !std::equal(bs.begin() + first, bs.end(), as.end() - tail)) {
    throw InputError(std::string(op) + ": cannot broadcast " + shape_string(bs) + " onto " +
                     shape_string(as));
  }
  return b.numel();
}

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
void require_rank2(const Tensor<T>& t, std::string_view op) {
  if (t.rank() != 2) {
    throw InputError(std::string(op) + " expects a rank-2 tensor, got " +
                     shape_string(t.shape()));
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw InputError("tensor of shape " + shape_string(shape) + " given " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  check_finite<T>(node->value, "input", "value");
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value) {
  return from({1}, {value});
}

template <typename T>
int Tensor<T>::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw InputError("axis out of range");
  return node_->shape[axis];
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (node_->backward) throw InputError("cannot write into a non-leaf tensor");
  return node_->value;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw InputError("item() on a tensor with " + std::to_string(numel()) + " elements");
  return node_->value[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  node_->grad.clear();
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.numel() != 1) {
    throw InputError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  Node<T>* root = loss.node();
  if (root->consumed) {
    throw InputError("backward() called twice on the same graph; rebuild the forward pass");
  }
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (!node->backward) continue;
    node->ensure_grad();
    node->backward(*node);
    for (const auto& p : node->parents) {
      if (p->requires_grad) check_finite<T>(p->grad, node->op, "gradient");
    }
  }
  for (Node<T>* node : order) {
    if (!node->backward) continue;
    node->consumed = true;
    node->backward = nullptr;
    node->parents.clear();
  }
  root->consumed = true;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw InputError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  std::vector<T> out(static_cast<std::size_t>(m) * n);
  MatMap<T>(out.data(), m, n).noalias() =
      ConstMatMap<T>(a.data().data(), m, k) * ConstMatMap<T>(b.data().data(), k, n);
  return make_result<T>("matmul", {m, n}, std::move(out), {a.ptr(), b.ptr()},
                        [m, k, n](Node<T>& self) {
                          ConstMatMap<T> g(self.grad.data(), m, n);
                          Node<T>& pa = *self.parents[0];
                          Node<T>& pb = *self.parents[1];
                          if (pa.requires_grad) {
                            MatMap<T>(pa.ensure_grad().data(), m, k).noalias() +=
                                g * ConstMatMap<T>(pb.value.data(), k, n).transpose();
                          }
                          if (pb.requires_grad) {
                            MatMap<T>(pb.ensure_grad().data(), k, n).noalias() +=
                                ConstMatMap<T>(pa.value.data(), m, k).transpose() * g;
                          }
                        });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank2(a, "transpose");
  const int m = a.dim(0), n = a.dim(1);
  std::vector<T> out(a.numel());
  MatMap<T>(out.data(), n, m) = ConstMatMap<T>(a.data().data(), m, n).transpose();
  return make_result<T>("transpose", {n, m}, std::move(out), {a.ptr()}, [m, n](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    MatMap<T>(p.ensure_grad().data(), m, n) +=
        ConstMatMap<T>(self.grad.data(), n, m).transpose();
  });
}

// Element-wise binary ops view `a` as an (outer x inner) row-major matrix
// and `b` as one row broadcast over it.
template <typename T>
using RowArr = Eigen::Map<Eigen::Array<T, 1, Eigen::Dynamic>>;
template <typename T>
using ConstRowArr = Eigen::Map<const Eigen::Array<T, 1, Eigen::Dynamic>>;
template <typename T>
using BlockArr =
    Eigen::Map<Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstBlockArr =
    Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const auto inner = static_cast<Eigen::Index>(broadcast_span(a, b, "add"));
  const auto outer = static_cast<Eigen::Index>(a.numel()) / inner;
  std::vector<T> out(a.numel());
  BlockArr<T>(out.data(), outer, inner) =
      ConstBlockArr<T>(a.data().data(), outer, inner).rowwise() +
      ConstRowArr<T>(b.data().data(), inner);
  return make_result<T>("add", a.shape(), std::move(out), {a.ptr(), b.ptr()},
                        [outer, inner](Node<T>& self) {
                          Node<T>& pa = *self.parents[0];
                          Node<T>& pb = *self.parents[1];
                          const ConstBlockArr<T> g(self.grad.data(), outer, inner);
                          if (pa.requires_grad) {
                            BlockArr<T>(pa.ensure_grad().data(), outer, inner) += g;
                          }
                          if (pb.requires_grad) {
                            RowArr<T>(pb.ensure_grad().data(), inner) += g.colwise().sum();
                          }
                        });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  const auto inner = static_cast<Eigen::Index>(broadcast_span(a, b, "sub"));
  const auto outer = static_cast<Eigen::Index>(a.numel()) / inner;
  std::vector<T> out(a.numel());
  BlockArr<T>(out.data(), outer, inner) =
      ConstBlockArr<T>(a.data().data(), outer, inner).rowwise() -
      ConstRowArr<T>(b.data().data(), inner);
  return make_result<T>("sub", a.shape(), std::move(out), {a.ptr(), b.ptr()},
                        [outer, inner](Node<T>& self) {
                          Node<T>& pa = *self.parents[0];
                          Node<T>& pb = *self.parents[1];
                          const ConstBlockArr<T> g(self.grad.data(), outer, inner);
                          if (pa.requires_grad) {
                            BlockArr<T>(pa.ensure_grad().data(), outer, inner) += g;
                          }
                          if (pb.requires_grad) {
                            RowArr<T>(pb.ensure_grad().data(), inner) -= g.colwise().sum();
                          }
                        });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const auto inner = static_cast<Eigen::Index>(broadcast_span(a, b, "mul"));
  const auto outer = static_cast<Eigen::Index>(a.numel()) / inner;
  std::vector<T> out(a.numel());
  BlockArr<T>(out.data(), outer, inner) =
      ConstBlockArr<T>(a.data().data(), outer, inner).rowwise() *
      ConstRowArr<T>(b.data().data(), inner);
  return make_result<T>("mul", a.shape(), std::move(out), {a.ptr(), b.ptr()},
                        [outer, inner](Node<T>& self) {
                          Node<T>& pa = *self.parents[0];
                          Node<T>& pb = *self.parents[1];
                          const ConstBlockArr<T> g(self.grad.data(), outer, inner);
                          if (pa.requires_grad) {
                            BlockArr<T>(pa.ensure_grad().data(), outer, inner) +=
                                g.rowwise() * ConstRowArr<T>(pb.value.data(), inner);
                          }
                          if (pb.requires_grad) {
                            RowArr<T>(pb.ensure_grad().data(), inner) +=
                                (g * ConstBlockArr<T>(pa.value.data(), outer, inner))
                                    .colwise()
                                    .sum();
                          }
                        });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  const auto av = a.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor;
  return make_result<T>("scale", a.shape(), std::move(out), {a.ptr()}, [factor](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T value) {
  const auto av = a.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + value;
  return make_result<T>("add_scalar", a.shape(), std::move(out), {a.ptr()}, [](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
  const auto n = static_cast<Eigen::Index>(x.numel());
  const Eigen::Map<const Arr> v(x.data().data(), n);
  auto th = std::make_shared<Arr>((T(kGeluC) * (v + T(kGeluA) * v.cube())).tanh());
  std::vector<T> out(x.numel());
  Eigen::Map<Arr>(out.data(), n) = T(0.5) * v * (T(1) + *th);
  return make_result<T>("gelu", x.shape(), std::move(out), {x.ptr()}, [th, n](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    const Eigen::Map<const Arr> v(p.value.data(), n);
    const Eigen::Map<const Arr> g(self.grad.data(), n);
    const auto dth = (T(1) - th->square()) * T(kGeluC) * (T(1) + T(3 * kGeluA) * v.square());
    Eigen::Map<Arr>(p.ensure_grad().data(), n) +=
        g * (T(0.5) * (T(1) + *th) + T(0.5) * v * dth);
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  const int c = x.dim(-1);
  if (c < 1) throw InputError("layer_norm: empty channel axis");
  if (gain.numel() != static_cast<std::size_t>(c) || bias.numel() != static_cast<std::size_t>(c)) {
    throw InputError("layer_norm: gain/bias length differs from the channel count");
  }
  const std::size_t rows = x.numel() / c;
  const auto xv = x.data();
  const auto gv = gain.data();
  const auto bv = bias.data();
  std::vector<T> out(xv.size());
  std::vector<T> xhat(xv.size());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * c;
    T mu = 0;
    for (int j = 0; j < c; ++j) mu += in[j];
    mu /= c;
    T var = 0;
    for (int j = 0; j < c; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= c;
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (int j = 0; j < c; ++j) {
      const T h = (in[j] - mu) * inv;
      xhat[r * c + j] = h;
      out[r * c + j] = gv[j] * h + bv[j];
    }
  }
  return make_result<T>(
      "layer_norm", x.shape(), std::move(out), {x.ptr(), gain.ptr(), bias.ptr()},
      [c, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        Node<T>& px = *self.parents[0];
        Node<T>& pg = *self.parents[1];
        Node<T>& pb = *self.parents[2];
        const auto& g = self.grad;
        if (pg.requires_grad) {
          auto& gg = pg.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (int j = 0; j < c; ++j) gg[j] += g[r * c + j] * xhat[r * c + j];
        }
        if (pb.requires_grad) {
          auto& gb = pb.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (int j = 0; j < c; ++j) gb[j] += g[r * c + j];
        }
        if (px.requires_grad) {
          auto& gx = px.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            T mean_d = 0, mean_dh = 0;
            for (int j = 0; j < c; ++j) {
              const T d = g[r * c + j] * pg.value[j];
              mean_d += d;
              mean_dh += d * xhat[r * c + j];
            }
            mean_d /= c;
            mean_dh /= c;
            for (int j = 0; j < c; ++j) {
              const T d = g[r * c + j] * pg.value[j];
              gx[r * c + j] += inv_std[r] * (d - mean_d - xhat[r * c + j] * mean_dh);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  const int c = x.dim(-1);
  const std::size_t rows = x.numel() / c;
  const auto xv = x.data();
  std::vector<T> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * c;
    T* o = out.data() + r * c;
    const T mx = *std::max_element(in, in + c);
    T total = 0;
    for (int j = 0; j < c; ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (int j = 0; j < c; ++j) o[j] /= total;
  }
  return make_result<T>("softmax", x.shape(), std::move(out), {x.ptr()},
                        [c, rows](Node<T>& self) {
                          auto& gx = self.parents[0]->ensure_grad();
                          for (std::size_t r = 0; r < rows; ++r) {
                            const T* y = self.value.data() + r * c;
                            const T* g = self.grad.data() + r * c;
                            T dot = 0;
                            for (int j = 0; j < c; ++j) dot += g[j] * y[j];
                            for (int j = 0; j < c; ++j) gx[r * c + j] += y[j] * (g[j] - dot);
                          }
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw InputError("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>("reshape", std::move(shape), std::move(out), {x.ptr()},
                        [](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "concat_last");
  require_rank2(b, "concat_last");
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  if (b.dim(0) != n) throw InputError("concat_last: row counts differ");
  const int c = ca + cb;
  std::vector<T> out(static_cast<std::size_t>(n) * c);
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.data().data() + static_cast<std::size_t>(i) * ca, ca, out.data() + static_cast<std::size_t>(i) * c);
    std::copy_n(b.data().data() + static_cast<std::size_t>(i) * cb, cb, out.data() + static_cast<std::size_t>(i) * c + ca);
  }
  return make_result<T>("concat_last", {n, c}, std::move(out), {a.ptr(), b.ptr()},
                        [n, ca, cb, c](Node<T>& self) {
                          Node<T>& pa = *self.parents[0];
                          Node<T>& pb = *self.parents[1];
                          if (pa.requires_grad) {
                            auto& g = pa.ensure_grad();
                            for (int i = 0; i < n; ++i)
                              for (int j = 0; j < ca; ++j)
                                g[static_cast<std::size_t>(i) * ca + j] += self.grad[static_cast<std::size_t>(i) * c + j];
                          }
                          if (pb.requires_grad) {
                            auto& g = pb.ensure_grad();
                            for (int i = 0; i < n; ++i)
                              for (int j = 0; j < cb; ++j)
                                g[static_cast<std::size_t>(i) * cb + j] += self.grad[static_cast<std::size_t>(i) * c + ca + j];
                          }
                        });
}

template <typename T>
Tensor<T> slice_last(const Tensor<T>& x, int begin, int end) {
  require_rank2(x, "slice_last");
  const int n = x.dim(0), c = x.dim(1);
  if (begin < 0 || end > c || begin >= end) throw InputError("slice_last: bad range");
  const int w = end - begin;
  std::vector<T> out(static_cast<std::size_t>(n) * w);
  for (int i = 0; i < n; ++i) {
    std::copy_n(x.data().data() + static_cast<std::size_t>(i) * c + begin, w,
                out.data() + static_cast<std::size_t>(i) * w);
  }
  return make_result<T>("slice_last", {n, w}, std::move(out), {x.ptr()},
                        [n, c, w, begin](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (int i = 0; i < n; ++i)
                            for (int j = 0; j < w; ++j)
                              g[static_cast<std::size_t>(i) * c + begin + j] += self.grad[static_cast<std::size_t>(i) * w + j];
                        });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  return make_result<T>("sum", {1}, {total}, {x.ptr()}, [](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  const T n = static_cast<T>(x.numel());
  return make_result<T>("mean", {1}, {total / n}, {x.ptr()}, [n](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0] / n;
  });
}

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, std::span<const T> target) {
  if (target.size() != pred.numel()) {
    throw InputError("l1_loss: " + std::to_string(pred.numel()) + " predictions vs " +
                     std::to_string(target.size()) + " targets");
  }
  const auto pv = pred.data();
  T total = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) total += std::abs(pv[i] - target[i]);
  const T n = static_cast<T>(pv.size());
  std::vector<T> tgt(target.begin(), target.end());
  return make_result<T>("l1_loss", {1}, {total / n}, {pred.ptr()},
                        [n, tgt = std::move(tgt)](Node<T>& self) {
                          Node<T>& p = *self.parents[0];
                          auto& g = p.ensure_grad();
                          const T scale_g = self.grad[0] / n;
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const T d = p.value[i] - tgt[i];
                            const T sign = d > 0 ? T(1) : (d < 0 ? T(-1) : T(0));
                            g[i] += sign * scale_g;
                          }
                        });
}

template <typename T>
Tensor<T> im2col_3x3(const Tensor<T>& x, int height, int width) {
  require_rank2(x, "im2col_3x3");
  const int c = x.dim(1);
  if (static_cast<std::size_t>(height) * width != static_cast<std::size_t>(x.dim(0))) {
    throw InputError("im2col_3x3: row count is not height * width");
  }
  const std::size_t n = x.numel() / c;
  // Source pixel for each of the 9 taps of every output pixel.
  std::vector<std::int64_t> src(n * 9);
  for (int r = 0; r < height; ++r) {
    for (int col = 0; col < width; ++col) {
      for (int dr = -1; dr <= 1; ++dr) {
        const int rr = std::clamp(r + dr, 0, height - 1);
        for (int dc = -1; dc <= 1; ++dc) {
          const int cc = ((col + dc) % width + width) % width;
          src[(static_cast<std::size_t>(r) * width + col) * 9 + (dr + 1) * 3 + (dc + 1)] =
              static_cast<std::int64_t>(rr) * width + cc;
        }
      }
    }
  }
  std::vector<T> out(n * 9 * c);
  const T* xv = x.data().data();
  for (std::size_t i = 0; i < n * 9; ++i) std::copy_n(xv + src[i] * c, c, out.data() + i * c);
  return make_result<T>("im2col_3x3", {static_cast<int>(n), 9 * c}, std::move(out), {x.ptr()},
                        [c, src = std::move(src)](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < src.size(); ++i)
                            for (int k = 0; k < c; ++k) g[src[i] * c + k] += self.grad[i * c + k];
                        });
}

template <typename T>
Tensor<T> gather(const Tensor<T>& samples, const Stencil& stencil) {
  require_rank2(samples, "gather");
  const int d = samples.dim(1);
  const auto n = static_cast<std::int64_t>(samples.dim(0));
  for (std::int64_t idx : stencil.index) {
    if (idx < 0 || idx >= n) throw InputError("gather: stencil index outside the sample grid");
  }
  const std::size_t m = stencil.size();
  std::vector<T> out(m * d, T(0));
  const T* zv = samples.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    T* dst = out.data() + i * d;
    for (int k = 0; k < stencil.taps; ++k) {
      const std::size_t tap = i * stencil.taps + k;
      const T w = static_cast<T>(stencil.weight[tap]);
      const T* s = zv + stencil.index[tap] * d;
      for (int j = 0; j < d; ++j) dst[j] += w * s[j];
    }
  }
  return make_result<T>("gather", {static_cast<int>(m), d}, std::move(out), {samples.ptr()},
                        [stencil, d, m](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < m; ++i) {
                            const T* src = self.grad.data() + i * d;
                            for (int k = 0; k < stencil.taps; ++k) {
                              const std::size_t tap = i * stencil.taps + k;
                              const T w = static_cast<T>(stencil.weight[tap]);
                              T* dst = g.data() + stencil.index[tap] * d;
                              for (int j = 0; j < d; ++j) dst[j] += w * src[j];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  return add(matmul(x, weight), bias);
}

template <typename T>
Tensor<T> ParameterSet<T>::add(std::string name, Shape shape, std::vector<T> values) {
  if (find(name) != nullptr) throw InputError("duplicate parameter name '" + name + "'");
  auto t = Tensor<T>::from(std::move(shape), std::move(values), true);
  params_.push_back(Parameter<T>{std::move(name), t});
  return t;
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

template <typename T>
const Parameter<T>* ParameterSet<T>::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename T>
void ParameterSet<T>::zero_grad() const {
  for (auto& p : params_) {
    Tensor<T> t = p.tensor;
    t.zero_grad();
  }
}

#define FAOR_INSTANTIATE(T)                                                              \
  template class Tensor<T>;                                                              \
  template class ParameterSet<T>;                                                        \
  template void backward<T>(const Tensor<T>&);                                           \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> transpose<T>(const Tensor<T>&);                                     \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                      \
  template Tensor<T> add_scalar<T>(const Tensor<T>&, T);                                 \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                          \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                   T);                                                   \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                       \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                \
  template Tensor<T> concat_last<T>(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> slice_last<T>(const Tensor<T>&, int, int);                          \
  template Tensor<T> sum<T>(const Tensor<T>&);                                           \
  template Tensor<T> mean<T>(const Tensor<T>&);                                          \
  template Tensor<T> l1_loss<T>(const Tensor<T>&, std::span<const T>);                   \
  template Tensor<T> im2col_3x3<T>(const Tensor<T>&, int, int);                          \
  template Tensor<T> gather<T>(const Tensor<T>&, const Stencil&);                        \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

FAOR_INSTANTIATE(float)
FAOR_INSTANTIATE(double)

}  // namespace faor::ad
