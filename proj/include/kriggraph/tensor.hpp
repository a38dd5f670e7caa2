#pragma once

// Dense 2-D tensors of doubles with reverse-mode differentiation.
//
// Every tensor is a rows x cols matrix; scalars are 1x1 and vectors are
// 1xn or nx1. Operations on tensors that require gradients record their
// inputs and a backward rule. backward() orders the recorded history by
// creation sequence and replays it in reverse, so each node's rule runs
// exactly once after all of its consumers have contributed.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace kriggraph {

namespace detail {

inline std::uint64_t next_sequence() {
  static std::atomic<std::uint64_t> counter{0};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // empty until needed
  bool requires_grad = false;
  std::uint64_t seq = next_sequence();
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;  // reads this->grad, accumulates into parents

  bool is_leaf() const { return !backward; }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() : node_(std::make_shared<detail::Node>()) {}

  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0) : Tensor() {
    node_->rows = rows;
    node_->cols = cols;
    node_->value.assign(rows * cols, fill);
  }

  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data,
         bool requires_grad = false)
      : Tensor() {
    if (data.size() != rows * cols)
      throw DimensionError("Tensor: data length " + std::to_string(data.size()) +
                           " does not match shape " + std::to_string(rows) + "x" +
                           std::to_string(cols));
    node_->rows = rows;
    node_->cols = cols;
    node_->value = std::move(data);
    set_requires_grad(requires_grad);
  }

  explicit Tensor(const Matrix& m) : Tensor(m.rows(), m.cols(), m.data()) {}

  static Tensor scalar(double v) { return Tensor(1, 1, std::vector<double>{v}); }

  /// Trainable leaf.
  static Tensor parameter(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return Tensor(rows, cols, std::move(data), true);
  }

  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  std::vector<std::size_t> shape() const { return {node_->rows, node_->cols}; }
  bool is_scalar() const { return rows() == 1 && cols() == 1; }

  double operator()(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const {
    if (!is_scalar()) throw ContractError("item() on non-scalar tensor");
    return node_->value[0];
  }

  std::span<const double> data() const { return node_->value; }
  /// Direct write access; only meaningful for leaves (parameters, inputs).
  std::span<double> mutable_data() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) {
    node_->requires_grad = on;
    if (on) node_->ensure_grad();
  }
  bool is_leaf() const { return node_->is_leaf(); }

  /// Accumulated gradient (zeros if backward never reached this tensor).
  std::span<const double> grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  /// Same values, cut from the history.
  Tensor detach() const { return Tensor(rows(), cols(), node_->value); }

  Matrix to_matrix() const { return Matrix(rows(), cols(), node_->value); }

  /// Identity of the underlying storage (copies of a handle share it).
  const void* id() const { return node_.get(); }

  // Internal: used by operation implementations.
  detail::Node& node() const { return *node_; }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

  static Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value,
                            std::initializer_list<Tensor> inputs,
                            std::function<void(detail::Node&)> rule) {
    Tensor out(rows, cols, std::move(value));
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      out.node_->requires_grad = true;
      for (const auto& in : inputs) out.node_->parents.push_back(in.node_);
      out.node_->backward = std::move(rule);
    }
    return out;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Populates .grad of every requires_grad ancestor of a scalar root.
inline void backward(const Tensor& root) {
  if (!root.is_scalar())
    throw ContractError("backward: root must be scalar, got " + std::to_string(root.rows()) +
                        "x" + std::to_string(root.cols()));
  if (!root.requires_grad()) return;

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{&root.node()};
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    if (!n->requires_grad || !seen.insert(n).second) continue;
    order.push_back(n);
    for (auto& p : n->parents) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](const detail::Node* a, const detail::Node* b) { return a->seq > b->seq; });

  for (auto* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->value.size(), 0.0);
  }
  root.node().ensure_grad();
  root.node().grad[0] += 1.0;
  for (auto* n : order) {
    if (!n->is_leaf()) n->backward(*n);
  }
}

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                         "x" + std::to_string(b.cols()));
}

inline std::size_t broadcast_dim(std::size_t a, std::size_t b, const char* op) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw DimensionError(std::string(op) + ": cannot broadcast " + std::to_string(a) + " with " +
                       std::to_string(b));
}

// Applies f elementwise under 2-D broadcasting; df returns (d/da, d/db).
template <typename F, typename DF>
Tensor broadcast_binary(const Tensor& a, const Tensor& b, const char* op, F f, DF df) {
  const std::size_t r = broadcast_dim(a.rows(), b.rows(), op);
  const std::size_t c = broadcast_dim(a.cols(), b.cols(), op);
  auto index = [](const Tensor& t, std::size_t i, std::size_t j) {
    return (t.rows() == 1 ? 0 : i) * t.cols() + (t.cols() == 1 ? 0 : j);
  };
  std::vector<double> out(r * c);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = f(av[index(a, i, j)], bv[index(b, i, j)]);
  return Tensor::make_result(r, c, std::move(out), {a, b}, [a, b, r, c, index, df](Node& self) {
    Node& na = a.node();
    Node& nb = b.node();
    if (na.requires_grad) na.ensure_grad();
    if (nb.requires_grad) nb.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const std::size_t ia = index(a, i, j);
        const std::size_t ib = index(b, i, j);
        auto [da, db] = df(na.value[ia], nb.value[ib]);
        const double g = self.grad[i * c + j];
        if (na.requires_grad) na.grad[ia] += g * da;
        if (nb.requires_grad) nb.grad[ib] += g * db;
      }
  });
}

// Elementwise unary with derivative expressed from (input, output).
template <typename F, typename DF>
Tensor unary(const Tensor& a, F f, DF df) {
  std::vector<double> out(a.size());
  auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  return Tensor::make_result(a.rows(), a.cols(), std::move(out), {a}, [a, df](Node& self) {
    Node& na = a.node();
    na.ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i)
      na.grad[i] += self.grad[i] * df(na.value[i], self.value[i]);
  });
}

}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      const double* brow = bv.data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
    }
  return Tensor::make_result(m, n, std::move(out), {a, b}, [a, b, m, k, n](detail::Node& self) {
    detail::Node& na = a.node();
    detail::Node& nb = b.node();
    const auto& g = self.grad;
    if (na.requires_grad) {  // dA = G * B^T
      na.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * nb.value[p * n + j];
          na.grad[i * k + p] += s;
        }
    }
    if (nb.requires_grad) {  // dB = A^T * G
      nb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double x = na.value[i * k + p];
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) nb.grad[p * n + j] += x * g[i * n + j];
        }
    }
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::broadcast_binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return std::pair{1.0, 1.0}; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::broadcast_binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return std::pair{1.0, -1.0}; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::broadcast_binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y) { return std::pair{y, x}; });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  for (double y : b.data())
    if (y == 0.0) throw DomainError("div: division by zero");
  return detail::broadcast_binary(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double x, double y) { return std::pair{1.0 / y, -x / (y * y)}; });
}

/// Elementwise maximum; ties send the gradient to the first argument.
inline Tensor maximum(const Tensor& a, const Tensor& b) {
  return detail::broadcast_binary(
      a, b, "max", [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y) { return x >= y ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0}; });
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

inline Tensor scale(const Tensor& a, double s) {
  return detail::unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

inline Tensor add_scalar(const Tensor& a, double s) {
  return detail::unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

inline Tensor relu(const Tensor& a) {
  return detail::unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(const Tensor& a) {
  return detail::unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor exp(const Tensor& a) {
  return detail::unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Tensor log(const Tensor& a) {
  for (double x : a.data())
    if (!(x > 0.0)) throw DomainError("log: non-positive argument " + std::to_string(x));
  return detail::unary(a, [](double x) { return std::log(x); },
                       [](double x, double) { return 1.0 / x; });
}

/// |x| with subgradient 0 at the kink.
inline Tensor abs(const Tensor& a) {
  return detail::unary(
      a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

inline Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return Tensor::make_result(1, 1, {s}, {a}, [a](detail::Node& self) {
    detail::Node& na = a.node();
    na.ensure_grad();
    for (double& g : na.grad) g += self.grad[0];
  });
}

inline Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

/// Column means: rows x cols -> 1 x cols.
inline Tensor mean_rows(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  if (r == 0) throw DimensionError("mean_rows: no rows");
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += a(i, j);
  for (double& v : out) v /= static_cast<double>(r);
  return Tensor::make_result(1, c, std::move(out), {a}, [a, r, c](detail::Node& self) {
    detail::Node& na = a.node();
    na.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) na.grad[i * c + j] += self.grad[j] / double(r);
  });
}

/// Row sums: rows x cols -> rows x 1.
inline Tensor sum_cols(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += a(i, j);
  return Tensor::make_result(r, 1, std::move(out), {a}, [a, r, c](detail::Node& self) {
    detail::Node& na = a.node();
    na.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) na.grad[i * c + j] += self.grad[i];
  });
}

/// [a, b] along the last dimension.
inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw DimensionError("concat_cols: row counts " + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()));
  const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols(), c = ca + cb;
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out[i * c + j] = a(i, j);
    for (std::size_t j = 0; j < cb; ++j) out[i * c + ca + j] = b(i, j);
  }
  return Tensor::make_result(r, c, std::move(out), {a, b}, [a, b, r, ca, cb, c](detail::Node& self) {
    detail::Node& na = a.node();
    detail::Node& nb = b.node();
    if (na.requires_grad) {
      na.ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < ca; ++j) na.grad[i * ca + j] += self.grad[i * c + j];
    }
    if (nb.requires_grad) {
      nb.ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < cb; ++j) nb.grad[i * cb + j] += self.grad[i * c + ca + j];
    }
  });
}

inline Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a(i, j);
  return Tensor::make_result(c, r, std::move(out), {a}, [a, r, c](detail::Node& self) {
    detail::Node& na = a.node();
    na.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) na.grad[i * c + j] += self.grad[j * r + i];
  });
}

/// Rows `ids` of a, in order (repeats allowed).
inline Tensor gather_rows(const Tensor& a, std::span<const std::size_t> ids) {
  const std::size_t c = a.cols();
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  std::vector<double> out(idx.size() * c);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= a.rows()) throw DimensionError("gather_rows: index out of range");
    for (std::size_t j = 0; j < c; ++j) out[k * c + j] = a(idx[k], j);
  }
  return Tensor::make_result(idx.size(), c, std::move(out), {a}, [a, idx, c](detail::Node& self) {
    detail::Node& na = a.node();
    na.ensure_grad();
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t j = 0; j < c; ++j) na.grad[idx[k] * c + j] += self.grad[k * c + j];
  });
}

/// Columns [begin, end).
inline Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) throw DimensionError("slice_cols: bad range");
  const std::size_t r = a.rows(), c = a.cols(), w = end - begin;
  std::vector<double> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a(i, begin + j);
  return Tensor::make_result(r, w, std::move(out), {a}, [a, r, c, w, begin](detail::Node& self) {
    detail::Node& na = a.node();
    na.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) na.grad[i * c + begin + j] += self.grad[i * w + j];
  });
}

namespace detail {

// Row softmax restricted to entries where mask != 0; fully masked rows give zeros.
inline Tensor softmax_rows_impl(const Tensor& a, const std::vector<char>* mask) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (!mask || (*mask)[i * c + j]) mx = std::max(mx, a(i, j));
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      if (!mask || (*mask)[i * c + j]) z += (out[i * c + j] = std::exp(a(i, j) - mx));
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  return Tensor::make_result(r, c, std::move(out), {a}, [a, r, c](Node& self) {
    Node& na = a.node();
    na.ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.grad[i * c + j] * self.value[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        na.grad[i * c + j] += self.value[i * c + j] * (self.grad[i * c + j] - dot);
    }
  });
}

}  // namespace detail

/// Shift-invariant softmax along each row.
inline Tensor softmax_rows(const Tensor& a) { return detail::softmax_rows_impl(a, nullptr); }

/// Softmax along each row over the entries where `mask` is nonzero.
inline Tensor masked_softmax_rows(const Tensor& a, const Matrix& mask) {
  if (mask.rows() != a.rows() || mask.cols() != a.cols())
    throw DimensionError("masked_softmax_rows: mask shape mismatch");
  std::vector<char> m(mask.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = mask.data()[i] != 0.0;
  return detail::softmax_rows_impl(a, &m);
}

/// log(softmax) along each row, computed via log-sum-exp.
inline Tensor log_softmax_rows(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, a(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(a(i, j) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = a(i, j) - lse;
  }
  return Tensor::make_result(r, c, std::move(out), {a}, [a, r, c](detail::Node& self) {
    detail::Node& na = a.node();
    na.ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < c; ++j) gs += self.grad[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        na.grad[i * c + j] += self.grad[i * c + j] - std::exp(self.value[i * c + j]) * gs;
    }
  });
}

/// Norm guard added to |x| in cosine similarity.
inline constexpr double kCosineEps = 1e-12;

/// Row-wise cosine similarity: (n x d, n x d) -> n x 1.
inline Tensor cosine_rows(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "cosine_rows");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) {
    double d = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      d += a(i, j) * b(i, j);
      na += a(i, j) * a(i, j);
      nb += b(i, j) * b(i, j);
    }
    out[i] = d / ((std::sqrt(na) + kCosineEps) * (std::sqrt(nb) + kCosineEps));
  }
  return Tensor::make_result(r, 1, std::move(out), {a, b}, [a, b, r, c](detail::Node& self) {
    detail::Node& xa = a.node();
    detail::Node& xb = b.node();
    if (xa.requires_grad) xa.ensure_grad();
    if (xb.requires_grad) xb.ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      const double* av = xa.value.data() + i * c;
      const double* bv = xb.value.data() + i * c;
      double d = 0.0, sa = 0.0, sb = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        d += av[j] * bv[j];
        sa += av[j] * av[j];
        sb += bv[j] * bv[j];
      }
      const double la = std::sqrt(sa), lb = std::sqrt(sb);
      const double da = la + kCosineEps, db = lb + kCosineEps;
      const double g = self.grad[i];
      // d/da_k [d / (da db)] = b_k/(da db) - d a_k / (la da^2 db)
      for (std::size_t j = 0; j < c; ++j) {
        if (xa.requires_grad) {
          double t = bv[j] / (da * db);
          if (la > 0.0) t -= d * av[j] / (la * da * da * db);
          xa.grad[i * c + j] += g * t;
        }
        if (xb.requires_grad) {
          double t = av[j] / (da * db);
          if (lb > 0.0) t -= d * bv[j] / (lb * db * db * da);
          xb.grad[i * c + j] += g * t;
        }
      }
    }
  });
}

/// Adam moment estimates for one parameter tensor.
struct AdamSlot {
  std::vector<double> m;
  std::vector<double> v;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed, ordered parameter list.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    slots_.reserve(params_.size());
    for (const auto& p : params_)
      slots_.push_back({std::vector<double>(p.size(), 0.0), std::vector<double>(p.size(), 0.0)});
  }

  /// Applies one update from the parameters' current .grad.
  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k];
      auto w = p.mutable_data();
      auto g = p.grad();
      auto& s = slots_[k];
      if (s.m.size() != w.size()) throw DimensionError("Adam: state shape mismatch");
      for (std::size_t i = 0; i < w.size(); ++i) {
        s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g[i];
        s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mh = s.m[i] / c1;
        const double vh = s.v[i] / c2;
        w[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::size_t steps() const { return t_; }
  const std::vector<AdamSlot>& slots() const { return slots_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamSlot> slots_;
  AdamConfig cfg_;
  std::size_t t_ = 0;
};

}  // namespace kriggraph
