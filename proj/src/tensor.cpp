#include "cmcfae/tensor.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "cmcfae/parallel.hpp"

namespace cmcfae {

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

void require_same_tape(const Tensor& a, const Tensor& b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw ContractError("operands must be recorded on the same tape");
  }
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

// --- Tensor accessors ------------------------------------------------------

const Shape& Tensor::shape() const { return tape_->at(node_).shape; }
std::size_t Tensor::numel() const { return tape_->at(node_).value.size(); }

std::size_t Tensor::rows() const {
  const Shape& s = shape();
  if (s.size() != 2) throw DimensionError("rows(): tensor is not 2-D");
  return s[0];
}

std::size_t Tensor::cols() const {
  const Shape& s = shape();
  if (s.size() != 2) throw DimensionError("cols(): tensor is not 2-D");
  return s[1];
}

const std::vector<double>& Tensor::value() const { return tape_->at(node_).value; }

double Tensor::scalar() const {
  if (numel() != 1) {
    throw ContractError("scalar(): tensor has " + std::to_string(numel()) +
                        " elements");
  }
  return value()[0];
}

// --- Tape ------------------------------------------------------------------

Tensor Tape::emplace(Shape shape, std::vector<double> value,
                     std::function<void(Tape&)> backprop) {
  const std::size_t n = shape_numel(shape);
  if (n != value.size()) {
    throw DimensionError("tensor data length " + std::to_string(value.size()) +
                         " does not match shape " + shape_str(shape));
  }
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("zero extent in shape " + shape_str(shape));
  }
  Node node;
  node.shape = std::move(shape);
  node.value = std::move(value);
  node.grad.assign(n, 0.0);
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::leaf(Shape shape, std::vector<double> data) {
  return emplace(std::move(shape), std::move(data), nullptr);
}

void Tape::backward(const Tensor& root) {
  if (!root.valid() || root.tape() != this) {
    throw ContractError("backward(): root does not belong to this tape");
  }
  if (root.numel() != 1) {
    throw ContractError("backward(): root must be a one-element tensor");
  }
  if (backward_done_) {
    throw ContractError("backward(): tape already differentiated; reset() first");
  }
  backward_done_ = true;
  nodes_[root.node()].grad[0] = 1.0;
  for (std::size_t i = root.node() + 1; i-- > 0;) {
    if (nodes_[i].backprop) nodes_[i].backprop(*this);
  }
}

const std::vector<double>& Tape::grad(const Tensor& t) const {
  if (!t.valid() || t.tape() != this) {
    throw ContractError("grad(): tensor does not belong to this tape");
  }
  if (!backward_done_) throw ContractError("grad(): backward() has not run");
  return nodes_[t.node()].grad;
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

// --- Op helpers --------------------------------------------------------------

struct TapeOps {
  static Tape& tape(const Tensor& t) { return *t.tape(); }
  static Tensor record(Tape& tp, Shape shape, std::vector<double> value,
                       std::function<void(Tape&)> backprop) {
    return tp.emplace(std::move(shape), std::move(value), std::move(backprop));
  }
  static void set_backprop(Tape& tp, std::size_t node,
                           std::function<void(Tape&)> fn) {
    tp.at(node).backprop = std::move(fn);
  }
  static std::vector<double>& grad_of(Tape& tp, std::size_t node) {
    return tp.at(node).grad;
  }
  static const std::vector<double>& value_of(Tape& tp, std::size_t node) {
    return tp.at(node).value;
  }
};

namespace {

// Shared implementation for equal-shape / scalar-broadcast binaries.
// fwd(a, b) -> value; ga(a, b, g) and gb(a, b, g) are the local gradients
// times the upstream gradient.
template <class Fwd, class Ga, class Gb>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, Fwd fwd,
                 Ga ga, Gb gb) {
  require_same_tape(a, b);
  const bool a_scalar = a.numel() == 1;
  const bool b_scalar = b.numel() == 1;
  if (a.shape() != b.shape() && !a_scalar && !b_scalar) {
    throw DimensionError(std::string(name) + ": incompatible shapes " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tape& tp = TapeOps::tape(a);
  const std::vector<double>& av = a.value();
  const std::vector<double>& bv = b.value();
  const Shape out_shape = a_scalar && !b_scalar ? b.shape() : a.shape();
  const std::size_t n = shape_numel(out_shape);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = fwd(av[a_scalar ? 0 : i], bv[b_scalar ? 0 : i]);
  }
  const std::size_t ai = a.node(), bi = b.node(), nn = n;
  // Record first so the closure can capture the output node index.
  Tensor result = TapeOps::record(tp, out_shape, std::move(out), nullptr);
  const std::size_t oi = result.node();
  TapeOps::set_backprop(tp, oi, [=](Tape& t) {
    const std::vector<double>& g = TapeOps::grad_of(t, oi);
    const std::vector<double>& avv = TapeOps::value_of(t, ai);
    const std::vector<double>& bvv = TapeOps::value_of(t, bi);
    std::vector<double>& agrad = TapeOps::grad_of(t, ai);
    std::vector<double>& bgrad = TapeOps::grad_of(t, bi);
    for (std::size_t i = 0; i < nn; ++i) {
      const double x = avv[a_scalar ? 0 : i];
      const double y = bvv[b_scalar ? 0 : i];
      agrad[a_scalar ? 0 : i] += ga(x, y, g[i]);
      bgrad[b_scalar ? 0 : i] += gb(x, y, g[i]);
    }
  });
  return result;
}

template <class Fwd, class Grad>
Tensor unary_op(const Tensor& a, Fwd fwd, Grad grad_fn) {
  if (!a.valid()) throw ContractError("unary op on an empty tensor handle");
  Tape& tp = TapeOps::tape(a);
  const std::vector<double>& av = a.value();
  const std::size_t n = av.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
  Tensor result = TapeOps::record(tp, a.shape(), std::move(out), nullptr);
  const std::size_t ai = a.node(), oi = result.node();
  TapeOps::set_backprop(tp, oi, [=](Tape& t) {
    const std::vector<double>& g = TapeOps::grad_of(t, oi);
    const std::vector<double>& x = TapeOps::value_of(t, ai);
    const std::vector<double>& y = TapeOps::value_of(t, oi);
    std::vector<double>& agrad = TapeOps::grad_of(t, ai);
    for (std::size_t i = 0; i < n; ++i) agrad[i] += grad_fn(x[i], y[i]) * g[i];
  });
  return result;
}

}  // namespace

// --- Public ops --------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b);
  if (a.shape().size() != 2 || b.shape().size() != 2) {
    throw DimensionError("matmul: operands must be 2-D");
  }
  const std::size_t n = a.rows(), k = a.cols(), k2 = b.rows(), m = b.cols();
  if (k != k2) {
    throw DimensionError("matmul: inner dimensions disagree, " +
                         shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  Tape& tp = TapeOps::tape(a);
  const std::vector<double>& av = a.value();
  const std::vector<double>& bv = b.value();
  std::vector<double> out(n * m, 0.0);
  // ikj loop: C[i, j] accumulates over k in ascending order regardless of the
  // parallel split, so results are bitwise reproducible.
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double* ci = &out[i * m];
      const double* ai = &av[i * k];
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = ai[kk];
        const double* bk = &bv[kk * m];
        for (std::size_t j = 0; j < m; ++j) ci[j] += aik * bk[j];
      }
    }
  }, /*grain=*/8);

  Tensor result = TapeOps::record(tp, {n, m}, std::move(out), nullptr);
  const std::size_t ai_node = a.node(), bi_node = b.node(), oi = result.node();
  TapeOps::set_backprop(tp, oi, [=](Tape& t) {
    const std::vector<double>& g = TapeOps::grad_of(t, oi);
    const std::vector<double>& avv = TapeOps::value_of(t, ai_node);
    const std::vector<double>& bvv = TapeOps::value_of(t, bi_node);
    std::vector<double>& agrad = TapeOps::grad_of(t, ai_node);
    std::vector<double>& bgrad = TapeOps::grad_of(t, bi_node);
    // dA = dC * B^T : dot of contiguous rows.
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const double* gi = &g[i * m];
        double* dai = &agrad[i * k];
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double* bk = &bvv[kk * m];
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += gi[j] * bk[j];
          dai[kk] += s;
        }
      }
    }, /*grain=*/8);
    // dB = A^T * dC : each dB row kk is owned by one chunk; the inner
    // accumulation over i stays in ascending order.
    parallel_for(k, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t kk = lo; kk < hi; ++kk) {
        double* dbk = &bgrad[kk * m];
        for (std::size_t i = 0; i < n; ++i) {
          const double aik = avv[i * k + kk];
          if (aik == 0.0) continue;
          const double* gi = &g[i * m];
          for (std::size_t j = 0; j < m; ++j) dbk[j] += aik * gi[j];
        }
      }
    }, /*grain=*/8);
  });
  return result;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op("add", a, b, [](double x, double y) { return x + y; },
                   [](double, double, double g) { return g; },
                   [](double, double, double g) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op("sub", a, b, [](double x, double y) { return x - y; },
                   [](double, double, double g) { return g; },
                   [](double, double, double g) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op("mul", a, b, [](double x, double y) { return x * y; },
                   [](double, double y, double g) { return y * g; },
                   [](double x, double, double g) { return x * g; });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary_op(a, [c](double x) { return x + c; },
                  [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double c) {
  return unary_op(a, [c](double x) { return x * c; },
                  [c](double, double) { return c; });
}

Tensor relu(const Tensor& a) {
  return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor cos(const Tensor& a) {
  return unary_op(a, [](double x) { return std::cos(x); },
                  [](double x, double) { return -std::sin(x); });
}

Tensor sin(const Tensor& a) {
  return unary_op(a, [](double x) { return std::sin(x); },
                  [](double x, double) { return std::cos(x); });
}

Tensor square(const Tensor& a) {
  return unary_op(a, [](double x) { return x * x; },
                  [](double x, double) { return 2.0 * x; });
}

Tensor add_rowvec(const Tensor& a, const Tensor& row) {
  require_same_tape(a, row);
  if (a.shape().size() != 2 || row.shape().size() != 2 || row.rows() != 1 ||
      row.cols() != a.cols()) {
    throw DimensionError("add_rowvec: need (n, k) and (1, k), got " +
                         shape_str(a.shape()) + " and " + shape_str(row.shape()));
  }
  Tape& tp = TapeOps::tape(a);
  const std::size_t n = a.rows(), k = a.cols();
  const std::vector<double>& av = a.value();
  const std::vector<double>& rv = row.value();
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = av[i * k + j] + rv[j];
  }
  Tensor result = TapeOps::record(tp, {n, k}, std::move(out), nullptr);
  const std::size_t ai = a.node(), ri = row.node(), oi = result.node();
  TapeOps::set_backprop(tp, oi, [=](Tape& t) {
    const std::vector<double>& g = TapeOps::grad_of(t, oi);
    std::vector<double>& agrad = TapeOps::grad_of(t, ai);
    std::vector<double>& rgrad = TapeOps::grad_of(t, ri);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        agrad[i * k + j] += g[i * k + j];
        rgrad[j] += g[i * k + j];
      }
    }
  });
  return result;
}

Tensor sum_all(const Tensor& a) {
  if (!a.valid()) throw ContractError("sum_all on an empty tensor handle");
  Tape& tp = TapeOps::tape(a);
  const std::size_t n = a.numel();
  const std::vector<double>& av = a.value();
  double s = 0.0;
  for (double v : av) s += v;
  // Recording may reallocate node storage; nothing from before the record
  // call is referenced past it.
  Tensor result = TapeOps::record(tp, {1, 1}, {s}, nullptr);
  const std::size_t ai = a.node(), oi = result.node();
  TapeOps::set_backprop(tp, oi, [=](Tape& t) {
    const double g = TapeOps::grad_of(t, oi)[0];
    std::vector<double>& agrad = TapeOps::grad_of(t, ai);
    for (std::size_t i = 0; i < n; ++i) agrad[i] += g;
  });
  return result;
}

}  // namespace cmcfae
