#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cmcfae/errors.hpp"

namespace cmcfae {

class Tape;

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);

/// Lightweight handle to a node recorded on a Tape. Copying a Tensor copies
/// the handle, not the data; the Tape owns all values and gradients.
class Tensor {
 public:
  Tensor() = default;

  const Shape& shape() const;
  std::size_t numel() const;
  std::size_t rows() const;  // 2-D only
  std::size_t cols() const;  // 2-D only
  const std::vector<double>& value() const;
  /// The single entry of a one-element tensor.
  double scalar() const;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t node() const { return node_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t node) : tape_(tape), node_(node) {}

  Tape* tape_ = nullptr;
  std::size_t node_ = 0;
};

/// Wengert-list reverse-mode tape over dense float64 tensors.
///
/// Nodes are appended in evaluation order, so operands always precede their
/// results; backward() walks the list once in reverse. One backward pass per
/// tape: a second call without reset() is a contract error. Tapes are not
/// thread-safe; independent tapes may run on separate threads.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers an input tensor. Every leaf receives a gradient on backward.
  Tensor leaf(Shape shape, std::vector<double> data);
  /// Convenience scalar-shaped {1, 1} leaf.
  Tensor scalar_leaf(double v) { return leaf({1, 1}, {v}); }

  /// Reverse pass from a one-element root; fills gradients for every node
  /// that participates in root's history.
  void backward(const Tensor& root);

  const std::vector<double>& grad(const Tensor& t) const;

  /// Clears all nodes and re-arms backward().
  void reset();

  std::size_t node_count() const { return nodes_.size(); }

 private:
  friend class Tensor;
  friend struct TapeOps;

  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    // Propagates this node's gradient into its operands. Empty for leaves.
    std::function<void(Tape&)> backprop;
  };

  Tensor emplace(Shape shape, std::vector<double> value,
                 std::function<void(Tape&)> backprop);
  Node& at(std::size_t i) { return nodes_[i]; }
  const Node& at(std::size_t i) const { return nodes_[i]; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// --- Recorded operations -------------------------------------------------
//
// All operands of a binary op must live on the same tape. Elementwise
// binaries accept equal shapes or a one-element tensor against any shape
// (scalar broadcast); nothing else broadcasts.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor square(const Tensor& a);
/// (n, k) matrix plus a (1, k) row, added to every row. Backward for the row
/// is the column sum of the upstream gradient.
Tensor add_rowvec(const Tensor& a, const Tensor& row);
/// Sum of all entries, as a {1, 1} tensor.
Tensor sum_all(const Tensor& a);

}  // namespace cmcfae
