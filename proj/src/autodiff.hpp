// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode automatic differentiation on dense float64 tensors.
// A Tape records every primitive as it executes; backward() replays the
// record in reverse and accumulates gradients into requires-grad leaves.
// Tapes and their tensors are confined to one thread; independent tapes
// may run concurrently.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "common.hpp"

namespace hydra::ad {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  bool leaf = true;
  // Leaf gradient accumulator. Allocated lazily on first backward();
  // never allocated for non-requires-grad leaves.
  std::vector<double> grad;
  std::string name;  // optional, used in diagnostics
};

// Value-semantic handle onto a node. Cheap to copy; copies alias the
// same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return shape_numel(node_->shape); }
  std::int64_t rank() const {
    return static_cast<std::int64_t>(node_->shape.size());
  }
  std::int64_t dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& mutable_values() { return node_->value; }
  double scalar_value() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg);
  bool is_leaf() const { return node_->leaf; }

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const;
  void zero_grad();
  void clear_grad() { node_->grad.clear(); }

  void set_name(const std::string& n) { node_->name = n; }
  const std::string& name() const { return node_->name; }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;

  friend class Tape;
  friend Tensor wrap_node(std::shared_ptr<Node> n);
};

// Internal: wraps an op-produced node in a handle.
Tensor wrap_node(std::shared_ptr<Node> n);

// Records executed primitives in order. backward() visits each record at
// most once, in reverse execution order. Adjoints of intermediates live
// only for the duration of one backward call; leaf gradients accumulate
// additively across calls until zero_grad().
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return records_.size(); }
  void clear() { records_.clear(); }

  void backward(const Tensor& loss);

  // Internal: used by the primitive implementations.
  struct Record {
    std::shared_ptr<Node> output;
    std::vector<std::shared_ptr<Node>> inputs;
    // backward(out_adjoint, in_adjoints): add contributions into inputs.
    std::function<void(const std::vector<double>&,
                       std::vector<std::vector<double>*>&)>
        fn;
  };
  void record(Record r) { records_.push_back(std::move(r)); }

 private:
  std::vector<Record> records_;
};

// All primitives take the recording tape as the first argument; pass
// nullptr for a forward-only evaluation with no gradient bookkeeping.

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape* tape, const Tensor& a);

Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sigmoid(Tape* tape, const Tensor& a);
Tensor tanh(Tape* tape, const Tensor& a);
Tensor relu(Tape* tape, const Tensor& a);
Tensor exp(Tape* tape, const Tensor& a);
Tensor log1p(Tape* tape, const Tensor& a);
Tensor scale(Tape* tape, const Tensor& a, double c);

Tensor concat(Tape* tape, const std::vector<Tensor>& parts, int axis);
Tensor slice_cols(Tape* tape, const Tensor& a, std::int64_t col_begin,
                  std::int64_t col_end);
Tensor slice_rows(Tape* tape, const Tensor& a, std::int64_t row_begin,
                  std::int64_t row_end);

Tensor reduce_sum(Tape* tape, const Tensor& a);
Tensor reduce_mean(Tape* tape, const Tensor& a);

// Same elements, new shape (row-major order preserved).
Tensor reshape(Tape* tape, const Tensor& a, Shape shape);

}  // namespace hydra::ad
