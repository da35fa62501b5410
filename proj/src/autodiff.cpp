// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace hydra::ad {

namespace {

using std::int64_t;

// C[m x n] += or = A[m x k] * B[k x n], row-major, ikj ordering.
void gemm_nn(const double* a, const double* b, double* c, int64_t m, int64_t k,
             int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x k] += A[m x n] * B^T where B is [k x n].
void gemm_nt_acc(const double* a, const double* b, double* c, int64_t m,
                 int64_t n, int64_t k) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (int64_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

// C[k x n] += A^T * B where A is [m x k], B is [m x n].
void gemm_tn_acc(const double* a, const double* b, double* c, int64_t m,
                 int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

enum class Broadcast { kEqual, kScalarLeft, kScalarRight, kRowLeft, kRowRight };

bool is_row_of(const Shape& row, const Shape& full) {
  if (full.size() != 2) return false;
  if (row.size() == 1) return row[0] == full[1];
  if (row.size() == 2) return row[0] == 1 && row[1] == full[1];
  return false;
}

Broadcast classify_broadcast(const Tensor& a, const Tensor& b,
                             const char* opname) {
  if (a.shape() == b.shape()) return Broadcast::kEqual;
  if (b.numel() == 1) return Broadcast::kScalarRight;
  if (a.numel() == 1) return Broadcast::kScalarLeft;
  if (is_row_of(b.shape(), a.shape())) return Broadcast::kRowRight;
  if (is_row_of(a.shape(), b.shape())) return Broadcast::kRowLeft;
  throw DimensionError(std::string(opname) + ": incompatible shapes " +
                       shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

}  // namespace

std::int64_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(),
                         static_cast<std::int64_t>(1),
                         std::multiplies<std::int64_t>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor Tensor::leaf(Shape shape, std::vector<double> values,
                    bool requires_grad) {
  auto n = std::make_shared<Node>();
  if (shape_numel(shape) != static_cast<std::int64_t>(values.size())) {
    throw DimensionError("tensor values length " +
                         std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
  }
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  n->leaf = true;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return leaf(Shape{}, {v}, requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto count = static_cast<size_t>(shape_numel(shape));
  return leaf(std::move(shape), std::vector<double>(count, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  auto count = static_cast<size_t>(shape_numel(shape));
  return leaf(std::move(shape), std::vector<double>(count, v), requires_grad);
}

double Tensor::scalar_value() const {
  if (numel() != 1) {
    throw DimensionError("scalar_value on tensor of shape " +
                         shape_str(shape()));
  }
  return node_->value[0];
}

void Tensor::set_requires_grad(bool rg) {
  node_->requires_grad = rg;
  if (!rg) node_->grad.clear();
}

const std::vector<double>& Tensor::grad() const {
  if (node_->grad.empty()) {
    throw Error("gradient not populated for tensor '" + node_->name + "'");
  }
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw Error("backward requires a scalar loss, got shape " +
                (loss.defined() ? shape_str(loss.shape()) : "(undefined)"));
  }
  std::unordered_map<Node*, std::vector<double>> adjoint;
  adjoint[loss.node()] = {1.0};

  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    auto found = adjoint.find(it->output.get());
    if (found == adjoint.end()) continue;  // not on the path to the loss
    std::vector<std::vector<double>*> in_adjoints(it->inputs.size(), nullptr);
    for (size_t i = 0; i < it->inputs.size(); ++i) {
      Node* in = it->inputs[i].get();
      if (!in->requires_grad) continue;
      auto [slot, inserted] = adjoint.try_emplace(
          in, std::vector<double>(in->value.size(), 0.0));
      in_adjoints[i] = &slot->second;
    }
    it->fn(found->second, in_adjoints);
  }

  for (auto& [node, adj] : adjoint) {
    if (!node->leaf || !node->requires_grad) continue;
    if (node->grad.empty()) node->grad.assign(node->value.size(), 0.0);
    for (size_t i = 0; i < adj.size(); ++i) node->grad[i] += adj[i];
  }
}

Tensor wrap_node(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }

namespace {

Tensor make_output(Tape* tape, Shape shape, std::vector<double> values,
                   const std::vector<Tensor>& inputs,
                   std::function<void(const std::vector<double>&,
                                      std::vector<std::vector<double>*>&)>
                       backward_fn) {
  bool needs_grad = false;
  for (const auto& t : inputs) needs_grad = needs_grad || t.requires_grad();
  needs_grad = needs_grad && tape != nullptr;

  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = needs_grad;
  n->leaf = false;

  if (needs_grad) {
    Tape::Record rec;
    rec.output = n;
    rec.inputs.reserve(inputs.size());
    for (const auto& t : inputs) rec.inputs.push_back(t.node_ptr());
    rec.fn = std::move(backward_fn);
    tape->record(std::move(rec));
  }
  return wrap_node(std::move(n));
}

}  // namespace

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
  // Rank-1 operands are treated as a single column (right) or row (left).
  const bool a_vec = a.rank() == 1;
  const bool b_vec = b.rank() == 1;
  if (a.rank() > 2 || b.rank() > 2 || a.rank() == 0 || b.rank() == 0) {
    throw DimensionError("matmul: unsupported ranks " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }
  const int64_t m = a_vec ? 1 : a.dim(0);
  const int64_t k = a_vec ? a.dim(0) : a.dim(1);
  const int64_t kb = b_vec ? b.dim(0) : b.dim(0);
  const int64_t n = b_vec ? 1 : b.dim(1);
  if (k != kb) {
    throw DimensionError("matmul: inner dimensions disagree, " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  std::vector<double> out(static_cast<size_t>(m * n), 0.0);
  gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);

  Shape out_shape;
  if (a_vec && b_vec) {
    out_shape = Shape{};  // inner product -> scalar
  } else if (a_vec) {
    out_shape = {n};
  } else if (b_vec) {
    out_shape = {m};
  } else {
    out_shape = {m, n};
  }

  auto an = a.node();
  auto bn = b.node();
  return make_output(
      tape, std::move(out_shape), std::move(out), {a, b},
      [an, bn, m, k, n](const std::vector<double>& dout,
                        std::vector<std::vector<double>*>& din) {
        if (din[0]) {
          // dA += dOut * B^T
          gemm_nt_acc(dout.data(), bn->value.data(), din[0]->data(), m, n, k);
        }
        if (din[1]) {
          // dB += A^T * dOut
          gemm_tn_acc(an->value.data(), dout.data(), din[1]->data(), m, k, n);
        }
      });
}

Tensor transpose(Tape* tape, const Tensor& a) {
  if (a.rank() != 2) {
    throw DimensionError("transpose expects a matrix, got " +
                         shape_str(a.shape()));
  }
  const int64_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(static_cast<size_t>(r * c));
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j)
      out[static_cast<size_t>(j * r + i)] = a.values()[static_cast<size_t>(i * c + j)];
  return make_output(tape, {c, r}, std::move(out), {a},
                     [r, c](const std::vector<double>& dout,
                            std::vector<std::vector<double>*>& din) {
                       if (!din[0]) return;
                       auto& da = *din[0];
                       for (int64_t j = 0; j < c; ++j)
                         for (int64_t i = 0; i < r; ++i)
                           da[static_cast<size_t>(i * c + j)] +=
                               dout[static_cast<size_t>(j * r + i)];
                     });
}

namespace {

// Shared machinery for add/sub/mul under the three supported broadcast
// forms (equal shape, scalar-with-tensor, row-with-matrix).
template <typename Fwd, typename Bwd>
Tensor binary_elementwise(Tape* tape, const Tensor& a, const Tensor& b,
                          const char* opname, Fwd fwd, Bwd bwd) {
  const Broadcast mode = classify_broadcast(a, b, opname);
  const Tensor& big = (mode == Broadcast::kScalarLeft ||
                       mode == Broadcast::kRowLeft)
                          ? b
                          : a;
  const auto& av = a.values();
  const auto& bv = b.values();
  const int64_t count = big.numel();
  const int64_t ncols = big.rank() == 2 ? big.dim(1) : count;

  std::vector<double> out(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    double x = 0.0, y = 0.0;
    switch (mode) {
      case Broadcast::kEqual:
        x = av[static_cast<size_t>(i)];
        y = bv[static_cast<size_t>(i)];
        break;
      case Broadcast::kScalarRight:
        x = av[static_cast<size_t>(i)];
        y = bv[0];
        break;
      case Broadcast::kScalarLeft:
        x = av[0];
        y = bv[static_cast<size_t>(i)];
        break;
      case Broadcast::kRowRight:
        x = av[static_cast<size_t>(i)];
        y = bv[static_cast<size_t>(i % ncols)];
        break;
      case Broadcast::kRowLeft:
        x = av[static_cast<size_t>(i % ncols)];
        y = bv[static_cast<size_t>(i)];
        break;
    }
    out[static_cast<size_t>(i)] = fwd(x, y);
  }

  auto an = a.node();
  auto bn = b.node();
  return make_output(
      tape, big.shape(), std::move(out), {a, b},
      [an, bn, mode, count, ncols, bwd](
          const std::vector<double>& dout,
          std::vector<std::vector<double>*>& din) {
        for (int64_t i = 0; i < count; ++i) {
          const size_t ia = (mode == Broadcast::kScalarLeft)
                                ? 0
                                : (mode == Broadcast::kRowLeft
                                       ? static_cast<size_t>(i % ncols)
                                       : static_cast<size_t>(i));
          const size_t ib = (mode == Broadcast::kScalarRight)
                                ? 0
                                : (mode == Broadcast::kRowRight
                                       ? static_cast<size_t>(i % ncols)
                                       : static_cast<size_t>(i));
          double dx, dy;
          bwd(an->value[ia], bn->value[ib], dout[static_cast<size_t>(i)], dx,
              dy);
          if (din[0]) (*din[0])[ia] += dx;
          if (din[1]) (*din[1])[ib] += dy;
        }
      });
}

template <typename Fwd, typename Bwd>
Tensor unary_elementwise(Tape* tape, const Tensor& a, Fwd fwd, Bwd bwd) {
  const int64_t count = a.numel();
  std::vector<double> out(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i)
    out[static_cast<size_t>(i)] = fwd(a.values()[static_cast<size_t>(i)]);

  auto an = a.node();
  Tensor result = make_output(
      tape, a.shape(), std::move(out), {a},
      [an, count, bwd](const std::vector<double>& dout,
                       std::vector<std::vector<double>*>& din) {
        if (!din[0]) return;
        auto& da = *din[0];
        for (int64_t i = 0; i < count; ++i) {
          const auto idx = static_cast<size_t>(i);
          da[idx] += bwd(an->value[idx], dout[idx]) ;
        }
      });
  return result;
}

}  // namespace

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double d, double& dx, double& dy) {
        dx = d;
        dy = d;
      });
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double d, double& dx, double& dy) {
        dx = d;
        dy = -d;
      });
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y, double d, double& dx, double& dy) {
        dx = d * y;
        dy = d * x;
      });
}

Tensor sigmoid(Tape* tape, const Tensor& a) {
  return unary_elementwise(
      tape, a,
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double x, double d) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return d * s * (1.0 - s);
      });
}

Tensor tanh(Tape* tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, [](double x) { return std::tanh(x); },
      [](double x, double d) {
        const double t = std::tanh(x);
        return d * (1.0 - t * t);
      });
}

Tensor relu(Tape* tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double d) { return x > 0.0 ? d : 0.0; });
}

Tensor exp(Tape* tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, [](double x) { return std::exp(x); },
      [](double x, double d) { return d * std::exp(x); });
}

Tensor log1p(Tape* tape, const Tensor& a) {
  for (double v : a.values()) {
    if (v <= -1.0) {
      throw DataError("log1p domain error: value " + format_double(v) +
                      " <= -1");
    }
  }
  return unary_elementwise(
      tape, a, [](double x) { return std::log1p(x); },
      [](double x, double d) { return d / (1.0 + x); });
}

Tensor scale(Tape* tape, const Tensor& a, double c) {
  return unary_elementwise(
      tape, a, [c](double x) { return c * x; },
      [c](double, double d) { return c * d; });
}

Tensor concat(Tape* tape, const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const auto rank = parts[0].rank();
  if (axis < 0 || axis >= rank) {
    throw DimensionError("concat: axis " + std::to_string(axis) +
                         " out of range for rank " + std::to_string(rank));
  }
  for (const auto& p : parts) {
    if (p.rank() != rank) {
      throw DimensionError("concat: mixed ranks " + shape_str(parts[0].shape()) +
                           " and " + shape_str(p.shape()));
    }
    for (int d = 0; d < rank; ++d) {
      if (d != axis && p.dim(d) != parts[0].dim(d)) {
        throw DimensionError("concat: shapes " + shape_str(parts[0].shape()) +
                             " and " + shape_str(p.shape()) +
                             " differ off the concat axis");
      }
    }
  }

  Shape out_shape = parts[0].shape();
  int64_t total_axis = 0;
  for (const auto& p : parts) total_axis += p.dim(axis);
  out_shape[static_cast<size_t>(axis)] = total_axis;

  const int64_t rows = rank == 2 ? parts[0].dim(0) : 1;
  std::vector<double> out(static_cast<size_t>(shape_numel(out_shape)));
  std::vector<int64_t> offsets;  // per part, column (or row) offset
  if (axis == static_cast<int>(rank) - 1 && rank == 2) {
    // column-wise: interleave per row
    const int64_t out_cols = total_axis;
    int64_t col0 = 0;
    for (const auto& p : parts) {
      offsets.push_back(col0);
      const int64_t pc = p.dim(1);
      for (int64_t i = 0; i < rows; ++i) {
        std::copy_n(p.values().data() + i * pc, pc,
                    out.data() + i * out_cols + col0);
      }
      col0 += pc;
    }
  } else {
    // axis 0 (rows of a matrix, or plain vectors): contiguous blocks
    int64_t pos = 0;
    for (const auto& p : parts) {
      offsets.push_back(pos);
      std::copy(p.values().begin(), p.values().end(), out.data() + pos);
      pos += p.numel();
    }
  }

  std::vector<int64_t> part_cols;
  for (const auto& p : parts) part_cols.push_back(rank == 2 ? p.dim(1) : p.numel());
  const bool column_mode = (axis == 1 && rank == 2);
  const int64_t out_cols = column_mode ? total_axis : 0;

  return make_output(
      tape, out_shape, std::move(out), parts,
      [offsets, part_cols, rows, column_mode, out_cols](
          const std::vector<double>& dout,
          std::vector<std::vector<double>*>& din) {
        for (size_t p = 0; p < din.size(); ++p) {
          if (!din[p]) continue;
          auto& dpart = *din[p];
          if (column_mode) {
            for (int64_t i = 0; i < rows; ++i) {
              const double* src = dout.data() + i * out_cols + offsets[p];
              double* dst = dpart.data() + i * part_cols[p];
              for (int64_t j = 0; j < part_cols[p]; ++j) dst[j] += src[j];
            }
          } else {
            const double* src = dout.data() + offsets[p];
            for (size_t j = 0; j < dpart.size(); ++j) dpart[j] += src[j];
          }
        }
      });
}

Tensor slice_cols(Tape* tape, const Tensor& a, std::int64_t col_begin,
                  std::int64_t col_end) {
  if (a.rank() != 2 && a.rank() != 1) {
    throw DimensionError("slice_cols expects a matrix or vector, got " +
                         shape_str(a.shape()));
  }
  const bool vec = a.rank() == 1;
  const int64_t rows = vec ? 1 : a.dim(0);
  const int64_t cols = vec ? a.dim(0) : a.dim(1);
  if (col_begin < 0 || col_end > cols || col_begin >= col_end) {
    throw DimensionError("slice_cols [" + std::to_string(col_begin) + "," +
                         std::to_string(col_end) + ") out of range for " +
                         shape_str(a.shape()));
  }
  const int64_t width = col_end - col_begin;
  std::vector<double> out(static_cast<size_t>(rows * width));
  for (int64_t i = 0; i < rows; ++i) {
    std::copy_n(a.values().data() + i * cols + col_begin, width,
                out.data() + i * width);
  }
  return make_output(
      tape, vec ? Shape{width} : Shape{rows, width}, std::move(out), {a},
      [rows, cols, col_begin, width](const std::vector<double>& dout,
                                     std::vector<std::vector<double>*>& din) {
        if (!din[0]) return;
        auto& da = *din[0];
        for (int64_t i = 0; i < rows; ++i) {
          const double* src = dout.data() + i * width;
          double* dst = da.data() + i * cols + col_begin;
          for (int64_t j = 0; j < width; ++j) dst[j] += src[j];
        }
      });
}

Tensor slice_rows(Tape* tape, const Tensor& a, std::int64_t row_begin,
                  std::int64_t row_end) {
  if (a.rank() != 2) {
    throw DimensionError("slice_rows expects a matrix, got " +
                         shape_str(a.shape()));
  }
  const int64_t rows = a.dim(0), cols = a.dim(1);
  if (row_begin < 0 || row_end > rows || row_begin >= row_end) {
    throw DimensionError("slice_rows [" + std::to_string(row_begin) + "," +
                         std::to_string(row_end) + ") out of range for " +
                         shape_str(a.shape()));
  }
  const int64_t height = row_end - row_begin;
  std::vector<double> out(a.values().begin() + row_begin * cols,
                          a.values().begin() + row_end * cols);
  return make_output(
      tape, {height, cols}, std::move(out), {a},
      [cols, row_begin, height](const std::vector<double>& dout,
                                std::vector<std::vector<double>*>& din) {
        if (!din[0]) return;
        auto& da = *din[0];
        for (int64_t j = 0; j < height * cols; ++j) {
          da[static_cast<size_t>(row_begin * cols + j)] +=
              dout[static_cast<size_t>(j)];
        }
      });
}

Tensor reduce_sum(Tape* tape, const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  const int64_t count = a.numel();
  return make_output(tape, Shape{}, {total}, {a},
                     [count](const std::vector<double>& dout,
                             std::vector<std::vector<double>*>& din) {
                       if (!din[0]) return;
                       auto& da = *din[0];
                       for (int64_t i = 0; i < count; ++i)
                         da[static_cast<size_t>(i)] += dout[0];
                     });
}

Tensor reduce_mean(Tape* tape, const Tensor& a) {
  return scale(tape, reduce_sum(tape, a), 1.0 / static_cast<double>(a.numel()));
}

Tensor reshape(Tape* tape, const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: " + shape_str(a.shape()) + " has " +
                         std::to_string(a.numel()) + " elements, target " +
                         shape_str(shape) + " wants " +
                         std::to_string(shape_numel(shape)));
  }
  return make_output(tape, std::move(shape), a.values(), {a},
                     [](const std::vector<double>& dout,
                        std::vector<std::vector<double>*>& din) {
                       if (!din[0]) return;
                       auto& da = *din[0];
                       for (size_t i = 0; i < dout.size(); ++i) da[i] += dout[i];
                     });
}

}  // namespace hydra::ad
