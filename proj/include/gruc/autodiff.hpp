// SPDX-License-Identifier: Apache-2.0
#pragma once

// Tape-based reverse-mode differentiation over row-major Tensors.
//
// A Tape records every op applied during one forward pass. Each Var is an
// index into the tape. Tape::backward seeds d(loss)/d(loss) = 1 and walks the
// tape in reverse; parameter leaves then hold d(loss)/d(param) and can be
// folded into a ParameterSet with accumulate_param_grads. A Tape is not
// thread-safe; run one tape per worker.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gruc/params.hpp"
#include "gruc/tensor.hpp"

namespace gruc::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

using Index = std::vector<std::uint32_t>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a named parameter. Repeated calls return the same Var.
  Var param(const ParameterSet& params, const std::string& name);

  /// Appends an op node. `backward` may be empty when no input needs a grad.
  Var push(Tensor value, bool needs_grad, std::function<void(Tape&, std::uint32_t)> backward);

  const Tensor& value(std::uint32_t id) const;
  bool needs_grad(std::uint32_t id) const { return nodes_[id].needs_grad; }
  /// Gradient buffer for a node, zero-allocated on first access.
  Tensor& grad(std::uint32_t id);
  bool has_grad(std::uint32_t id) const { return !nodes_[id].grad.empty(); }

  void backward(Var loss);
  /// Adds every parameter leaf's gradient into `target` (scaled).
  void accumulate_param_grads(ParameterSet& target, double scale = 1.0) const;
  /// Moves the parameter-leaf gradients out, in first-use order. Lets worker
  /// threads hand gradients to a single reducer.
  std::vector<std::pair<std::string, Tensor>> take_param_grads();

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor own;
    const Tensor* external = nullptr;
    Tensor grad;
    bool needs_grad = false;
    std::function<void(Tape&, std::uint32_t)> backward;
  };
  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::uint32_t> param_ids_;
  std::vector<std::pair<std::string, std::uint32_t>> param_leaves_;
};

// ---- ops -------------------------------------------------------------------

/// x (n x k) * w^T, w is (m x k).
Var matmul_nt(Var x, Var w);
/// x * w^T (+ b broadcast over rows).
Var linear(Var x, Var w, std::optional<Var> b = std::nullopt);

/// Elementwise sum. `b` may also be a 1 x cols row broadcast over a's rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// scale * x + shift, elementwise.
Var affine(Var x, double scale, double shift);

Var tanh(Var x);
Var sigmoid(Var x);
Var relu(Var x);

Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var slice_cols(Var x, std::size_t start, std::size_t len);
Var concat_rows(std::span<const Var> parts);

/// out[r] = x[idx[r]].
Var gather_rows(Var x, Index idx);
/// out (rows x cols), out[idx[r]] += x[r].
Var scatter_add_rows(Var x, Index idx, std::size_t rows);
/// Row r of x scaled by w(r, 0); w is n x 1.
Var mul_rows(Var x, Var w);
/// 1 x k -> n x k by repetition.
Var broadcast_rows(Var x, std::size_t n);
Var sum_all(Var x);
/// Mean over rows: n x k -> 1 x k. Zero row for n == 0 is not allowed.
Var mean_rows(Var x);

/// Softmax of an n x 1 column within groups: out[r] normalized over all
/// rows sharing segment[r]. Max-subtracted per segment.
Var softmax_segments(Var scores, Index segment, std::size_t segments);
/// Softmax over all entries of a row or column vector.
Var softmax(Var scores);

/// -sum_i [a*y_i ln p_i + b*(1-y_i) ln(1-p_i)] with p clamped to [eps, 1-eps].
Var weighted_bce(Var probs, std::span<const double> labels, double pos_weight,
                 double neg_weight, double eps);
/// -log softmax(logits)[target] for a 1 x R row.
Var softmax_cross_entropy(Var logits, std::size_t target);

/// Inverted dropout. Identity when !training or rate == 0.
Var dropout(Var x, double rate, bool training, std::mt19937_64& rng);

// ---- plain tensor helpers shared by ops and oracles -------------------------

/// Numerically stable softmax of a span; throws DomainError on empty input.
std::vector<double> softmax_values(std::span<const double> v);
double sigmoid_value(double x);

}  // namespace gruc::ad
