// SPDX-License-Identifier: Apache-2.0
#pragma once

// Parameterized building blocks on top of the autodiff ops. A block owns
// no state: weights live in a ParameterSet under "<prefix>.<suffix>" names.

#include <cstdint>
#include <span>
#include <string>

#include "gruc/autodiff.hpp"
#include "gruc/params.hpp"

namespace gruc {

/// Registers "<prefix>.W" (out x in) and optionally "<prefix>.b" (1 x out).
void add_dense(ParameterSet& params, const std::string& prefix, std::size_t in,
               std::size_t out, bool bias, std::uint64_t seed);

/// x * W^T (+ b). Throws DimensionError naming the weight on mismatch.
ad::Var dense(const ParameterSet& params, const std::string& prefix, ad::Var x);

/// Columns [start, start + len) of "<prefix>.W". Applying the blocks of one
/// weight to the parts of a concatenated input and summing equals dense() on
/// the concatenation; callers use this to transform per-node terms before
/// gathering them onto edges.
ad::Var weight_block(const ParameterSet& params, ad::Tape& tape, const std::string& prefix,
                     std::size_t start, std::size_t len);
/// y + "<prefix>.b" when that bias exists.
ad::Var add_bias(const ParameterSet& params, const std::string& prefix, ad::Var y);
/// dense(concat_cols(parts)) without materializing the concatenation. All
/// parts have the same row count.
ad::Var dense_parts(const ParameterSet& params, const std::string& prefix,
                    std::span<const ad::Var> parts);

/// GRU with gates z (update) and r (reset):
///   z  = sigmoid(Wz x + Uz h + bz)
///   r  = sigmoid(Wr x + Ur h + br)
///   h~ = tanh(Wh x + Uh (r * h) + bh)
///   h' = (1 - z) * h + z * h~
/// Rows of h and x are independent cells evaluated together.
struct GruCell {
  std::string prefix;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  void add_params(ParameterSet& params, std::uint64_t seed) const;
  ad::Var step(const ParameterSet& params, ad::Var h, ad::Var x) const;
};

/// LSTM with gate order [input, forget, cell, output] packed in
/// "<prefix>.Wx" (4H x D), "<prefix>.Wh" (4H x H), "<prefix>.b" (1 x 4H).
struct LstmCell {
  std::string prefix;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  void add_params(ParameterSet& params, std::uint64_t seed) const;
  /// Advances (h, c) by one input row.
  void step(const ParameterSet& params, ad::Var x, ad::Var& h, ad::Var& c) const;
};

}  // namespace gruc
