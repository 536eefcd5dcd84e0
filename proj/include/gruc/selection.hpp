// SPDX-License-Identifier: Apache-2.0
#pragma once
// Question-guided selection inside one modality graph:
//   alpha_i = softmax_i(w_a . tanh(W1 v_i + W2 q))
//   v'_j    = W5 [v_j, r_ji]            (per receiver/neighbor pair)
//   q'_i    = W6 [v_i, q]
//   beta_ji = softmax_{j in N_i}(w_b . tanh(W3 v'_j + W4 q'_i))
//   m_i     = sum_j beta_ji v'_j        (zero when N_i is empty)
//   v^_i    = ReLU(W7 [m_i, alpha_i v_i])

#include <cstdint>
#include <string>

#include "gruc/autodiff.hpp"
#include "gruc/graphs.hpp"
#include "gruc/params.hpp"

namespace gruc {

struct SelectionConfig {
  std::string prefix;          // e.g. "sel.visual"
  std::size_t node_dim = 0;
  std::size_t edge_dim = 0;
  std::size_t question_dim = 512;
  std::size_t hidden_dim = 512;     // width of v', q', m and v^
  std::size_t attention_dim = 512;  // width inside the tanh scorers
};

struct SelectionOutput {
  ad::Var v_hat;  // n x hidden_dim
  ad::Var alpha;  // n x 1
  ad::Var beta;   // pairs x 1 (aligned with the neighborhood); invalid when no pairs
  bool has_beta = false;
};

class IntraSelection {
 public:
  explicit IntraSelection(SelectionConfig config);

  const SelectionConfig& config() const { return config_; }
  void add_params(ParameterSet& params, std::uint64_t seed) const;

  /// n x 1 node attention. DomainError on an empty graph.
  ad::Var node_attention(const ParameterSet& params, ad::Var nodes, ad::Var q) const;

  /// `nb` must come from `graph` with PairOrientation::kNeighborToReceiver.
  SelectionOutput run(ad::Tape& tape, const ParameterSet& params, const ModalGraph& graph,
                      const Neighborhood& nb, ad::Var q) const;

 private:
  std::string name(const char* suffix) const { return config_.prefix + "." + suffix; }
  SelectionConfig config_;
};

}  // namespace gruc
