// SPDX-License-Identifier: Apache-2.0
#include "gruc/selection.hpp"

#include "gruc/errors.hpp"
#include "gruc/layers.hpp"

namespace gruc {

IntraSelection::IntraSelection(SelectionConfig config) : config_(std::move(config)) {
  if (config_.node_dim == 0 || config_.hidden_dim == 0 || config_.attention_dim == 0 ||
      config_.question_dim == 0) {
    throw DomainError("selection '" + config_.prefix + "': dimensions must be positive");
  }
}

void IntraSelection::add_params(ParameterSet& params, std::uint64_t seed) const {
  const auto& c = config_;
  add_dense(params, name("W1"), c.node_dim, c.attention_dim, true, seed);
  add_dense(params, name("W2"), c.question_dim, c.attention_dim, false, seed);
  add_dense(params, name("wa"), c.attention_dim, 1, false, seed);
  add_dense(params, name("W5"), c.node_dim + c.edge_dim, c.hidden_dim, true, seed);
  add_dense(params, name("W6"), c.node_dim + c.question_dim, c.hidden_dim, true, seed);
  add_dense(params, name("W3"), c.hidden_dim, c.attention_dim, true, seed);
  add_dense(params, name("W4"), c.hidden_dim, c.attention_dim, false, seed);
  add_dense(params, name("wb"), c.attention_dim, 1, false, seed);
  add_dense(params, name("W7"), c.hidden_dim + c.node_dim, c.hidden_dim, true, seed);
}

ad::Var IntraSelection::node_attention(const ParameterSet& params, ad::Var nodes,
                                       ad::Var q) const {
  if (nodes.rows() == 0) throw DomainError("node_attention: empty graph '" + config_.prefix + "'");
  // W2 q is a 1 x A row broadcast over the nodes.
  ad::Var pre = ad::add(dense(params, name("W1"), nodes), dense(params, name("W2"), q));
  return ad::softmax(dense(params, name("wa"), ad::tanh(pre)));
}

SelectionOutput IntraSelection::run(ad::Tape& tape, const ParameterSet& params,
                                    const ModalGraph& graph, const Neighborhood& nb,
                                    ad::Var q) const {
  const auto& c = config_;
  if (graph.empty()) throw DomainError("select_update: empty graph '" + c.prefix + "'");
  if (graph.node_dim() != c.node_dim || (nb.size() > 0 && nb.pair_features.cols() != c.edge_dim)) {
    throw DimensionError("selection '" + c.prefix + "': graph has node dim " +
                         std::to_string(graph.node_dim()) + ", edge dim " +
                         std::to_string(graph.edge_dim()) + "; parameters expect " +
                         std::to_string(c.node_dim) + ", " + std::to_string(c.edge_dim));
  }
  if (nb.num_nodes != graph.num_nodes()) {
    throw DimensionError("selection '" + c.prefix + "': neighborhood built for another graph");
  }
  const std::size_t n = graph.num_nodes();
  ad::Var v = tape.constant(graph.node_features);

  SelectionOutput out;
  out.alpha = node_attention(params, v, q);

  ad::Var m = tape.constant(Tensor(n, c.hidden_dim));
  if (nb.size() > 0) {
    // v'_j = W5a v_j + W5b r_ji + b5, with W5a v computed once per node.
    ad::Var w5_node = weight_block(params, tape, name("W5"), 0, c.node_dim);
    ad::Var w5_edge = weight_block(params, tape, name("W5"), c.node_dim, c.edge_dim);
    ad::Var v_prime = ad::add(ad::gather_rows(ad::matmul_nt(v, w5_node), nb.neighbor),
                              ad::matmul_nt(tape.constant(nb.pair_features), w5_edge));
    v_prime = add_bias(params, name("W5"), v_prime);
    // q'_i per node, then spread to the pairs it receives.
    const ad::Var vq[] = {v, ad::broadcast_rows(q, n)};
    ad::Var q_prime = ad::gather_rows(dense_parts(params, name("W6"), vq), nb.receiver);
    ad::Var score = dense(params, name("wb"),
                          ad::tanh(ad::add(dense(params, name("W3"), v_prime),
                                           dense(params, name("W4"), q_prime))));
    out.beta = ad::softmax_segments(score, nb.receiver, n);
    out.has_beta = true;
    m = ad::scatter_add_rows(ad::mul_rows(v_prime, out.beta), nb.receiver, n);
  }
  const ad::Var parts[] = {m, ad::mul_rows(v, out.alpha)};
  out.v_hat = ad::relu(dense_parts(params, name("W7"), parts));
  return out;
}

}  // namespace gruc
