// SPDX-License-Identifier: Apache-2.0
#include "gruc/reasoning.hpp"

#include "gruc/errors.hpp"

namespace gruc {

GrucStream::GrucStream(GrucStreamConfig config)
    : config_(std::move(config)),
      cell_{config_.prefix + ".gru", config_.memory_dim, config_.hidden_dim} {
  if (config_.steps < 1) throw DomainError("reasoning '" + config_.prefix + "': T must be >= 1");
}

void GrucStream::add_params(ParameterSet& params, std::uint64_t seed) const {
  const auto& c = config_;
  add_dense(params, name("W8"), c.question_dim + 2 * c.concept_dim, c.hidden_dim, true, seed);
  add_dense(params, name("W9"), c.hidden_dim, c.attention_dim, false, seed);
  add_dense(params, name("W10"), c.memory_dim, c.attention_dim, true, seed);
  add_dense(params, name("wc"), c.attention_dim, 1, false, seed);
  add_dense(params, name("W11"), 2 * c.memory_dim + c.hidden_dim, c.memory_dim, true, seed);
  add_dense(params, name("W12"), c.memory_dim + c.edge_dim, c.memory_dim, true, seed);
  cell_.add_params(params, seed);
}

ad::Var neighbor_sum(ad::Var nodes, const Neighborhood& nb) {
  if (nb.size() == 0) return nodes.tape->constant(Tensor(nodes.rows(), nodes.cols()));
  return ad::scatter_add_rows(ad::gather_rows(nodes, nb.neighbor), nb.receiver, nodes.rows());
}

ad::Var GrucStream::init_control(const ParameterSet& params, ad::Var q, ad::Var concepts,
                                 ad::Var concept_context) const {
  const ad::Var parts[] = {ad::broadcast_rows(q, concepts.rows()), concepts, concept_context};
  return dense_parts(params, name("W8"), parts);
}

std::pair<ad::Var, ad::Var> GrucStream::read(const ParameterSet& params, ad::Var h,
                                             ad::Var memory, const ad::Index& owner) const {
  // W9 h is evaluated once per batch row, then spread over that row's entries.
  ad::Var a = ad::tanh(ad::add(ad::gather_rows(dense(params, name("W9"), h), owner),
                               dense(params, name("W10"), memory)));
  ad::Var gamma = ad::softmax_segments(dense(params, name("wc"), a), owner, h.rows());
  ad::Var c = ad::scatter_add_rows(ad::mul_rows(memory, gamma), owner, h.rows());
  return {c, gamma};
}

ad::Var GrucStream::update_memory(const ParameterSet& params, ad::Var memory, ad::Var h,
                                  const ad::Index& owner, const ad::Index& pair_receiver,
                                  const ad::Index& pair_neighbor, const ad::Index& pair_edge,
                                  ad::Var edge_features) const {
  ad::Tape& tape = *memory.tape;
  const std::size_t d = config_.memory_dim;
  const std::size_t rows = memory.rows();
  ad::Var c_nei = tape.constant(Tensor(rows, d));
  if (config_.update_neighbor_agg && !pair_receiver.empty()) {
    ad::Var w12_mem = weight_block(params, tape, name("W12"), 0, d);
    ad::Var w12_edge = weight_block(params, tape, name("W12"), d, config_.edge_dim);
    ad::Var msg = ad::add(ad::gather_rows(ad::matmul_nt(memory, w12_mem), pair_neighbor),
                          ad::gather_rows(ad::matmul_nt(edge_features, w12_edge), pair_edge));
    // The bias belongs to every summed term.
    msg = add_bias(params, name("W12"), msg);
    c_nei = ad::scatter_add_rows(msg, pair_receiver, rows);
  }
  ad::Var w11_mem = weight_block(params, tape, name("W11"), 0, d);
  ad::Var w11_nei = weight_block(params, tape, name("W11"), d, d);
  ad::Var w11_h = weight_block(params, tape, name("W11"), 2 * d, config_.hidden_dim);
  ad::Var next = ad::add(ad::add(ad::matmul_nt(memory, w11_mem), ad::matmul_nt(c_nei, w11_nei)),
                         ad::gather_rows(ad::matmul_nt(h, w11_h), owner));
  return add_bias(params, name("W11"), next);
}

ad::Var GrucStream::run(const ParameterSet& params, ad::Var q, ad::Var concepts,
                        ad::Var concept_context, const std::optional<StreamMemory>& memory,
                        StreamTrace* trace) const {
  ad::Tape& tape = *q.tape;
  const std::size_t n_concepts = concepts.rows();
  ad::Var h = init_control(params, q, concepts, concept_context);
  const bool enabled = memory && memory->entries.rows() > 0;

  if (!enabled) {
    ad::Var zero = tape.constant(Tensor(n_concepts, config_.memory_dim));
    for (std::size_t t = 0; t < config_.steps; ++t) {
      h = cell_.step(params, h, zero);
      if (trace) ++trace->control_updates;
    }
    return config_.output_read_vector ? zero : h;
  }

  if (memory->entries.cols() != config_.memory_dim) {
    throw DimensionError("reasoning '" + config_.prefix + "': memory width " +
                         std::to_string(memory->entries.cols()) + ", expected " +
                         std::to_string(config_.memory_dim));
  }
  const Neighborhood& nb = *memory->nb;
  const std::size_t n_entries = memory->entries.rows();
  if (nb.num_nodes != n_entries) {
    throw DimensionError("reasoning '" + config_.prefix + "': neighborhood/memory mismatch");
  }

  // Concept-major layout: row i * n_entries + j.
  ad::Index owner, entry;
  owner.reserve(n_concepts * n_entries);
  for (std::uint32_t i = 0; i < n_concepts; ++i) {
    for (std::uint32_t j = 0; j < n_entries; ++j) {
      owner.push_back(i);
      entry.push_back(j);
    }
  }
  ad::Index recv, nbr, edge;
  for (std::uint32_t i = 0; i < n_concepts; ++i) {
    const std::uint32_t base = i * static_cast<std::uint32_t>(n_entries);
    for (std::uint32_t p = 0; p < nb.size(); ++p) {
      recv.push_back(base + nb.receiver[p]);
      nbr.push_back(base + nb.neighbor[p]);
      edge.push_back(p);
    }
  }
  ad::Var edge_features = tape.constant(nb.size() > 0 ? nb.pair_features
                                                      : Tensor(0, config_.edge_dim));
  ad::Var m = ad::gather_rows(memory->entries, entry);
  ad::Var c = m;
  for (std::size_t t = 0; t < config_.steps; ++t) {
    auto [read_vec, gamma] = read(params, h, m, owner);
    c = read_vec;
    if (trace) {
      trace->gamma.push_back(gamma.value());
      ++trace->reads;
    }
    ad::Var h_next = cell_.step(params, h, c);
    if (trace) ++trace->control_updates;
    // The update after the final read feeds nothing downstream.
    if (t + 1 < config_.steps) {
      m = update_memory(params, m, h, owner, recv, nbr, edge, edge_features);
      if (trace) ++trace->memory_updates;
    }
    h = h_next;
  }
  return config_.output_read_vector ? c : h;
}

}  // namespace gruc
