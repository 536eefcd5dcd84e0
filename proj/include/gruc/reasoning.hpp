// SPDX-License-Identifier: Apache-2.0
#pragma once
// Recurrent read-update-control reasoning over one knowledge stream.
//
// Every concept (fact-graph node) i owns a private copy of the stream's
// memory, because the memory update injects the concept's control state.
// Concepts are batched: memory row i * entries + j holds m_j for concept i.
//
//   h(1)     = W8 [q, vF_i, cF_i]
//   a_j      = tanh(W9 h(t) + W10 m_j(t))
//   gamma    = softmax_j(w_c . a_j)
//   c(t)     = sum_j gamma_j m_j(t)
//   h(t+1)   = GRU(h(t), c(t))
//   cnei_j   = sum_{k in N_j} W12 [m_k(t), r_jk]
//   m_j(t+1) = W11 [m_j(t), cnei_j, h(t)]

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gruc/autodiff.hpp"
#include "gruc/graphs.hpp"
#include "gruc/layers.hpp"
#include "gruc/params.hpp"

namespace gruc {

struct GrucStreamConfig {
  std::string prefix;  // e.g. "gruc.visual"
  std::size_t memory_dim = 512;
  std::size_t edge_dim = 0;
  std::size_t hidden_dim = 512;
  std::size_t question_dim = 512;
  std::size_t concept_dim = 512;
  std::size_t attention_dim = 512;
  std::size_t steps = 3;
  bool update_neighbor_agg = true;
  /// Emit c(T) instead of h(T+1).
  bool output_read_vector = false;
};

/// Per-step bookkeeping for inspection and tests.
struct StreamTrace {
  std::vector<Tensor> gamma;  // per step: (concepts * entries) x 1
  std::size_t reads = 0;
  std::size_t control_updates = 0;
  std::size_t memory_updates = 0;
};

/// Memory source for one stream: node vectors and the graph they came from.
struct StreamMemory {
  ad::Var entries;           // n x memory_dim
  const Neighborhood* nb;    // PairOrientation::kReceiverToNeighbor
};

class GrucStream {
 public:
  explicit GrucStream(GrucStreamConfig config);

  const GrucStreamConfig& config() const { return config_; }
  std::size_t output_dim() const {
    return config_.output_read_vector ? config_.memory_dim : config_.hidden_dim;
  }
  void add_params(ParameterSet& params, std::uint64_t seed) const;

  /// h(1) for every concept: n_concepts x hidden_dim.
  ad::Var init_control(const ParameterSet& params, ad::Var q, ad::Var concepts,
                       ad::Var concept_context) const;

  /// Runs T steps for every concept. Without memory the stream is disabled:
  /// every read returns the zero vector.
  ad::Var run(const ParameterSet& params, ad::Var q, ad::Var concepts, ad::Var concept_context,
              const std::optional<StreamMemory>& memory, StreamTrace* trace = nullptr) const;

  /// One read for a batch: h (B x H), memory rows grouped by `owner`
  /// (row r belongs to batch row owner[r]). Returns c (B x memory_dim) and
  /// the attention column.
  std::pair<ad::Var, ad::Var> read(const ParameterSet& params, ad::Var h, ad::Var memory,
                                   const ad::Index& owner) const;

  /// One memory update. `pairs_*` index memory rows; `pair_edge` indexes rows
  /// of `edge_features`.
  ad::Var update_memory(const ParameterSet& params, ad::Var memory, ad::Var h,
                        const ad::Index& owner, const ad::Index& pair_receiver,
                        const ad::Index& pair_neighbor, const ad::Index& pair_edge,
                        ad::Var edge_features) const;

 private:
  std::string name(const char* suffix) const { return config_.prefix + "." + suffix; }
  GrucStreamConfig config_;
  GruCell cell_;
};

/// cF_i = sum over the fact-graph neighbors of v^F_j (zero for isolated
/// nodes). `nb` is any neighborhood of the fact graph.
ad::Var neighbor_sum(ad::Var nodes, const Neighborhood& nb);

}  // namespace gruc
