// SPDX-License-Identifier: Apache-2.0
#pragma once
// End-to-end model: retrieval -> three modality graphs -> intra-modal
// selection -> two reasoning streams per concept -> gated fusion -> global
// assessment -> per-entity probabilities.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gruc/assessment.hpp"
#include "gruc/autodiff.hpp"
#include "gruc/embeddings.hpp"
#include "gruc/graphs.hpp"
#include "gruc/params.hpp"
#include "gruc/reasoning.hpp"
#include "gruc/retrieval.hpp"
#include "gruc/selection.hpp"

namespace gruc {

/// All true is the full model; each false removes one component.
struct AblationConfig {
  bool use_semantic_graph = true;
  bool use_visual_graph = true;
  bool control_neighbor_agg = true;  // cF_i in the control initialization
  bool update_neighbor_agg = true;   // cnei_j in the memory update
  bool use_gruc = true;              // false: mean-pooled concatenation instead
  bool use_intra_selection = true;   // false: v^ = v
  bool use_global_assess = true;     // false: z = fused vector
  friend bool operator==(const AblationConfig&, const AblationConfig&) = default;
};

struct ModelConfig {
  std::size_t word_dim = 300;
  std::size_t visual_dim = 2048;
  std::size_t hidden_dim = 512;
  std::size_t attention_dim = 512;
  std::size_t classifier_hidden = 512;
  std::size_t relation_hidden = 512;
  std::size_t max_question_len = 20;
  bool question_state_at_length = false;
  std::size_t steps = 3;  // T
  std::size_t gnn_layers = 1;
  double dropout = 0.5;
  std::size_t max_objects = 36;
  std::size_t captions = 12;  // D
  std::size_t retain_top = 100;
  std::size_t relation_top_k = 3;
  bool relation_filter = true;
  ScoreMode score_mode = ScoreMode::kPairwiseMean;
  NeighborMode neighbor_mode = NeighborMode::kBoth;
  bool fuse_read_vector = false;  // fuse c(T) instead of h(T+1)
  double pos_weight = 0.7;        // a
  double neg_weight = 0.3;        // b
  double relation_loss_weight = 1.0;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Per-instance work that does not depend on parameters.
struct PreparedInstance {
  std::string id;
  std::vector<std::string> question;
  std::string answer;
  std::optional<std::string> relation_label;
  ModalGraph visual;
  Neighborhood visual_select;  // neighbor -> receiver pair features
  Neighborhood visual_memory;  // receiver -> neighbor pair features
  ModalGraph semantic;
  Neighborhood semantic_select;
  Neighborhood semantic_memory;
  std::vector<ScoredFact> top_facts;  // after retain_top, before relation filtering
};

struct ForwardOptions {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // dropout; required when training
  bool want_trace = false;
};

struct ForwardTrace {
  Tensor visual_alpha, semantic_alpha, fact_alpha;
  Tensor visual_beta, semantic_beta, fact_beta;
  StreamTrace visual_stream, semantic_stream;
  Tensor gate;
  std::array<std::size_t, 3> gate_segments{};
};

struct ForwardResult {
  ad::Var probs;  // n_entities x 1
  std::vector<std::string> entities;
  std::vector<ScoredFact> kept_facts;
  std::vector<std::string> relations_used;  // empty when no relation filter ran
  long answer_node = -1;                    // -1 when the answer is not a candidate
  std::optional<ad::Var> answer_loss;
  std::optional<ad::Var> relation_loss;
  std::optional<ad::Var> loss;              // answer loss (+ weighted relation loss)
  ForwardTrace trace;
};

class GrucModel {
 public:
  GrucModel(ModelConfig config, AblationConfig ablation, RelationVocab relations);

  const ModelConfig& config() const { return config_; }
  const AblationConfig& ablation() const { return ablation_; }
  const RelationVocab& relations() const { return head_.vocab(); }
  bool uses_relation_filter() const { return config_.relation_filter && !head_.vocab().empty(); }

  void init_params(ParameterSet& params, std::uint64_t seed) const;

  PreparedInstance prepare(const InstanceBundle& bundle, const EmbeddingTable& table) const;

  /// Throws NoCandidates when relation filtering leaves no facts. During
  /// training a known gold relation is forced into the filter set.
  ForwardResult forward(ad::Tape& tape, const ParameterSet& params,
                        const PreparedInstance& instance, const EmbeddingTable& table,
                        const ForwardOptions& options = {}) const;

  /// Relation names used to filter facts for this question.
  std::vector<std::string> filter_relations(std::span<const double> logits,
                                            const std::optional<std::string>& gold,
                                            bool training) const;

  /// Eval-mode relation filter set for a question; empty when the filter is off.
  std::vector<std::string> predict_relations(const ParameterSet& params,
                                             const PreparedInstance& instance,
                                             const EmbeddingTable& table) const;

 private:
  std::size_t visual_memory_dim() const;
  std::size_t semantic_memory_dim() const;
  std::size_t concept_dim() const;

  ModelConfig config_;
  AblationConfig ablation_;
  QuestionEncoder encoder_;
  RelationHead head_;
  IntraSelection sel_visual_, sel_semantic_, sel_fact_;
  GrucStream stream_visual_, stream_semantic_;
  FusionConfig fusion_;
  AssessConfig assess_;
  ClassifierConfig classifier_;
};

}  // namespace gruc
