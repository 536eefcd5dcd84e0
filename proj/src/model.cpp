// SPDX-License-Identifier: Apache-2.0
#include "gruc/model.hpp"

#include <algorithm>

#include "gruc/errors.hpp"

namespace gruc {

namespace {

constexpr std::size_t kSpatialDim = 5;

SelectionConfig selection_config(const std::string& modality, std::size_t node_dim,
                                 std::size_t edge_dim, const ModelConfig& c) {
  return {"sel." + modality, node_dim, edge_dim, c.hidden_dim, c.hidden_dim, c.attention_dim};
}

}  // namespace

std::size_t GrucModel::visual_memory_dim() const {
  return ablation_.use_intra_selection ? config_.hidden_dim : config_.visual_dim;
}
std::size_t GrucModel::semantic_memory_dim() const {
  return ablation_.use_intra_selection ? config_.hidden_dim : config_.word_dim;
}
std::size_t GrucModel::concept_dim() const {
  return ablation_.use_intra_selection ? config_.hidden_dim : config_.word_dim;
}

GrucModel::GrucModel(ModelConfig config, AblationConfig ablation, RelationVocab relations)
    : config_(config),
      ablation_(ablation),
      encoder_(QuestionEncoderConfig{config.word_dim, config.hidden_dim, config.max_question_len,
                                     config.question_state_at_length}),
      head_(config.hidden_dim, config.relation_hidden, std::move(relations)),
      sel_visual_(selection_config("visual", config.visual_dim, kSpatialDim, config)),
      sel_semantic_(selection_config("semantic", config.word_dim, config.word_dim, config)),
      sel_fact_(selection_config("fact", config.word_dim, config.word_dim, config)),
      stream_visual_(GrucStreamConfig{"gruc.visual", visual_memory_dim(), kSpatialDim,
                                      config.hidden_dim, config.hidden_dim, concept_dim(),
                                      config.attention_dim, config.steps,
                                      ablation.update_neighbor_agg, config.fuse_read_vector}),
      stream_semantic_(GrucStreamConfig{"gruc.semantic", semantic_memory_dim(), config.word_dim,
                                        config.hidden_dim, config.hidden_dim, concept_dim(),
                                        config.attention_dim, config.steps,
                                        ablation.update_neighbor_agg, config.fuse_read_vector}),
      assess_{"gnn", config.hidden_dim, config.gnn_layers},
      classifier_{"cls", config.hidden_dim, config.hidden_dim, config.classifier_hidden,
                  config.dropout} {
  if (config_.steps < 1) throw DomainError("model: T must be >= 1");
  if (config_.retain_top < 1 || config_.relation_top_k < 1) {
    throw DomainError("model: retain_top and relation_top_k must be positive");
  }
  if (ablation_.use_gruc) {
    fusion_.segments = {stream_visual_.output_dim(), stream_semantic_.output_dim(), concept_dim()};
  } else {
    fusion_.segments = {visual_memory_dim(), semantic_memory_dim(), concept_dim()};
  }
  fusion_.output_dim = config_.hidden_dim;
}

void GrucModel::init_params(ParameterSet& params, std::uint64_t seed) const {
  encoder_.add_params(params, seed);
  if (uses_relation_filter()) head_.add_params(params, seed);
  if (ablation_.use_intra_selection) {
    if (ablation_.use_visual_graph) sel_visual_.add_params(params, seed);
    if (ablation_.use_semantic_graph) sel_semantic_.add_params(params, seed);
    sel_fact_.add_params(params, seed);
  }
  if (ablation_.use_gruc) {
    stream_visual_.add_params(params, seed);
    stream_semantic_.add_params(params, seed);
  }
  add_fusion_params(params, fusion_, seed);
  if (ablation_.use_global_assess) add_assess_params(params, assess_, seed);
  add_classifier_params(params, classifier_, seed);
}

PreparedInstance GrucModel::prepare(const InstanceBundle& bundle,
                                    const EmbeddingTable& table) const {
  if (table.dim() != config_.word_dim) {
    throw DimensionError("embedding table dimension " + std::to_string(table.dim()) +
                         " vs model word_dim " + std::to_string(config_.word_dim));
  }
  PreparedInstance p;
  p.id = bundle.id;
  p.question = bundle.question;
  p.answer = normalize_entity(bundle.answer);
  p.relation_label = bundle.relation_label;
  if (ablation_.use_visual_graph && !bundle.detections.empty()) {
    p.visual = build_visual_graph(bundle.detections, config_.max_objects);
    if (p.visual.node_dim() != config_.visual_dim) {
      throw DimensionError("instance '" + bundle.id + "': visual feature length " +
                           std::to_string(p.visual.node_dim()) + ", model expects " +
                           std::to_string(config_.visual_dim));
    }
    p.visual_select = neighborhood(p.visual, config_.neighbor_mode,
                                   PairOrientation::kNeighborToReceiver);
    p.visual_memory = neighborhood(p.visual, config_.neighbor_mode,
                                   PairOrientation::kReceiverToNeighbor);
  }
  if (ablation_.use_semantic_graph) {
    p.semantic = build_semantic_graph(bundle.semantic_tuples, table, config_.captions);
    if (!p.semantic.empty()) {
      p.semantic_select = neighborhood(p.semantic, config_.neighbor_mode,
                                       PairOrientation::kNeighborToReceiver);
      p.semantic_memory = neighborhood(p.semantic, config_.neighbor_mode,
                                       PairOrientation::kReceiverToNeighbor);
    }
  }
  const std::vector<std::string> context = context_words(bundle.question, bundle.detections);
  p.top_facts = retain_top(score_facts(bundle.facts, context, table, config_.score_mode),
                           config_.retain_top);
  return p;
}

std::vector<std::string> GrucModel::filter_relations(std::span<const double> logits,
                                                     const std::optional<std::string>& gold,
                                                     bool training) const {
  std::vector<std::string> rels = top_relations(logits, head_.vocab(), config_.relation_top_k);
  if (training && gold) {
    const std::string g = normalize_entity(*gold);
    if (head_.vocab().index_of(g) >= 0 && std::find(rels.begin(), rels.end(), g) == rels.end()) {
      rels.back() = g;
    }
  }
  return rels;
}

std::vector<std::string> GrucModel::predict_relations(const ParameterSet& params,
                                                      const PreparedInstance& instance,
                                                      const EmbeddingTable& table) const {
  if (!uses_relation_filter()) return {};
  ad::Tape tape;
  const ad::Var q = encoder_.encode(tape, instance.question, table, params).q;
  return filter_relations(head_.logits(params, q).value().values(), std::nullopt, false);
}

ForwardResult GrucModel::forward(ad::Tape& tape, const ParameterSet& params,
                                 const PreparedInstance& inst, const EmbeddingTable& table,
                                 const ForwardOptions& options) const {
  if (options.training && options.rng == nullptr) {
    throw DomainError("forward: training mode needs a dropout rng");
  }
  ForwardResult out;
  ad::Var q = encoder_.encode(tape, inst.question, table, params).q;

  // Retrieval stage 2: relation filter.
  std::optional<ad::Var> rel_logits;
  if (uses_relation_filter()) {
    rel_logits = head_.logits(params, q);
    out.relations_used =
        filter_relations(rel_logits->value().values(), inst.relation_label, options.training);
    out.kept_facts = filter_facts(inst.top_facts, out.relations_used);
    if (inst.relation_label) {
      const long target = head_.vocab().index_of(*inst.relation_label);
      if (target >= 0) {
        out.relation_loss = ad::softmax_cross_entropy(*rel_logits, static_cast<std::size_t>(target));
      }
    }
  } else {
    out.kept_facts = inst.top_facts;
  }
  if (out.kept_facts.empty()) throw NoCandidates("instance '" + inst.id + "'");

  std::vector<FactTriplet> facts;
  facts.reserve(out.kept_facts.size());
  for (const auto& f : out.kept_facts) facts.push_back(f.fact);
  const ModalGraph fact_graph = build_fact_graph(facts, table);
  const Neighborhood fact_select =
      neighborhood(fact_graph, config_.neighbor_mode, PairOrientation::kNeighborToReceiver);
  out.entities = fact_graph.node_labels;
  if (auto it = fact_graph.node_index.find(inst.answer); it != fact_graph.node_index.end()) {
    out.answer_node = it->second;
  }

  // Intra-modal selection.
  const bool have_visual = ablation_.use_visual_graph && !inst.visual.empty();
  const bool have_semantic = ablation_.use_semantic_graph && !inst.semantic.empty();
  std::optional<ad::Var> v_visual, v_semantic;
  ad::Var v_fact;
  if (ablation_.use_intra_selection) {
    auto keep = [&](const SelectionOutput& s, Tensor& alpha, Tensor& beta) {
      if (!options.want_trace) return;
      alpha = s.alpha.value();
      if (s.has_beta) beta = s.beta.value();
    };
    if (have_visual) {
      SelectionOutput s = sel_visual_.run(tape, params, inst.visual, inst.visual_select, q);
      keep(s, out.trace.visual_alpha, out.trace.visual_beta);
      v_visual = s.v_hat;
    }
    if (have_semantic) {
      SelectionOutput s = sel_semantic_.run(tape, params, inst.semantic, inst.semantic_select, q);
      keep(s, out.trace.semantic_alpha, out.trace.semantic_beta);
      v_semantic = s.v_hat;
    }
    SelectionOutput s = sel_fact_.run(tape, params, fact_graph, fact_select, q);
    keep(s, out.trace.fact_alpha, out.trace.fact_beta);
    v_fact = s.v_hat;
  } else {
    if (have_visual) v_visual = tape.constant(inst.visual.node_features);
    if (have_semantic) v_semantic = tape.constant(inst.semantic.node_features);
    v_fact = tape.constant(fact_graph.node_features);
  }
  const std::size_t n = fact_graph.num_nodes();

  // Cross-modal reasoning per concept.
  ad::Var h_visual, h_semantic;
  if (ablation_.use_gruc) {
    ad::Var context = ablation_.control_neighbor_agg
                          ? neighbor_sum(v_fact, fact_select)
                          : tape.constant(Tensor(n, concept_dim()));
    std::optional<StreamMemory> mv, ms;
    if (v_visual) mv = StreamMemory{*v_visual, &inst.visual_memory};
    if (v_semantic) ms = StreamMemory{*v_semantic, &inst.semantic_memory};
    StreamTrace* tv = options.want_trace ? &out.trace.visual_stream : nullptr;
    StreamTrace* ts = options.want_trace ? &out.trace.semantic_stream : nullptr;
    h_visual = stream_visual_.run(params, q, v_fact, context, mv, tv);
    h_semantic = stream_semantic_.run(params, q, v_fact, context, ms, ts);
  } else {
    auto pooled = [&](const std::optional<ad::Var>& v, std::size_t dim) {
      if (!v) return tape.constant(Tensor(n, dim));
      return ad::broadcast_rows(ad::mean_rows(*v), n);
    };
    h_visual = pooled(v_visual, visual_memory_dim());
    h_semantic = pooled(v_semantic, semantic_memory_dim());
  }

  FusedConcepts fused = fuse_gate(params, fusion_, h_visual, h_semantic, v_fact);
  if (options.want_trace) {
    out.trace.gate = fused.gate.value();
    out.trace.gate_segments = fused.segments;
  }
  ad::Var z = ablation_.use_global_assess ? global_assess(params, assess_, fused.fused, fact_select)
                                          : fused.fused;
  std::mt19937_64 idle_rng;  // dropout is the identity outside training
  out.probs = classify(params, classifier_, z, q, options.training,
                       options.rng ? *options.rng : idle_rng);

  if (out.answer_node >= 0) {
    std::vector<double> labels(n, 0.0);
    labels[static_cast<std::size_t>(out.answer_node)] = 1.0;
    out.answer_loss = answer_loss(out.probs, labels, config_.pos_weight, config_.neg_weight);
    out.loss = *out.answer_loss;
    if (out.relation_loss && config_.relation_loss_weight > 0.0) {
      out.loss = ad::add(*out.loss, ad::affine(*out.relation_loss, config_.relation_loss_weight, 0.0));
    }
  }
  return out;
}

}  // namespace gruc
