// SPDX-License-Identifier: Apache-2.0
#include "gruc/assessment.hpp"

#include <algorithm>
#include <numeric>

#include "gruc/errors.hpp"
#include "gruc/layers.hpp"

namespace gruc {

void add_fusion_params(ParameterSet& params, const FusionConfig& config, std::uint64_t seed) {
  add_dense(params, config.prefix + ".gate", config.input_dim(), config.input_dim(), true, seed);
  add_dense(params, config.prefix + ".out", config.input_dim(), config.output_dim, true, seed);
}

FusedConcepts fuse_gate(const ParameterSet& params, const FusionConfig& config, ad::Var h_visual,
                        ad::Var h_semantic, ad::Var concepts) {
  const std::array<std::size_t, 3> widths{h_visual.cols(), h_semantic.cols(), concepts.cols()};
  if (widths != config.segments) {
    throw DimensionError("fuse_gate: input widths do not match the configured segments");
  }
  ad::Var x = ad::concat_cols({h_visual, h_semantic, concepts});
  FusedConcepts out;
  out.gate = ad::sigmoid(dense(params, config.prefix + ".gate", x));
  out.fused = dense(params, config.prefix + ".out", ad::mul(out.gate, x));
  out.segments = config.segments;
  return out;
}

GateRatios gate_ratios(std::span<const Tensor> gates, const std::array<std::size_t, 3>& segments) {
  if (gates.empty()) throw DomainError("gate_ratios: no concepts");
  const std::size_t width = segments[0] + segments[1] + segments[2];
  std::array<double, 3> sums{0.0, 0.0, 0.0};
  for (const Tensor& g : gates) {
    if (g.cols() != width) throw DimensionError("gate_ratios: gate width mismatch");
    for (std::size_t r = 0; r < g.rows(); ++r) {
      std::size_t col = 0;
      for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t k = 0; k < segments[s]; ++k, ++col) sums[s] += g(r, col);
      }
    }
  }
  const double total = sums[0] + sums[1] + sums[2];
  if (!(total > 0.0)) throw DomainError("gate_ratios: zero total gate mass");
  return {sums[0] / total, sums[2] / total, sums[1] / total};
}

void add_assess_params(ParameterSet& params, const AssessConfig& config, std::uint64_t seed) {
  for (std::size_t l = 0; l < config.layers; ++l) {
    add_dense(params, config.prefix + ".l" + std::to_string(l), 2 * config.dim, config.dim, true,
              seed);
  }
}

ad::Var neighbor_mean(ad::Var x, const Neighborhood& nb) {
  ad::Tape& tape = *x.tape;
  const std::size_t n = x.rows();
  if (nb.size() == 0) return tape.constant(Tensor(n, x.cols()));
  std::vector<double> degree(n, 0.0);
  for (std::uint32_t r : nb.receiver) degree[r] += 1.0;
  Tensor inv(n, 1);
  for (std::size_t i = 0; i < n; ++i) inv(i, 0) = degree[i] > 0.0 ? 1.0 / degree[i] : 0.0;
  ad::Var sum = ad::scatter_add_rows(ad::gather_rows(x, nb.neighbor), nb.receiver, n);
  return ad::mul_rows(sum, tape.constant(std::move(inv)));
}

ad::Var global_assess(const ParameterSet& params, const AssessConfig& config, ad::Var nodes,
                      const Neighborhood& nb) {
  if (nodes.rows() == 0) throw DomainError("global_assess: empty fact graph");
  ad::Var z = nodes;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const ad::Var parts[] = {z, neighbor_mean(z, nb)};
    z = ad::relu(dense_parts(params, config.prefix + ".l" + std::to_string(l), parts));
  }
  return z;
}

void add_classifier_params(ParameterSet& params, const ClassifierConfig& config,
                           std::uint64_t seed) {
  add_dense(params, config.prefix + ".hidden", config.concept_dim + config.question_dim,
            config.hidden_dim, true, seed);
  add_dense(params, config.prefix + ".out", config.hidden_dim, 1, true, seed);
}

ad::Var classify(const ParameterSet& params, const ClassifierConfig& config, ad::Var concepts,
                 ad::Var q, bool training, std::mt19937_64& rng) {
  const ad::Var parts[] = {concepts, ad::broadcast_rows(q, concepts.rows())};
  ad::Var hidden = ad::relu(dense_parts(params, config.prefix + ".hidden", parts));
  hidden = ad::dropout(hidden, config.dropout, training, rng);
  return ad::sigmoid(dense(params, config.prefix + ".out", hidden));
}

AnswerPrediction rank_answers(std::span<const double> probs,
                              const std::vector<std::string>& entities) {
  if (probs.empty()) throw NoCandidates("no concepts to rank");
  if (entities.size() != probs.size()) {
    throw DimensionError("rank_answers: " + std::to_string(probs.size()) + " scores for " +
                         std::to_string(entities.size()) + " entities");
  }
  AnswerPrediction out;
  out.probs.assign(probs.begin(), probs.end());
  out.ranking.resize(probs.size());
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::sort(out.ranking.begin(), out.ranking.end(), [&](std::size_t a, std::size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    if (entities[a] != entities[b]) return entities[a] < entities[b];
    return a < b;
  });
  out.answer = out.ranking.front();
  return out;
}

ad::Var answer_loss(ad::Var probs, std::span<const double> labels, double pos_weight,
                    double neg_weight, double eps) {
  const auto positives = std::count(labels.begin(), labels.end(), 1.0);
  if (positives != 1) {
    throw DataError("weighted_bce: expected exactly one positive label, got " +
                    std::to_string(positives));
  }
  return ad::weighted_bce(probs, labels, pos_weight, neg_weight, eps);
}

}  // namespace gruc
