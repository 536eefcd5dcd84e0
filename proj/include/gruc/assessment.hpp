// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gruc/autodiff.hpp"
#include "gruc/graphs.hpp"
#include "gruc/params.hpp"

namespace gruc {

/// gate = sigmoid(Wg x + bg), fused = Wf (gate * x) + bf, x = [h_V, h_S, vF].
struct FusionConfig {
  std::string prefix = "fuse";
  std::array<std::size_t, 3> segments{512, 512, 512};  // widths of h_V, h_S, vF
  std::size_t output_dim = 512;
  std::size_t input_dim() const { return segments[0] + segments[1] + segments[2]; }
};

struct FusedConcepts {
  ad::Var fused;  // n x output_dim
  ad::Var gate;   // n x input_dim, entries in (0, 1)
  std::array<std::size_t, 3> segments{};
};

void add_fusion_params(ParameterSet& params, const FusionConfig& config, std::uint64_t seed);
FusedConcepts fuse_gate(const ParameterSet& params, const FusionConfig& config, ad::Var h_visual,
                        ad::Var h_semantic, ad::Var concepts);

struct GateRatios {
  double visual = 0.0;
  double fact = 0.0;
  double semantic = 0.0;
};

/// Totals of gate values per segment, normalized by the grand total. Every
/// gate matrix must share `segments`. DomainError for an empty list.
GateRatios gate_ratios(std::span<const Tensor> gates, const std::array<std::size_t, 3>& segments);

/// z = ReLU(W [v_i, mean_{j in N_i} v_j]) per layer; zero mean when N_i is empty.
struct AssessConfig {
  std::string prefix = "gnn";
  std::size_t dim = 512;
  std::size_t layers = 1;
};

void add_assess_params(ParameterSet& params, const AssessConfig& config, std::uint64_t seed);
ad::Var global_assess(const ParameterSet& params, const AssessConfig& config, ad::Var nodes,
                      const Neighborhood& nb);
/// mean_{j in N_i} x_j per node as an op; zero rows for isolated nodes.
ad::Var neighbor_mean(ad::Var x, const Neighborhood& nb);

/// yhat = sigmoid(out(dropout(ReLU(hidden([z_i, q]))))).
struct ClassifierConfig {
  std::string prefix = "cls";
  std::size_t concept_dim = 512;
  std::size_t question_dim = 512;
  std::size_t hidden_dim = 512;
  double dropout = 0.5;
};

void add_classifier_params(ParameterSet& params, const ClassifierConfig& config,
                           std::uint64_t seed);
/// n x 1 probabilities.
ad::Var classify(const ParameterSet& params, const ClassifierConfig& config, ad::Var concepts,
                 ad::Var q, bool training, std::mt19937_64& rng);

struct AnswerPrediction {
  std::vector<double> probs;        // per fact-graph node
  std::vector<std::size_t> ranking; // node indices, best first
  std::size_t answer = 0;
};

/// Descending probability; equal probabilities are ordered by entity string,
/// so the result does not depend on node numbering. NoCandidates when empty.
AnswerPrediction rank_answers(std::span<const double> probs,
                              const std::vector<std::string>& entities);

/// Per-instance loss with exactly one positive label; DataError otherwise.
ad::Var answer_loss(ad::Var probs, std::span<const double> labels, double pos_weight = 0.7,
                    double neg_weight = 0.3, double eps = 1e-7);

}  // namespace gruc
