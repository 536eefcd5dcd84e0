// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gruc/autodiff.hpp"
#include "gruc/embeddings.hpp"
#include "gruc/graphs.hpp"
#include "gruc/params.hpp"

namespace gruc {

struct ScoredFact {
  FactTriplet fact;
  double score = 0.0;
  std::size_t index = 0;  // position in the instance's candidate list
};

enum class ScoreMode {
  kPairwiseMean,    // mean over every (fact word, context word) pair
  kMaxPerFactWord,  // best context match per fact word, then mean
};

/// Words of e1, the relation name and e2, in that order (duplicates kept).
std::vector<std::string> fact_words(const FactTriplet& fact);

/// Distinct question words and detection-label words, sorted.
std::vector<std::string> context_words(std::span<const std::string> question,
                                       const std::vector<DetectionRecord>& detections);

/// Cosine similarity; 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);

/// Similarity of a fact to its context. Degenerate inputs score 0.
double score_fact(const FactTriplet& fact, std::span<const std::string> context,
                  const EmbeddingTable& table, ScoreMode mode = ScoreMode::kPairwiseMean);

std::vector<ScoredFact> score_facts(const std::vector<FactTriplet>& facts,
                                    std::span<const std::string> context,
                                    const EmbeddingTable& table,
                                    ScoreMode mode = ScoreMode::kPairwiseMean);

/// Highest-scoring n facts, descending; equal scores keep input order.
std::vector<ScoredFact> retain_top(std::vector<ScoredFact> scored, std::size_t n = 100);

/// Facts whose normalized relation is in `relations`, input order preserved.
/// An empty result is returned as-is; callers raise NoCandidates.
std::vector<ScoredFact> filter_facts(const std::vector<ScoredFact>& facts,
                                     std::span<const std::string> relations);

/// Relation types known to the classifier, normalized and sorted.
class RelationVocab {
 public:
  RelationVocab() = default;
  explicit RelationVocab(std::vector<std::string> names);
  /// Distinct fact relations and relation labels of a corpus.
  static RelationVocab from_corpus(const std::vector<InstanceBundle>& corpus);

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }
  /// Index of a relation (normalized first), or -1.
  long index_of(std::string_view relation) const;

 private:
  std::vector<std::string> names_;
};

/// MLP q -> hidden (ReLU) -> |vocab| logits. Shares q with the main model.
class RelationHead {
 public:
  RelationHead() = default;
  RelationHead(std::size_t input_dim, std::size_t hidden_dim, RelationVocab vocab,
               std::string prefix = "relation.head");

  const RelationVocab& vocab() const { return vocab_; }
  void add_params(ParameterSet& params, std::uint64_t seed) const;
  /// True when the head's weights exist in `params`.
  bool ready(const ParameterSet& params) const;
  /// 1 x |vocab| logits. DataError when the head has no weights.
  ad::Var logits(const ParameterSet& params, ad::Var q) const;

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  RelationVocab vocab_;
  std::string prefix_;
};

/// The k most probable relation names, descending; equal probabilities keep
/// vocabulary order.
std::vector<std::string> top_relations(std::span<const double> logits, const RelationVocab& vocab,
                                       std::size_t k = 3);

}  // namespace gruc
