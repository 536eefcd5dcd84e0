// SPDX-License-Identifier: Apache-2.0
#pragma once
// Synthetic instances with a planted ground truth. A question names one
// relation and one topic entity; several candidate entities are linked to the
// topic by that relation, and only the answer is also present in the graphs
// picked by the difficulty.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gruc/embeddings.hpp"
#include "gruc/graphs.hpp"
#include "gruc/tensor.hpp"

namespace gruc {

enum class Difficulty { kVisual, kSemantic, kBoth, kFactOnly };

std::string_view difficulty_name(Difficulty d);
/// "visual" | "semantic" | "both" | "fact-only"; DomainError otherwise.
Difficulty parse_difficulty(std::string_view name);

struct SyntheticConfig {
  std::size_t word_dim = 32;
  std::size_t visual_dim = 32;
  std::size_t objects = 60;
  std::size_t topics = 30;
  std::size_t relations = 6;   // at most 8
  std::size_t distractors = 3; // candidates besides the answer
  std::size_t detections = 4;
  std::size_t tuples = 4;
  std::size_t noise_facts = 4;
  std::size_t caption_ranks = 12;  // planted tuples get a rank in [0, caption_ranks)
  double embed_scale = 1.0;  // per-coordinate std of word vectors
  double visual_noise = 0.1;
  std::uint64_t world_seed = 0;
};

/// Vocabulary, embeddings and the word-to-visual projection shared by every
/// instance generated from it.
class SyntheticWorld {
 public:
  explicit SyntheticWorld(SyntheticConfig config = {});

  const SyntheticConfig& config() const { return config_; }
  const EmbeddingTable& table() const { return table_; }
  const std::vector<std::string>& objects() const { return objects_; }
  const std::vector<std::string>& topics() const { return topics_; }
  const std::vector<std::string>& relations() const { return relations_; }

  /// Deterministic in (world, seed, difficulty).
  InstanceBundle instance(std::uint64_t seed, Difficulty difficulty,
                          const std::string& id = "") const;

  /// n instances; instance i uses a seed derived from (seed, i).
  std::vector<InstanceBundle> dataset(std::size_t n, std::uint64_t seed,
                                      Difficulty difficulty) const;

  /// Visual feature for an object label: projected embedding plus noise.
  std::vector<double> visual_feature(const std::string& object, std::uint64_t noise_seed) const;

 private:
  SyntheticConfig config_;
  EmbeddingTable table_;
  Tensor projection_;  // visual_dim x word_dim
  std::vector<std::string> objects_, topics_, relations_;
};

/// Recovers the answer from the planted structure using detection labels,
/// tuple entities and fact links, never the answer field. DataError when the
/// plant is missing or ambiguous.
std::string oracle_answer(const InstanceBundle& bundle, Difficulty difficulty);

struct SyntheticCorpus {
  std::vector<InstanceBundle> train;
  std::vector<std::vector<InstanceBundle>> splits;
};

/// Train set plus `n_splits` seeded test splits, all with one difficulty.
SyntheticCorpus make_corpus(const SyntheticWorld& world, std::size_t n_train,
                            std::size_t n_splits, std::size_t n_test, std::uint64_t seed,
                            Difficulty difficulty);

}  // namespace gruc
