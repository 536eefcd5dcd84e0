// SPDX-License-Identifier: Apache-2.0
#include "gruc/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gruc/errors.hpp"
#include "gruc/layers.hpp"

namespace gruc {

std::vector<std::string> fact_words(const FactTriplet& fact) {
  std::vector<std::string> out = tokenize(fact.e1);
  for (auto& w : relation_words(fact.rel)) out.push_back(std::move(w));
  for (auto& w : tokenize(fact.e2)) out.push_back(std::move(w));
  return out;
}

std::vector<std::string> context_words(std::span<const std::string> question,
                                       const std::vector<DetectionRecord>& detections) {
  std::set<std::string> words;
  for (const auto& q : question) {
    for (auto& w : tokenize(q)) words.insert(std::move(w));
  }
  for (const auto& d : detections) {
    for (const auto& l : d.label) {
      for (auto& w : tokenize(l)) words.insert(std::move(w));
    }
  }
  return {words.begin(), words.end()};
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

double score_fact(const FactTriplet& fact, std::span<const std::string> context,
                  const EmbeddingTable& table, ScoreMode mode) {
  const std::vector<std::string> words = fact_words(fact);
  if (words.empty() || context.empty()) return 0.0;
  double total = 0.0;
  for (const auto& w : words) {
    const auto u = table.lookup(w);
    if (mode == ScoreMode::kPairwiseMean) {
      for (const auto& c : context) total += cosine(u, table.lookup(c));
    } else {
      double best = -1.0;
      for (const auto& c : context) best = std::max(best, cosine(u, table.lookup(c)));
      total += best;
    }
  }
  const double pairs = mode == ScoreMode::kPairwiseMean
                           ? static_cast<double>(words.size() * context.size())
                           : static_cast<double>(words.size());
  return total / pairs;
}

std::vector<ScoredFact> score_facts(const std::vector<FactTriplet>& facts,
                                    std::span<const std::string> context,
                                    const EmbeddingTable& table, ScoreMode mode) {
  std::vector<ScoredFact> out;
  out.reserve(facts.size());
  for (std::size_t i = 0; i < facts.size(); ++i) {
    out.push_back({facts[i], score_fact(facts[i], context, table, mode), i});
  }
  return out;
}

std::vector<ScoredFact> retain_top(std::vector<ScoredFact> scored, std::size_t n) {
  if (n == 0) throw DomainError("retain_top: n must be positive");
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredFact& a, const ScoredFact& b) { return a.score > b.score; });
  if (scored.size() > n) scored.resize(n);
  return scored;
}

std::vector<ScoredFact> filter_facts(const std::vector<ScoredFact>& facts,
                                     std::span<const std::string> relations) {
  std::set<std::string> keep;
  for (const auto& r : relations) keep.insert(normalize_entity(r));
  std::vector<ScoredFact> out;
  for (const auto& f : facts) {
    if (keep.count(normalize_entity(f.fact.rel))) out.push_back(f);
  }
  return out;
}

// ---- relation classifier ----------------------------------------------------

RelationVocab::RelationVocab(std::vector<std::string> names) {
  std::set<std::string> s;
  for (const auto& n : names) s.insert(normalize_entity(n));
  names_.assign(s.begin(), s.end());
}

RelationVocab RelationVocab::from_corpus(const std::vector<InstanceBundle>& corpus) {
  std::vector<std::string> names;
  for (const auto& b : corpus) {
    for (const auto& f : b.facts) names.push_back(f.rel);
    if (b.relation_label) names.push_back(*b.relation_label);
  }
  return RelationVocab(std::move(names));
}

long RelationVocab::index_of(std::string_view relation) const {
  const std::string key = normalize_entity(relation);
  auto it = std::lower_bound(names_.begin(), names_.end(), key);
  if (it == names_.end() || *it != key) return -1;
  return static_cast<long>(it - names_.begin());
}

RelationHead::RelationHead(std::size_t input_dim, std::size_t hidden_dim, RelationVocab vocab,
                           std::string prefix)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      vocab_(std::move(vocab)),
      prefix_(std::move(prefix)) {}

void RelationHead::add_params(ParameterSet& params, std::uint64_t seed) const {
  if (vocab_.empty()) throw DataError("relation head: empty relation vocabulary");
  add_dense(params, prefix_ + ".hidden", input_dim_, hidden_dim_, true, seed);
  add_dense(params, prefix_ + ".out", hidden_dim_, vocab_.size(), true, seed);
}

bool RelationHead::ready(const ParameterSet& params) const {
  return !vocab_.empty() && params.contains(prefix_ + ".out.W") &&
         params.value(prefix_ + ".out.W").rows() == vocab_.size();
}

ad::Var RelationHead::logits(const ParameterSet& params, ad::Var q) const {
  if (!ready(params)) throw DataError("relation head is not trained (no weights for " + prefix_ + ")");
  ad::Var h = ad::relu(dense(params, prefix_ + ".hidden", q));
  return dense(params, prefix_ + ".out", h);
}

std::vector<std::string> top_relations(std::span<const double> logits, const RelationVocab& vocab,
                                       std::size_t k) {
  if (logits.size() != vocab.size()) {
    throw DimensionError("top_relations: " + std::to_string(logits.size()) + " logits for " +
                         std::to_string(vocab.size()) + " relations");
  }
  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
  order.resize(std::min(k, order.size()));
  std::vector<std::string> out;
  for (std::size_t i : order) out.push_back(vocab.names()[i]);
  return out;
}

}  // namespace gruc
