// SPDX-License-Identifier: Apache-2.0
#include "gruc/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include "gruc/errors.hpp"
#include "gruc/params.hpp"

namespace gruc {

namespace {

constexpr std::array<const char*, 8> kRelations = {
    "UsedFor", "CapableOf", "AtLocation", "PartOf", "MadeOf", "HasProperty", "ReceivesAction",
    "CreatedBy"};
constexpr std::array<const char*, 5> kTupleRelations = {"near", "on", "beside", "holding", "under"};
constexpr std::array<const char*, 2> kQuestionLead = {"which", "object"};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<double> gaussian(std::size_t dim, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(dim);
  for (double& x : v) x = n(rng);
  return v;
}

template <class T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

/// `count` distinct items from `pool` not in `taken`; adds them to `taken`.
std::vector<std::string> draw_distinct(const std::vector<std::string>& pool, std::size_t count,
                                       std::set<std::string>& taken, std::mt19937_64& rng) {
  std::vector<std::string> free;
  for (const auto& p : pool) {
    if (!taken.contains(p)) free.push_back(p);
  }
  if (free.size() < count) throw DomainError("synthetic: vocabulary too small for this config");
  std::shuffle(free.begin(), free.end(), rng);
  free.resize(count);
  taken.insert(free.begin(), free.end());
  return free;
}

}  // namespace

std::string_view difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::kVisual: return "visual";
    case Difficulty::kSemantic: return "semantic";
    case Difficulty::kBoth: return "both";
    case Difficulty::kFactOnly: return "fact-only";
  }
  return "both";
}

Difficulty parse_difficulty(std::string_view name) {
  for (Difficulty d : {Difficulty::kVisual, Difficulty::kSemantic, Difficulty::kBoth,
                       Difficulty::kFactOnly}) {
    if (difficulty_name(d) == name) return d;
  }
  throw DomainError("unknown difficulty '" + std::string(name) +
                    "' (visual, semantic, both, fact-only)");
}

SyntheticWorld::SyntheticWorld(SyntheticConfig config)
    : config_(config), table_(config.word_dim), projection_(config.visual_dim, config.word_dim) {
  const auto& c = config_;
  if (c.word_dim == 0 || c.visual_dim == 0) throw DomainError("synthetic: dims must be positive");
  if (c.relations == 0 || c.relations > kRelations.size()) {
    throw DomainError("synthetic: relations must be in [1, 8]");
  }
  if (c.topics < 2) throw DomainError("synthetic: need at least 2 topics");
  if (c.detections == 0 || c.caption_ranks == 0) {
    throw DomainError("synthetic: detections and caption_ranks must be positive");
  }
  if (c.objects < 1 + c.distractors + c.noise_facts + c.detections + 2 * c.tuples) {
    throw DomainError("synthetic: too few objects for the per-instance draw");
  }
  for (std::size_t i = 0; i < c.objects; ++i) objects_.push_back("obj" + std::to_string(i));
  for (std::size_t i = 0; i < c.topics; ++i) topics_.push_back("topic" + std::to_string(i));
  for (std::size_t i = 0; i < c.relations; ++i) relations_.emplace_back(kRelations[i]);

  std::mt19937_64 rng(mix(c.world_seed, 0x776f726c64ULL));
  auto add = [&](const std::string& word) {
    if (!table_.contains(word)) table_.insert(word, gaussian(c.word_dim, c.embed_scale, rng));
  };
  for (const char* w : kQuestionLead) add(w);
  for (const auto& r : relations_) {
    for (const auto& w : relation_words(r)) add(w);
  }
  for (const char* w : kTupleRelations) add(w);
  for (const auto& o : objects_) add(o);
  for (const auto& t : topics_) add(t);

  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(c.word_dim)));
  for (double& x : projection_.values()) x = n(rng);
}

std::vector<double> SyntheticWorld::visual_feature(const std::string& object,
                                                   std::uint64_t noise_seed) const {
  const auto emb = table_.lookup(object);
  std::vector<double> f(config_.visual_dim, 0.0);
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, config_.visual_noise);
  for (std::size_t r = 0; r < config_.visual_dim; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < config_.word_dim; ++k) s += projection_(r, k) * emb[k];
    f[r] = s + noise(rng);
  }
  return f;
}

InstanceBundle SyntheticWorld::instance(std::uint64_t seed, Difficulty difficulty,
                                        const std::string& id) const {
  const auto& c = config_;
  std::mt19937_64 rng(mix(mix(c.world_seed, seed), static_cast<std::uint64_t>(difficulty)));
  InstanceBundle b;
  b.id = id.empty() ? "syn-" + std::to_string(seed) : id;

  const std::string rel = pick(relations_, rng);
  const std::string topic = pick(topics_, rng);
  std::set<std::string> taken;
  const std::vector<std::string> candidates = draw_distinct(objects_, 1 + c.distractors, taken, rng);
  const std::string& answer = candidates.front();
  std::vector<std::string> other_topics;
  for (const auto& t : topics_) {
    if (t != topic) other_topics.push_back(t);
  }

  b.facts.push_back({answer, rel, topic});
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    // fact-only: distractors hang off other topics, so the topic link decides.
    const std::string& e2 = difficulty == Difficulty::kFactOnly ? pick(other_topics, rng) : topic;
    b.facts.push_back({candidates[k], rel, e2});
  }
  for (const auto& o : draw_distinct(objects_, c.noise_facts, taken, rng)) {
    b.facts.push_back({o, pick(relations_, rng), pick(other_topics, rng)});
  }
  std::shuffle(b.facts.begin(), b.facts.end(), rng);

  const bool visual_cue = difficulty == Difficulty::kVisual || difficulty == Difficulty::kBoth;
  const bool semantic_cue = difficulty == Difficulty::kSemantic || difficulty == Difficulty::kBoth;

  std::vector<std::string> det_labels =
      draw_distinct(objects_, c.detections - (visual_cue ? 1 : 0), taken, rng);
  if (visual_cue) {
    const auto pos = std::uniform_int_distribution<std::size_t>(0, det_labels.size())(rng);
    det_labels.insert(det_labels.begin() + static_cast<std::ptrdiff_t>(pos), answer);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& label : det_labels) {
    DetectionRecord d;
    d.bbox.w = 0.1 + 0.4 * unit(rng);
    d.bbox.h = 0.1 + 0.4 * unit(rng);
    d.bbox.x = unit(rng) * (1.0 - d.bbox.w);
    d.bbox.y = unit(rng) * (1.0 - d.bbox.h);
    d.feature = visual_feature(label, rng());
    d.label = {label};
    d.score = 0.5 + 0.5 * unit(rng);
    b.detections.push_back(std::move(d));
  }

  std::uniform_int_distribution<int> rank(0, static_cast<int>(c.caption_ranks) - 1);
  const std::vector<std::string> tuple_rels(kTupleRelations.begin(), kTupleRelations.end());
  const std::size_t n_plain = semantic_cue ? (c.tuples > 0 ? c.tuples - 1 : 0) : c.tuples;
  const std::vector<std::string> tuple_objs = draw_distinct(objects_, 2 * n_plain + 1, taken, rng);
  for (std::size_t k = 0; k < n_plain; ++k) {
    b.semantic_tuples.push_back(
        {tuple_objs[2 * k], pick(tuple_rels, rng), tuple_objs[2 * k + 1], rank(rng)});
  }
  if (semantic_cue) {
    const auto pos = std::uniform_int_distribution<std::size_t>(0, b.semantic_tuples.size())(rng);
    b.semantic_tuples.insert(b.semantic_tuples.begin() + static_cast<std::ptrdiff_t>(pos),
                             {answer, pick(tuple_rels, rng), tuple_objs.back(), rank(rng)});
  }

  b.question.assign(kQuestionLead.begin(), kQuestionLead.end());
  for (const auto& w : relation_words(rel)) b.question.push_back(w);
  b.question.push_back(topic);
  b.answer = answer;
  b.relation_label = rel;
  return b;
}

std::vector<InstanceBundle> SyntheticWorld::dataset(std::size_t n, std::uint64_t seed,
                                                    Difficulty difficulty) const {
  std::vector<InstanceBundle> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t s = mix(seed, i);
    out.push_back(instance(s, difficulty, "syn-" + std::to_string(seed) + "-" + std::to_string(i)));
  }
  return out;
}

std::string oracle_answer(const InstanceBundle& b, Difficulty difficulty) {
  if (b.question.size() < 4) throw DataError("oracle: question too short in '" + b.id + "'");
  const std::string topic = normalize_entity(b.question.back());
  const std::vector<std::string> rel_words(b.question.begin() + 2, b.question.end() - 1);

  std::set<std::string> seen_visual, seen_semantic;
  for (const auto& d : b.detections) {
    for (const auto& l : d.label) seen_visual.insert(normalize_entity(l));
  }
  for (const auto& t : b.semantic_tuples) {
    seen_semantic.insert(normalize_entity(t.subject));
    seen_semantic.insert(normalize_entity(t.object));
  }

  std::set<std::string> found;
  for (const auto& f : b.facts) {
    if (normalize_entity(f.e2) != topic || relation_words(f.rel) != rel_words) continue;
    const std::string e = normalize_entity(f.e1);
    const bool in_v = seen_visual.contains(e);
    const bool in_s = seen_semantic.contains(e);
    bool ok = true;
    switch (difficulty) {
      case Difficulty::kVisual: ok = in_v; break;
      case Difficulty::kSemantic: ok = in_s; break;
      case Difficulty::kBoth: ok = in_v && in_s; break;
      case Difficulty::kFactOnly: break;
    }
    if (ok) found.insert(e);
  }
  if (found.size() != 1) {
    throw DataError("oracle: " + std::to_string(found.size()) + " planted answers in '" + b.id +
                    "'");
  }
  return *found.begin();
}

SyntheticCorpus make_corpus(const SyntheticWorld& world, std::size_t n_train,
                            std::size_t n_splits, std::size_t n_test, std::uint64_t seed,
                            Difficulty difficulty) {
  SyntheticCorpus c;
  c.train = world.dataset(n_train, mix(seed, 0x747261696eULL), difficulty);
  for (std::size_t k = 0; k < n_splits; ++k) {
    c.splits.push_back(world.dataset(n_test, mix(seed, 0x73706c6974ULL + k), difficulty));
  }
  return c;
}

}  // namespace gruc
