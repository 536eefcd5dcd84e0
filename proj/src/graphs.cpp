// SPDX-License-Identifier: Apache-2.0
#include "gruc/graphs.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

#include "gruc/errors.hpp"

namespace gruc {

const char* modality_name(Modality m) {
  switch (m) {
    case Modality::kVisual: return "visual";
    case Modality::kSemantic: return "semantic";
    case Modality::kFact: return "fact";
  }
  return "unknown";
}

std::string normalize_entity(std::string_view text) {
  std::string out(text);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::vector<std::string> relation_words(std::string_view relation) {
  // Split camel case before the generic tokenizer sees it.
  std::string spaced;
  for (std::size_t i = 0; i < relation.size(); ++i) {
    const auto c = static_cast<unsigned char>(relation[i]);
    if (i > 0 && std::isupper(c) &&
        std::islower(static_cast<unsigned char>(relation[i - 1]))) {
      spaced.push_back(' ');
    }
    spaced.push_back(relation[i]);
  }
  std::vector<std::string> words = tokenize(spaced);
  // ConceptNet-style "/r/IsA" leaves a stray "r".
  if (words.size() > 1 && words.front() == "r" && relation.starts_with("/r/")) {
    words.erase(words.begin());
  }
  return words;
}

std::size_t Neighborhood::degree(std::uint32_t node) const {
  return static_cast<std::size_t>(std::count(receiver.begin(), receiver.end(), node));
}

Neighborhood neighborhood(const ModalGraph& graph, NeighborMode mode,
                          PairOrientation orientation) {
  const std::size_t d = graph.edge_dim();
  // (receiver, neighbor) -> edges in each orientation
  struct Incident {
    std::vector<std::size_t> toward;  // neighbor -> receiver
    std::vector<std::size_t> away;    // receiver -> neighbor
  };
  std::map<std::pair<std::uint32_t, std::uint32_t>, Incident> pairs;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    if (edge.src == edge.dst) continue;
    pairs[{edge.dst, edge.src}].toward.push_back(e);
    if (mode == NeighborMode::kBoth) pairs[{edge.src, edge.dst}].away.push_back(e);
  }
  Neighborhood nb;
  nb.num_nodes = graph.num_nodes();
  nb.pair_features = Tensor(pairs.size(), d);
  std::size_t row = 0;
  for (const auto& [key, inc] : pairs) {
    nb.receiver.push_back(key.first);
    nb.neighbor.push_back(key.second);
    const bool prefer_toward = orientation == PairOrientation::kNeighborToReceiver;
    const std::vector<std::size_t>* src = prefer_toward ? &inc.toward : &inc.away;
    if (src->empty()) src = prefer_toward ? &inc.away : &inc.toward;
    const double inv = 1.0 / static_cast<double>(src->size());
    for (std::size_t e : *src) {
      const auto f = graph.edge_features.row_span(e);
      for (std::size_t k = 0; k < d; ++k) nb.pair_features(row, k) += inv * f[k];
    }
    ++row;
  }
  return nb;
}

std::array<double, 5> spatial_edge_feature(const BBox& from, const BBox& to) {
  if (!(from.w > 0.0 && from.h > 0.0 && to.w > 0.0 && to.h > 0.0)) {
    throw DomainError("spatial_edge_feature: box width and height must be positive");
  }
  return {(to.x - from.x) / from.w, (to.y - from.y) / from.h, to.w / from.w, to.h / from.h,
          (to.w * to.h) / (from.w * from.h)};
}

ModalGraph build_visual_graph(const std::vector<DetectionRecord>& detections,
                              std::size_t max_objects) {
  if (detections.empty()) throw DomainError("build_visual_graph: no detections");
  if (detections.size() > max_objects) {
    throw DomainError("build_visual_graph: " + std::to_string(detections.size()) +
                      " detections exceed the limit of " + std::to_string(max_objects));
  }
  const std::size_t n = detections.size();
  const std::size_t dim = detections.front().feature.size();
  ModalGraph g;
  g.modality = Modality::kVisual;
  g.node_features = Tensor(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = detections[i].feature;
    if (f.size() != dim) throw DimensionError("build_visual_graph: ragged visual features");
    std::copy(f.begin(), f.end(), g.node_features.row_span(i).begin());
    std::string label;
    for (const auto& w : detections[i].label) label += (label.empty() ? "" : " ") + w;
    g.node_labels.push_back(label);
  }
  g.edge_features = Tensor(n * (n - 1), 5);
  std::size_t e = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      if (i == j) continue;
      g.edges.push_back({i, j});
      const auto r = spatial_edge_feature(detections[i].bbox, detections[j].bbox);
      std::copy(r.begin(), r.end(), g.edge_features.row_span(e).begin());
      ++e;
    }
  }
  return g;
}

namespace {

// Assigns node ids in first-appearance order and collects phrase vectors.
struct NodeBuilder {
  const EmbeddingTable& table;
  std::map<std::string, std::uint32_t> index;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> features;

  std::uint32_t node(const std::string& raw) {
    std::string key = normalize_entity(raw);
    if (key.empty()) throw SchemaError("graph node with empty name");
    if (auto it = index.find(key); it != index.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(labels.size());
    index.emplace(key, id);
    features.push_back(embed_text(key, table));
    labels.push_back(std::move(key));
    return id;
  }

  void finish(ModalGraph& g) {
    g.node_features = Tensor(labels.size(), table.dim());
    for (std::size_t i = 0; i < features.size(); ++i) {
      std::copy(features[i].begin(), features[i].end(), g.node_features.row_span(i).begin());
    }
    g.node_labels = std::move(labels);
    g.node_index = std::move(index);
  }
};

std::vector<double> relation_vector(const std::string& rel, const EmbeddingTable& table) {
  auto words = relation_words(rel);
  if (words.empty()) throw SchemaError("relation '" + rel + "' has no words");
  return embed_phrase(words, table);
}

void set_edge_features(ModalGraph& g, const std::vector<std::vector<double>>& rows,
                       std::size_t dim) {
  g.edge_features = Tensor(rows.size(), dim);
  for (std::size_t e = 0; e < rows.size(); ++e) {
    std::copy(rows[e].begin(), rows[e].end(), g.edge_features.row_span(e).begin());
  }
}

}  // namespace

ModalGraph build_semantic_graph(const std::vector<SemanticTuple>& tuples,
                                const EmbeddingTable& table, std::size_t max_captions) {
  ModalGraph g;
  g.modality = Modality::kSemantic;
  NodeBuilder nodes{table, {}, {}, {}};
  std::vector<std::vector<double>> edge_rows;
  for (const SemanticTuple& t : tuples) {
    if (t.caption && (*t.caption < 0 || static_cast<std::size_t>(*t.caption) >= max_captions)) {
      continue;
    }
    const std::uint32_t s = nodes.node(t.subject);
    const std::uint32_t o = nodes.node(t.object);
    if (s == o) continue;
    g.edges.push_back({s, o});
    g.edge_relations.push_back(t.relation);
    edge_rows.push_back(relation_vector(t.relation, table));
  }
  nodes.finish(g);
  set_edge_features(g, edge_rows, table.dim());
  return g;
}

ModalGraph build_fact_graph(const std::vector<FactTriplet>& facts, const EmbeddingTable& table) {
  if (facts.empty()) throw NoCandidates("fact graph has no candidate facts");
  ModalGraph g;
  g.modality = Modality::kFact;
  NodeBuilder nodes{table, {}, {}, {}};
  std::set<std::tuple<std::uint32_t, std::string, std::uint32_t>> seen;
  std::vector<std::vector<double>> edge_rows;
  for (const FactTriplet& f : facts) {
    const std::uint32_t a = nodes.node(f.e1);
    const std::uint32_t b = nodes.node(f.e2);
    if (a == b) continue;
    if (!seen.emplace(a, normalize_entity(f.rel), b).second) continue;
    g.edges.push_back({a, b});
    g.edge_relations.push_back(f.rel);
    edge_rows.push_back(relation_vector(f.rel, table));
  }
  nodes.finish(g);
  set_edge_features(g, edge_rows, table.dim());
  return g;
}

}  // namespace gruc
