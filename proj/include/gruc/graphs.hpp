// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gruc/autodiff.hpp"
#include "gruc/embeddings.hpp"
#include "gruc/tensor.hpp"

namespace gruc {

/// Top-left corner, width, height in pixels.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct DetectionRecord {
  BBox bbox;
  std::vector<double> feature;
  std::vector<std::string> label;
  double score = 0.0;
  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct SemanticTuple {
  std::string subject;
  std::string relation;
  std::string object;
  /// Rank of the source caption (0 = highest scoring); nullopt keeps the tuple
  /// under any caption budget.
  std::optional<int> caption;
  friend bool operator==(const SemanticTuple&, const SemanticTuple&) = default;
};

struct FactTriplet {
  std::string e1;
  std::string rel;
  std::string e2;
  friend bool operator==(const FactTriplet&, const FactTriplet&) = default;
};

struct InstanceBundle {
  std::string id;
  std::vector<std::string> question;
  std::vector<DetectionRecord> detections;
  std::vector<SemanticTuple> semantic_tuples;
  std::vector<FactTriplet> facts;
  std::string answer;
  std::optional<std::string> relation_label;
  friend bool operator==(const InstanceBundle&, const InstanceBundle&) = default;
};

enum class Modality { kVisual, kSemantic, kFact };
const char* modality_name(Modality m);

struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed attributed graph. Node and edge features are rows of the two
/// tensors; labels name nodes for semantic and fact graphs.
struct ModalGraph {
  Modality modality = Modality::kFact;
  Tensor node_features;
  std::vector<std::string> node_labels;
  std::vector<Edge> edges;
  Tensor edge_features;
  /// Fact graphs: the relation string behind each edge.
  std::vector<std::string> edge_relations;
  /// Normalized label -> node index (semantic and fact graphs).
  std::map<std::string, std::uint32_t> node_index;

  std::size_t num_nodes() const { return node_features.rows(); }
  std::size_t num_edges() const { return edges.size(); }
  std::size_t node_dim() const { return node_features.cols(); }
  std::size_t edge_dim() const { return edge_features.cols(); }
  bool empty() const { return num_nodes() == 0; }
};

/// Which edges make two nodes neighbors.
enum class NeighborMode {
  kBoth,      // in-neighbors and out-neighbors
  kIncoming,  // in-neighbors only
};

/// Which edge orientation supplies the pair feature when both exist.
enum class PairOrientation {
  kNeighborToReceiver,  // r_ji for neighbor j of receiver i
  kReceiverToNeighbor,  // r_ij
};

/// Flattened (receiver, neighbor) pairs. Each neighbor appears once per
/// receiver; its feature is the mean over the parallel edges in the preferred
/// orientation (falling back to the other one in kBoth mode). Pairs are sorted
/// by receiver, then neighbor.
struct Neighborhood {
  std::size_t num_nodes = 0;
  ad::Index receiver;
  ad::Index neighbor;
  Tensor pair_features;  // pairs x edge_dim
  std::size_t size() const { return receiver.size(); }
  std::size_t degree(std::uint32_t node) const;
};

Neighborhood neighborhood(const ModalGraph& graph, NeighborMode mode,
                          PairOrientation orientation);

/// [(x_j - x_i)/w_i, (y_j - y_i)/h_i, w_j/w_i, h_j/h_i, w_j h_j / (w_i h_i)].
std::array<double, 5> spatial_edge_feature(const BBox& from, const BBox& to);

/// One node per detection (feature = visual feature), a directed edge with
/// its spatial feature for every ordered pair i != j.
ModalGraph build_visual_graph(const std::vector<DetectionRecord>& detections,
                              std::size_t max_objects = 36);

/// Nodes: distinct normalized subject/object names (mean word vectors).
/// Edges: one per tuple (mean relation word vectors); self-relations add no
/// edge. Tuples whose caption rank is >= max_captions are dropped.
ModalGraph build_semantic_graph(const std::vector<SemanticTuple>& tuples,
                                const EmbeddingTable& table, std::size_t max_captions = 12);

/// Nodes: distinct normalized entities. One edge e1 -> e2 per distinct fact.
/// Throws NoCandidates for an empty fact list.
ModalGraph build_fact_graph(const std::vector<FactTriplet>& facts, const EmbeddingTable& table);

/// Case-folded text; the exact identity used to merge nodes.
std::string normalize_entity(std::string_view text);
/// Words of a relation name: "UsedFor" -> {used, for}, "/r/IsA" -> {is, a}.
std::vector<std::string> relation_words(std::string_view relation);

}  // namespace gruc
