// SPDX-License-Identifier: Apache-2.0
#pragma once
// Small models and instances shared by the model, harness and acceptance
// suites.

#include "gruc/harness.hpp"
#include "gruc/synthetic.hpp"

namespace gruc::testing {

inline SyntheticConfig small_world_config(std::uint64_t world_seed = 0) {
  SyntheticConfig c;
  c.word_dim = 8;
  c.visual_dim = 8;
  c.world_seed = world_seed;
  return c;
}

/// Model dims in the 8..32 range, library defaults elsewhere.
inline ModelConfig small_model(const SyntheticConfig& world) {
  ModelConfig m;
  m.word_dim = world.word_dim;
  m.visual_dim = world.visual_dim;
  m.hidden_dim = 16;
  m.attention_dim = 8;
  m.classifier_hidden = 16;
  m.relation_hidden = 8;
  m.max_question_len = 8;
  return m;
}

/// 3 detections, 3 semantic nodes, 4 facts; the answer is obj1.
inline InstanceBundle tiny_instance(const SyntheticWorld& world) {
  InstanceBundle b;
  b.id = "tiny";
  b.question = {"which", "object", "used", "for", "topic0"};
  const char* labels[] = {"obj1", "obj4", "obj5"};
  const BBox boxes[] = {{0.1, 0.1, 0.3, 0.2}, {0.5, 0.4, 0.2, 0.3}, {0.2, 0.6, 0.4, 0.3}};
  for (int k = 0; k < 3; ++k) {
    DetectionRecord d;
    d.bbox = boxes[k];
    d.feature = world.visual_feature(labels[k], 100 + k);
    d.label = {labels[k]};
    d.score = 0.9;
    b.detections.push_back(std::move(d));
  }
  b.semantic_tuples = {{"obj1", "near", "obj6", 0}, {"obj1", "on", "obj7", 1}};
  b.facts = {{"obj1", "UsedFor", "topic0"},
             {"obj2", "UsedFor", "topic0"},
             {"obj3", "UsedFor", "topic0"},
             {"obj8", "PartOf", "topic3"}};
  b.answer = "obj1";
  b.relation_label = "UsedFor";
  return b;
}

inline TrainConfig small_train_config(const SyntheticConfig& world, std::size_t epochs = 10) {
  TrainConfig c;
  c.model = small_model(world);
  c.epochs = epochs;
  return c;
}

}  // namespace gruc::testing
