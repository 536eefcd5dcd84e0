// SPDX-License-Identifier: Apache-2.0
#include <functional>
#include <map>

#include "gruc/errors.hpp"
#include "gruc/harness.hpp"

namespace gruc {

using nlohmann::json;

namespace {

const char* score_mode_name(ScoreMode m) {
  return m == ScoreMode::kPairwiseMean ? "pairwise_mean" : "max_per_fact_word";
}
const char* neighbor_mode_name(NeighborMode m) {
  return m == NeighborMode::kBoth ? "both" : "incoming";
}

std::size_t as_size(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw SchemaError("config: '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}
double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw SchemaError("config: '" + key + "' must be a number");
  return v.get<double>();
}
bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw SchemaError("config: '" + key + "' must be true or false");
  return v.get<bool>();
}

using Setter = std::function<void(const json&, const std::string&)>;

void apply(const json& j, const std::map<std::string, Setter>& setters, const std::string& where) {
  if (!j.is_object()) throw SchemaError("config: " + where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw SchemaError("config: unknown key '" + where + key + "'");
    it->second(value, where + key);
  }
}

Setter size_field(std::size_t& f) {
  return [&f](const json& v, const std::string& k) { f = as_size(v, k); };
}
Setter double_field(double& f) {
  return [&f](const json& v, const std::string& k) { f = as_double(v, k); };
}
Setter bool_field(bool& f) {
  return [&f](const json& v, const std::string& k) { f = as_bool(v, k); };
}

}  // namespace

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw DomainError(std::string("config: '") + name + "' must be positive");
  };
  positive(epochs, "epochs");
  positive(batch, "batch");
  positive(jobs, "jobs");
  positive(model.word_dim, "word_dim");
  positive(model.visual_dim, "visual_dim");
  positive(model.hidden_dim, "hidden_dim");
  positive(model.attention_dim, "attention_dim");
  positive(model.classifier_hidden, "classifier_hidden");
  positive(model.relation_hidden, "relation_hidden");
  positive(model.max_question_len, "max_question_len");
  positive(model.steps, "T");
  positive(model.max_objects, "max_objects");
  positive(model.captions, "captions");
  positive(model.retain_top, "retain_top");
  positive(model.relation_top_k, "relation_top_k");
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) {
    throw DomainError("config: 'dropout' must be in [0, 1)");
  }
  if (!(model.pos_weight > 0.0 && model.neg_weight > 0.0)) {
    throw DomainError("config: loss weights 'a' and 'b' must be positive");
  }
  schedule.validate();
  if (static_cast<double>(epochs) > schedule.total_epochs) {
    throw DomainError("config: 'epochs' exceeds schedule.total_epochs");
  }
}

json config_to_json(const TrainConfig& c) {
  const ModelConfig& m = c.model;
  const AblationConfig& a = c.ablation;
  json j;
  j["word_dim"] = m.word_dim;
  j["visual_dim"] = m.visual_dim;
  j["hidden_dim"] = m.hidden_dim;
  j["attention_dim"] = m.attention_dim;
  j["classifier_hidden"] = m.classifier_hidden;
  j["relation_hidden"] = m.relation_hidden;
  j["max_question_len"] = m.max_question_len;
  j["question_state_at_length"] = m.question_state_at_length;
  j["T"] = m.steps;
  j["gnn_layers"] = m.gnn_layers;
  j["dropout"] = m.dropout;
  j["max_objects"] = m.max_objects;
  j["captions"] = m.captions;
  j["retain_top"] = m.retain_top;
  j["relation_top_k"] = m.relation_top_k;
  j["relation_filter"] = m.relation_filter;
  j["score_mode"] = score_mode_name(m.score_mode);
  j["neighbor_mode"] = neighbor_mode_name(m.neighbor_mode);
  j["fuse_read_vector"] = m.fuse_read_vector;
  j["a"] = m.pos_weight;
  j["b"] = m.neg_weight;
  j["relation_loss_weight"] = m.relation_loss_weight;
  j["epochs"] = c.epochs;
  j["batch"] = c.batch;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["schedule"] = {{"base_lr", c.schedule.base_lr},
                   {"warmup_epochs", c.schedule.warmup_epochs},
                   {"warmup_factor", c.schedule.warmup_factor},
                   {"eta_min", c.schedule.eta_min},
                   {"total_epochs", c.schedule.total_epochs}};
  j["ablation"] = {{"use_semantic_graph", a.use_semantic_graph},
                   {"use_visual_graph", a.use_visual_graph},
                   {"control_neighbor_agg", a.control_neighbor_agg},
                   {"update_neighbor_agg", a.update_neighbor_agg},
                   {"use_gruc", a.use_gruc},
                   {"use_intra_selection", a.use_intra_selection},
                   {"use_global_assess", a.use_global_assess}};
  return j;
}

TrainConfig config_from_json(const json& j, TrainConfig c) {
  ModelConfig& m = c.model;
  AblationConfig& a = c.ablation;
  const std::map<std::string, Setter> schedule_fields{
      {"base_lr", double_field(c.schedule.base_lr)},
      {"warmup_epochs", double_field(c.schedule.warmup_epochs)},
      {"warmup_factor", double_field(c.schedule.warmup_factor)},
      {"eta_min", double_field(c.schedule.eta_min)},
      {"total_epochs", double_field(c.schedule.total_epochs)},
  };
  const std::map<std::string, Setter> ablation_fields{
      {"use_semantic_graph", bool_field(a.use_semantic_graph)},
      {"use_visual_graph", bool_field(a.use_visual_graph)},
      {"control_neighbor_agg", bool_field(a.control_neighbor_agg)},
      {"update_neighbor_agg", bool_field(a.update_neighbor_agg)},
      {"use_gruc", bool_field(a.use_gruc)},
      {"use_intra_selection", bool_field(a.use_intra_selection)},
      {"use_global_assess", bool_field(a.use_global_assess)},
  };
  const std::map<std::string, Setter> fields{
      {"word_dim", size_field(m.word_dim)},
      {"visual_dim", size_field(m.visual_dim)},
      {"hidden_dim", size_field(m.hidden_dim)},
      {"attention_dim", size_field(m.attention_dim)},
      {"classifier_hidden", size_field(m.classifier_hidden)},
      {"relation_hidden", size_field(m.relation_hidden)},
      {"max_question_len", size_field(m.max_question_len)},
      {"question_state_at_length", bool_field(m.question_state_at_length)},
      {"T", size_field(m.steps)},
      {"gnn_layers", size_field(m.gnn_layers)},
      {"dropout", double_field(m.dropout)},
      {"max_objects", size_field(m.max_objects)},
      {"captions", size_field(m.captions)},
      {"retain_top", size_field(m.retain_top)},
      {"relation_top_k", size_field(m.relation_top_k)},
      {"relation_filter", bool_field(m.relation_filter)},
      {"score_mode",
       [&](const json& v, const std::string& k) {
         const std::string s = v.is_string() ? v.get<std::string>() : "";
         if (s == "pairwise_mean") m.score_mode = ScoreMode::kPairwiseMean;
         else if (s == "max_per_fact_word") m.score_mode = ScoreMode::kMaxPerFactWord;
         else throw SchemaError("config: '" + k + "' must be pairwise_mean or max_per_fact_word");
       }},
      {"neighbor_mode",
       [&](const json& v, const std::string& k) {
         const std::string s = v.is_string() ? v.get<std::string>() : "";
         if (s == "both") m.neighbor_mode = NeighborMode::kBoth;
         else if (s == "incoming") m.neighbor_mode = NeighborMode::kIncoming;
         else throw SchemaError("config: '" + k + "' must be both or incoming");
       }},
      {"fuse_read_vector", bool_field(m.fuse_read_vector)},
      {"a", double_field(m.pos_weight)},
      {"b", double_field(m.neg_weight)},
      {"relation_loss_weight", double_field(m.relation_loss_weight)},
      {"epochs", size_field(c.epochs)},
      {"batch", size_field(c.batch)},
      {"seed",
       [&](const json& v, const std::string& k) {
         if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
           throw SchemaError("config: '" + k + "' must be a non-negative integer");
         }
         c.seed = v.get<std::uint64_t>();
       }},
      {"jobs", size_field(c.jobs)},
      {"schedule", [&](const json& v, const std::string&) { apply(v, schedule_fields, "schedule."); }},
      {"ablation", [&](const json& v, const std::string&) { apply(v, ablation_fields, "ablation."); }},
  };
  apply(j, fields, "");
  c.validate();
  return c;
}

}  // namespace gruc
