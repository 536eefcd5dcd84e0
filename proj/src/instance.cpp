// SPDX-License-Identifier: Apache-2.0
#include "gruc/instance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "gruc/errors.hpp"

namespace gruc {

using nlohmann::json;

namespace {

[[noreturn]] void schema_fail(const std::string& id, const std::string& field,
                              const std::string& what) {
  throw SchemaError("instance '" + id + "': field '" + field + "': " + what);
}

const json& require(const json& j, const std::string& id, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) schema_fail(id, field, "missing");
  return *it;
}

std::string as_string(const json& j, const std::string& id, const std::string& field) {
  if (!j.is_string()) schema_fail(id, field, "expected a string");
  return j.get<std::string>();
}

double as_number(const json& j, const std::string& id, const std::string& field) {
  if (!j.is_number()) schema_fail(id, field, "expected a number");
  return j.get<double>();
}

std::vector<std::string> as_tokens(const json& j, const std::string& id,
                                   const std::string& field) {
  if (!j.is_array()) schema_fail(id, field, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_string(j[i], id, field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<double> as_numbers(const json& j, const std::string& id, const std::string& field) {
  if (!j.is_array()) schema_fail(id, field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_number(j[i], id, field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

void validate_instance(const InstanceBundle& b, std::size_t visual_dim) {
  const std::string& id = b.id;
  if (b.id.empty()) schema_fail(id, "id", "empty");
  if (b.question.empty()) schema_fail(id, "question", "empty");
  std::size_t dim = visual_dim;
  for (std::size_t i = 0; i < b.detections.size(); ++i) {
    const DetectionRecord& d = b.detections[i];
    const std::string at = "detections[" + std::to_string(i) + "]";
    if (!(d.bbox.w > 0.0) || !(d.bbox.h > 0.0)) {
      schema_fail(id, at + ".bbox", "width and height must be positive");
    }
    if (!std::isfinite(d.bbox.x) || !std::isfinite(d.bbox.y) || !std::isfinite(d.bbox.w) ||
        !std::isfinite(d.bbox.h)) {
      schema_fail(id, at + ".bbox", "non-finite coordinate");
    }
    if (dim == 0) dim = d.feature.size();
    if (d.feature.empty() || d.feature.size() != dim) {
      schema_fail(id, at + ".feature",
                  "length " + std::to_string(d.feature.size()) + ", expected " +
                      std::to_string(dim));
    }
    for (double v : d.feature) {
      if (!std::isfinite(v)) schema_fail(id, at + ".feature", "non-finite value");
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) schema_fail(id, at + ".score", "outside [0, 1]");
  }
  for (std::size_t i = 0; i < b.semantic_tuples.size(); ++i) {
    const SemanticTuple& t = b.semantic_tuples[i];
    if (t.subject.empty() || t.relation.empty() || t.object.empty()) {
      schema_fail(id, "semantic_tuples[" + std::to_string(i) + "]", "empty element");
    }
    if (t.caption && *t.caption < 0) {
      schema_fail(id, "semantic_tuples[" + std::to_string(i) + "]", "negative caption rank");
    }
  }
  bool answer_found = false;
  const std::string answer = normalize_entity(b.answer);
  if (b.answer.empty()) schema_fail(id, "answer", "empty");
  for (std::size_t i = 0; i < b.facts.size(); ++i) {
    const FactTriplet& f = b.facts[i];
    if (f.e1.empty() || f.rel.empty() || f.e2.empty()) {
      schema_fail(id, "facts[" + std::to_string(i) + "]", "empty element");
    }
    answer_found = answer_found || normalize_entity(f.e1) == answer ||
                   normalize_entity(f.e2) == answer;
  }
  if (!answer_found) schema_fail(id, "answer", "'" + b.answer + "' is not an entity of any fact");
  if (b.relation_label && b.relation_label->empty()) {
    schema_fail(id, "relation_label", "empty");
  }
}

json instance_to_json(const InstanceBundle& b) {
  json j;
  j["id"] = b.id;
  j["question"] = b.question;
  j["detections"] = json::array();
  for (const DetectionRecord& d : b.detections) {
    j["detections"].push_back({{"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
                               {"feature", d.feature},
                               {"label", d.label},
                               {"score", d.score}});
  }
  j["semantic_tuples"] = json::array();
  for (const SemanticTuple& t : b.semantic_tuples) {
    json row = {t.subject, t.relation, t.object};
    if (t.caption) row.push_back(*t.caption);
    j["semantic_tuples"].push_back(std::move(row));
  }
  j["facts"] = json::array();
  for (const FactTriplet& f : b.facts) j["facts"].push_back({f.e1, f.rel, f.e2});
  j["answer"] = b.answer;
  if (b.relation_label) j["relation_label"] = *b.relation_label;
  return j;
}

InstanceBundle instance_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("instance: expected a JSON object");
  InstanceBundle b;
  b.id = as_string(require(j, "<unknown>", "id"), "<unknown>", "id");
  const std::string& id = b.id;
  b.question = as_tokens(require(j, id, "question"), id, "question");

  const json& dets = require(j, id, "detections");
  if (!dets.is_array()) schema_fail(id, "detections", "expected an array");
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const std::string at = "detections[" + std::to_string(i) + "]";
    const json& d = dets[i];
    if (!d.is_object()) schema_fail(id, at, "expected an object");
    DetectionRecord rec;
    const auto box = as_numbers(require(d, id, "bbox"), id, at + ".bbox");
    if (box.size() != 4) schema_fail(id, at + ".bbox", "expected [x, y, w, h]");
    rec.bbox = {box[0], box[1], box[2], box[3]};
    rec.feature = as_numbers(require(d, id, "feature"), id, at + ".feature");
    rec.label = as_tokens(require(d, id, "label"), id, at + ".label");
    rec.score = as_number(require(d, id, "score"), id, at + ".score");
    b.detections.push_back(std::move(rec));
  }

  const json& tuples = require(j, id, "semantic_tuples");
  if (!tuples.is_array()) schema_fail(id, "semantic_tuples", "expected an array");
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const std::string at = "semantic_tuples[" + std::to_string(i) + "]";
    const json& t = tuples[i];
    if (!t.is_array() || (t.size() != 3 && t.size() != 4)) {
      schema_fail(id, at, "expected [subject, relation, object] with optional caption rank");
    }
    SemanticTuple st{as_string(t[0], id, at), as_string(t[1], id, at), as_string(t[2], id, at),
                     std::nullopt};
    if (t.size() == 4) {
      if (!t[3].is_number_integer()) schema_fail(id, at, "caption rank must be an integer");
      st.caption = t[3].get<int>();
    }
    b.semantic_tuples.push_back(std::move(st));
  }

  const json& facts = require(j, id, "facts");
  if (!facts.is_array()) schema_fail(id, "facts", "expected an array");
  for (std::size_t i = 0; i < facts.size(); ++i) {
    const std::string at = "facts[" + std::to_string(i) + "]";
    const json& f = facts[i];
    if (!f.is_array() || f.size() != 3) schema_fail(id, at, "expected [e1, rel, e2]");
    b.facts.push_back({as_string(f[0], id, at), as_string(f[1], id, at), as_string(f[2], id, at)});
  }

  b.answer = as_string(require(j, id, "answer"), id, "answer");
  if (auto it = j.find("relation_label"); it != j.end() && !it->is_null()) {
    b.relation_label = as_string(*it, id, "relation_label");
  }
  validate_instance(b);
  return b;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                          ec.message());
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

InstanceBundle load_instance(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": invalid JSON: " + e.what());
  }
  return instance_from_json(j);
}

void save_instance(const InstanceBundle& bundle, const std::filesystem::path& path) {
  write_file_atomic(path, instance_to_json(bundle).dump(2) + "\n");
}

std::vector<InstanceBundle> load_dataset(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<InstanceBundle> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(instance_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": invalid JSON: " +
                        e.what());
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_dataset(const std::vector<InstanceBundle>& data, const std::filesystem::path& path) {
  std::string text;
  for (const InstanceBundle& b : data) text += instance_to_json(b).dump() + "\n";
  write_file_atomic(path, text);
}

}  // namespace gruc
