// SPDX-License-Identifier: Apache-2.0
#include "gruc/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gruc/errors.hpp"
#include "gruc/log.hpp"

namespace gruc {

bool EmbeddingTable::contains(std::string_view token) const {
  return vectors_.find(std::string(token)) != vectors_.end();
}

bool EmbeddingTable::insert(const std::string& token, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw DimensionError("embedding '" + token + "' has " + std::to_string(vec.size()) +
                         " values, table dimension is " + std::to_string(dim_));
  }
  auto [it, inserted] = vectors_.insert_or_assign(token, std::move(vec));
  if (inserted) order_.push_back(token);
  return !inserted;
}

std::span<const double> EmbeddingTable::lookup(std::string_view token) const {
  counters_->lookups.fetch_add(1, std::memory_order_relaxed);
  auto it = vectors_.find(std::string(token));
  if (it == vectors_.end()) {
    counters_->oov.fetch_add(1, std::memory_order_relaxed);
    return zero_;
  }
  return it->second;
}

EmbeddingTable load_table(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embedding file " + path.string(), 0);
  EmbeddingTable table(dim);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> vec;
    vec.reserve(dim);
    std::string field;
    while (fields >> field) {
      double v = 0.0;
      const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || end != field.data() + field.size()) {
        throw ParseError("embedding '" + token + "': non-numeric value '" + field + "'", lineno);
      }
      vec.push_back(v);
    }
    if (vec.size() != dim) {
      throw ParseError("embedding '" + token + "': expected " + std::to_string(dim) +
                           " values, got " + std::to_string(vec.size()),
                       lineno);
    }
    if (table.insert(token, std::move(vec))) {
      log::warn("embedding file " + path.string() + ": duplicate token '" + token +
                "' at line " + std::to_string(lineno) + ", keeping the last row");
    }
  }
  return table;
}

void save_table(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embedding file " + path.string());
  out << std::setprecision(17);
  for (const std::string& token : table.tokens()) {
    out << token;
    for (double v : table.lookup(token)) out << ' ' << v;
    out << '\n';
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || std::ispunct(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<double> embed_phrase(std::span<const std::string> tokens,
                                 const EmbeddingTable& table) {
  if (tokens.empty()) throw DomainError("embed_phrase: empty token list");
  std::vector<double> out(table.dim(), 0.0);
  for (const std::string& t : tokens) {
    const auto v = table.lookup(t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (double& x : out) x *= inv;
  return out;
}

std::vector<double> embed_text(std::string_view text, const EmbeddingTable& table) {
  const auto tokens = tokenize(text);
  return embed_phrase(tokens, table);
}

QuestionEncoder::QuestionEncoder(QuestionEncoderConfig config, std::string prefix)
    : config_(config), cell_{std::move(prefix), config.word_dim, config.hidden_dim} {
  if (config_.max_len == 0) throw DomainError("question encoder: max_len must be positive");
}

void QuestionEncoder::add_params(ParameterSet& params, std::uint64_t seed) const {
  cell_.add_params(params, seed);
}

std::pair<Tensor, std::size_t> QuestionEncoder::inputs(std::span<const std::string> tokens,
                                                       const EmbeddingTable& table) const {
  if (tokens.empty()) throw DomainError("encode_question: empty question");
  if (table.dim() != config_.word_dim) {
    throw DimensionError("encode_question: table dimension " + std::to_string(table.dim()) +
                         " vs encoder word_dim " + std::to_string(config_.word_dim));
  }
  const std::size_t len = std::min(tokens.size(), config_.max_len);
  Tensor x(config_.max_len, config_.word_dim);
  for (std::size_t i = 0; i < len; ++i) {
    const auto v = table.lookup(tokens[i]);
    std::copy(v.begin(), v.end(), x.row_span(i).begin());
  }
  return {std::move(x), len};
}

QuestionEncoding QuestionEncoder::encode(ad::Tape& tape, std::span<const std::string> tokens,
                                         const EmbeddingTable& table,
                                         const ParameterSet& params) const {
  auto [x, len] = inputs(tokens, table);
  ad::Var xs = tape.constant(std::move(x));
  ad::Var h = tape.constant(Tensor(1, config_.hidden_dim));
  ad::Var c = tape.constant(Tensor(1, config_.hidden_dim));
  std::vector<ad::Var> states;
  states.reserve(config_.max_len);
  ad::Var q = h;
  for (std::size_t step = 0; step < config_.max_len; ++step) {
    cell_.step(params, ad::gather_rows(xs, {static_cast<std::uint32_t>(step)}), h, c);
    states.push_back(h);
    if (step + 1 == len) q = h;
  }
  if (!config_.final_state_at_length) q = states.back();
  return QuestionEncoding{ad::concat_rows(states), q, len};
}

}  // namespace gruc
