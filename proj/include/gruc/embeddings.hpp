// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gruc/autodiff.hpp"
#include "gruc/layers.hpp"
#include "gruc/params.hpp"

namespace gruc {

/// Word vectors of one fixed dimension. Unknown tokens embed as the zero
/// vector and are counted, so lookups never fail.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 300) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(std::string_view token) const;

  /// Inserts or replaces; returns true when an existing row was replaced.
  bool insert(const std::string& token, std::vector<double> vec);
  /// Zero vector for OOV tokens.
  std::span<const double> lookup(std::string_view token) const;

  std::uint64_t lookups() const { return counters_->lookups.load(std::memory_order_relaxed); }
  std::uint64_t oov_lookups() const { return counters_->oov.load(std::memory_order_relaxed); }

  /// Tokens in insertion order (stable output for save_table).
  const std::vector<std::string>& tokens() const { return order_; }

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::vector<std::string> order_;
  std::vector<double> zero_ = std::vector<double>(dim_, 0.0);
  struct Counters {
    std::atomic<std::uint64_t> lookups{0};
    std::atomic<std::uint64_t> oov{0};
  };
  // Shared by copies; atomics keep concurrent lookups race-free.
  std::shared_ptr<Counters> counters_ = std::make_shared<Counters>();
};

/// Reads "token v1 ... v_dim" lines. Duplicate tokens: last row wins and a
/// warning is logged. Wrong arity or non-numeric values raise ParseError
/// with the line number.
EmbeddingTable load_table(const std::filesystem::path& path, std::size_t dim = 300);
void save_table(const EmbeddingTable& table, const std::filesystem::path& path);

/// Lowercases and splits on whitespace and ASCII punctuation.
std::vector<std::string> tokenize(std::string_view text);

/// Mean of the token vectors (OOV contributes zeros). Empty list is a DomainError.
std::vector<double> embed_phrase(std::span<const std::string> tokens,
                                 const EmbeddingTable& table);
/// embed_phrase(tokenize(text)).
std::vector<double> embed_text(std::string_view text, const EmbeddingTable& table);

struct QuestionEncoderConfig {
  std::size_t word_dim = 300;
  std::size_t hidden_dim = 512;
  std::size_t max_len = 20;
  /// false: q is the state after all max_len (padded) steps;
  /// true: q is the state after the last real token.
  bool final_state_at_length = false;
};

struct QuestionEncoding {
  ad::Var hidden_states;  // max_len x hidden_dim
  ad::Var q;              // 1 x hidden_dim
  std::size_t length = 0;
};

/// LSTM over embedded question tokens, zero-padded to max_len.
class QuestionEncoder {
 public:
  explicit QuestionEncoder(QuestionEncoderConfig config, std::string prefix = "question.lstm");

  const QuestionEncoderConfig& config() const { return config_; }
  void add_params(ParameterSet& params, std::uint64_t seed) const;

  /// Embedded, truncated, zero-padded input rows (max_len x word_dim) and the
  /// number of real tokens. Empty token list is a DomainError.
  std::pair<Tensor, std::size_t> inputs(std::span<const std::string> tokens,
                                        const EmbeddingTable& table) const;

  QuestionEncoding encode(ad::Tape& tape, std::span<const std::string> tokens,
                          const EmbeddingTable& table, const ParameterSet& params) const;

 private:
  QuestionEncoderConfig config_;
  LstmCell cell_;
};

}  // namespace gruc
