// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "gruc/embeddings.hpp"
#include "gruc/errors.hpp"
#include "gruc/log.hpp"
#include "test_util.hpp"

namespace gruc {
namespace {

namespace fs = std::filesystem;
using testing::probe;
using testing::random_tensor;
using testing::tape_loss;

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("gruc_emb_" + std::to_string(::getpid()) + "_" + name);
}

std::vector<double> ramp(std::size_t n, double start, double step) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = start + step * static_cast<double>(i);
  return v;
}

void write_rows(const fs::path& p, const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::ofstream out(p);
  out.precision(17);
  for (const auto& [tok, vec] : rows) {
    out << tok;
    for (double v : vec) out << ' ' << v;
    out << '\n';
  }
}

TEST(LoadTable, SingleRowRoundTrips) {
  const fs::path p = temp_file("one.txt");
  const auto cat = ramp(300, 0.1, 0.001);
  write_rows(p, {{"cat", cat}});
  const EmbeddingTable t = load_table(p);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.dim(), 300u);
  const auto got = t.lookup("cat");
  ASSERT_EQ(got.size(), 300u);
  EXPECT_TRUE(std::equal(got.begin(), got.end(), cat.begin()));
  fs::remove(p);
}

TEST(LoadTable, ShortRowReportsLineNumber) {
  const fs::path p = temp_file("short.txt");
  write_rows(p, {{"cat", ramp(300, 0, 1)}, {"dog", ramp(299, 0, 1)}});
  try {
    load_table(p);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("299"), std::string::npos);
  }
  fs::remove(p);
}

TEST(LoadTable, NonNumericValueIsParseError) {
  const fs::path p = temp_file("nan.txt");
  {
    std::ofstream out(p);
    out << "a 1 2 x\n";
  }
  EXPECT_THROW(load_table(p, 3), ParseError);
  fs::remove(p);
}

TEST(LoadTable, DuplicateTokenLastWins) {
  const fs::path p = temp_file("dup.txt");
  write_rows(p, {{"a", {1, 2}}, {"b", {3, 4}}, {"a", {5, 6}}});
  log::set_level(log::Level::kError);
  const EmbeddingTable t = load_table(p, 2);
  log::set_level(log::Level::kInfo);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.lookup("a")[0], 5.0);
  EXPECT_EQ(t.lookup("a")[1], 6.0);
  fs::remove(p);
}

TEST(LoadTable, SaveLoadIsBitExact) {
  std::mt19937_64 rng(3);
  EmbeddingTable t(7);
  for (int i = 0; i < 20; ++i) {
    Tensor r = random_tensor(1, 7, rng, -5, 5);
    t.insert("w" + std::to_string(i), std::vector<double>(r.values().begin(), r.values().end()));
  }
  const fs::path p = temp_file("rt.txt");
  save_table(t, p);
  const EmbeddingTable u = load_table(p, 7);
  ASSERT_EQ(u.size(), t.size());
  for (const auto& tok : t.tokens()) {
    const auto a = t.lookup(tok), b = u.lookup(tok);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << tok;
  }
  fs::remove(p);
}

TEST(EmbeddingTable, OovIsZeroAndCounted) {
  EmbeddingTable t(4);
  t.insert("x", {1, 2, 3, 4});
  EXPECT_THROW(t.insert("y", {1, 2}), DimensionError);
  const auto z = t.lookup("missing");
  EXPECT_TRUE(std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; }));
  EXPECT_EQ(t.lookups(), 1u);
  EXPECT_EQ(t.oov_lookups(), 1u);
}

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("What's the Red-car, used for?"),
            (std::vector<std::string>{"what", "s", "the", "red", "car", "used", "for"}));
  EXPECT_TRUE(tokenize("  ?!").empty());
}

class EmbedPhrase : public ::testing::Test {
 protected:
  EmbedPhrase() : table(3) {
    table.insert("red", {1, 2, 3});
    table.insert("car", {3, 0, -1});
    table.insert("big", {0.5, 0.5, 0.5});
  }
  EmbeddingTable table;
};

TEST_F(EmbedPhrase, SingleTokenIsItsVector) {
  const std::vector<std::string> toks{"red"};
  EXPECT_EQ(embed_phrase(toks, table), (std::vector<double>{1, 2, 3}));
}

TEST_F(EmbedPhrase, TwoTokensAverage) {
  const std::vector<std::string> toks{"red", "car"};
  EXPECT_EQ(embed_phrase(toks, table), (std::vector<double>{2, 1, 1}));
}

TEST_F(EmbedPhrase, AllOovIsZero) {
  const std::vector<std::string> toks{"zebra", "quux"};
  EXPECT_EQ(embed_phrase(toks, table), (std::vector<double>{0, 0, 0}));
}

TEST_F(EmbedPhrase, OovDilutesTheMean) {
  const std::vector<std::string> toks{"red", "zebra"};
  EXPECT_EQ(embed_phrase(toks, table), (std::vector<double>{0.5, 1, 1.5}));
}

TEST_F(EmbedPhrase, EmptyIsDomainError) {
  const std::vector<std::string> toks;
  EXPECT_THROW(embed_phrase(toks, table), DomainError);
  EXPECT_THROW(embed_text("...", table), DomainError);
}

TEST_F(EmbedPhrase, PermutationInvariant) {
  std::vector<std::string> toks{"red", "car", "big", "zebra", "red"};
  const auto ref = embed_phrase(toks, table);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(toks.begin(), toks.end(), rng);
    const auto got = embed_phrase(toks, table);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(got[i], ref[i], 1e-15);
  }
}

// ---- question encoder -------------------------------------------------------

EmbeddingTable word_table(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EmbeddingTable t(dim);
  for (const char* w : {"what", "is", "the", "cat", "on", "used", "for", "a", "b", "c"}) {
    Tensor r = random_tensor(1, dim, rng);
    t.insert(w, std::vector<double>(r.values().begin(), r.values().end()));
  }
  return t;
}

TEST(QuestionEncoder, ShortQuestionIsZeroPadded) {
  const EmbeddingTable table = word_table(300, 1);
  QuestionEncoder enc(QuestionEncoderConfig{});
  const std::vector<std::string> q{"what", "is", "cat"};
  auto [x, len] = enc.inputs(q, table);
  EXPECT_EQ(len, 3u);
  ASSERT_EQ(x.rows(), 20u);
  ASSERT_EQ(x.cols(), 300u);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto v = table.lookup(q[r]);
    EXPECT_TRUE(std::equal(v.begin(), v.end(), x.row_span(r).begin()));
  }
  for (std::size_t r = 3; r < 20; ++r) {
    for (double v : x.row_span(r)) ASSERT_EQ(v, 0.0) << "row " << r;
  }
}

TEST(QuestionEncoder, DefaultDimensions) {
  const EmbeddingTable table = word_table(300, 2);
  QuestionEncoder enc(QuestionEncoderConfig{});
  ParameterSet params;
  enc.add_params(params, 7);
  ad::Tape tape;
  const std::vector<std::string> q{"what", "is", "the", "cat", "on"};
  QuestionEncoding e = enc.encode(tape, q, table, params);
  EXPECT_EQ(e.q.rows(), 1u);
  EXPECT_EQ(e.q.cols(), 512u);
  EXPECT_EQ(e.hidden_states.rows(), 20u);
  EXPECT_EQ(e.hidden_states.cols(), 512u);
  EXPECT_EQ(e.length, 5u);
  EXPECT_TRUE(e.q.value().all_finite());
  // q is the state after the full padded sequence.
  const Tensor& hs = e.hidden_states.value();
  for (std::size_t c = 0; c < 512; ++c) EXPECT_EQ(e.q.value()(0, c), hs(19, c));
}

TEST(QuestionEncoder, LongQuestionTruncatedToTwenty) {
  const EmbeddingTable table = word_table(8, 3);
  QuestionEncoderConfig cfg{8, 6, 20, false};
  QuestionEncoder enc(cfg);
  ParameterSet params;
  enc.add_params(params, 11);
  std::vector<std::string> long_q;
  const char* words[] = {"what", "is", "the", "cat", "on"};
  for (int i = 0; i < 25; ++i) long_q.push_back(words[i % 5]);
  auto [x, len] = enc.inputs(long_q, table);
  EXPECT_EQ(len, 20u);
  EXPECT_EQ(x.rows(), 20u);

  // Tokens 21..25 never reach the recurrence: changing them changes nothing.
  std::vector<std::string> altered = long_q;
  for (std::size_t i = 20; i < 25; ++i) altered[i] = "used";
  ad::Tape t1, t2;
  const Tensor q1 = enc.encode(t1, long_q, table, params).q.value();
  const Tensor q2 = enc.encode(t2, altered, table, params).q.value();
  EXPECT_EQ(q1, q2);
}

TEST(QuestionEncoder, EmptyQuestionIsDomainError) {
  const EmbeddingTable table = word_table(8, 3);
  QuestionEncoder enc(QuestionEncoderConfig{8, 6, 20, false});
  ParameterSet params;
  enc.add_params(params, 1);
  ad::Tape tape;
  const std::vector<std::string> none;
  EXPECT_THROW(enc.encode(tape, none, table, params), DomainError);
}

TEST(QuestionEncoder, TableDimensionMismatch) {
  const EmbeddingTable table = word_table(5, 3);
  QuestionEncoder enc(QuestionEncoderConfig{8, 6, 20, false});
  const std::vector<std::string> q{"cat"};
  EXPECT_THROW(enc.inputs(q, table), DimensionError);
}

TEST(QuestionEncoder, Deterministic) {
  const EmbeddingTable table = word_table(8, 4);
  QuestionEncoder enc(QuestionEncoderConfig{8, 6, 20, false});
  ParameterSet params;
  enc.add_params(params, 5);
  const std::vector<std::string> q{"what", "is", "used", "for", "a"};
  ad::Tape t1, t2;
  EXPECT_EQ(enc.encode(t1, q, table, params).q.value(), enc.encode(t2, q, table, params).q.value());
}

TEST(QuestionEncoder, StateAtLengthFlag) {
  const EmbeddingTable table = word_table(8, 4);
  QuestionEncoder padded(QuestionEncoderConfig{8, 6, 10, false});
  QuestionEncoder at_len(QuestionEncoderConfig{8, 6, 10, true});
  ParameterSet params;
  padded.add_params(params, 5);
  const std::vector<std::string> q{"what", "is", "the"};
  ad::Tape t1, t2;
  QuestionEncoding a = padded.encode(t1, q, table, params);
  QuestionEncoding b = at_len.encode(t2, q, table, params);
  for (std::size_t c = 0; c < 6; ++c) {
    EXPECT_EQ(b.q.value()(0, c), b.hidden_states.value()(2, c));
    EXPECT_EQ(a.q.value()(0, c), a.hidden_states.value()(9, c));
  }
  EXPECT_FALSE(a.q.value() == b.q.value());
}

TEST(QuestionEncoder, GradientPassesCheck) {
  const EmbeddingTable table = word_table(4, 6);
  QuestionEncoder enc(QuestionEncoderConfig{4, 3, 6, false});
  ParameterSet params;
  enc.add_params(params, 9);
  const std::vector<std::string> q{"what", "is", "the", "cat"};
  auto f = tape_loss([&](ad::Tape& tape, const ParameterSet& p) {
    return probe(enc.encode(tape, q, table, p).q);
  });
  GradCheckOptions o;
  o.max_coords_per_param = 0;
  const GradCheckReport r = grad_check(f, params, o);
  EXPECT_TRUE(r.passed) << r.worst_param << " rel " << r.max_rel_error;
  EXPECT_LT(r.max_rel_error, 1e-4);
}

}  // namespace
}  // namespace gruc
