// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "gruc/errors.hpp"
#include "gruc/layers.hpp"
#include "gruc/reasoning.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

namespace gruc {
namespace {

using testing::random_graph;
using testing::random_tensor;
using testing::row;

constexpr std::size_t kMem = 4, kEdge = 3, kHidden = 5, kQ = 3, kConcept = 4, kAtt = 3;

GrucStreamConfig stream_config(std::size_t steps, const std::string& prefix = "s") {
  GrucStreamConfig c;
  c.prefix = prefix;
  c.memory_dim = kMem;
  c.edge_dim = kEdge;
  c.hidden_dim = kHidden;
  c.question_dim = kQ;
  c.concept_dim = kConcept;
  c.attention_dim = kAtt;
  c.steps = steps;
  return c;
}

struct Inputs {
  Tensor q, concepts, context;
  ModalGraph graph;
  Neighborhood nb;
};

Inputs random_inputs(std::size_t n_concepts, std::size_t n_entries, std::mt19937_64& rng) {
  Inputs in;
  in.q = random_tensor(1, kQ, rng);
  in.concepts = random_tensor(n_concepts, kConcept, rng);
  in.context = random_tensor(n_concepts, kConcept, rng);
  in.graph = random_graph(n_entries, rng() % (2 * n_entries + 1), kMem, kEdge, rng);
  in.nb = neighborhood(in.graph, NeighborMode::kBoth, PairOrientation::kReceiverToNeighbor);
  return in;
}

oracle::Mat rows(const Tensor& t) { return oracle::to_mat(t); }

TEST(GrucStream, MatchesOracleOnRandomInputs) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    GrucStreamConfig cfg = stream_config(1 + rng() % 4);
    cfg.update_neighbor_agg = rng() % 2 == 0;
    cfg.output_read_vector = rng() % 2 == 0;
    const GrucStream stream(cfg);
    ParameterSet params;
    stream.add_params(params, trial);
    testing::randomize(params, rng);
    const Inputs in = random_inputs(1 + rng() % 3, 1 + rng() % 5, rng);

    ad::Tape tape;
    StreamTrace trace;
    const ad::Var out = stream.run(params, tape.constant(in.q), tape.constant(in.concepts),
                                   tape.constant(in.context),
                                   StreamMemory{tape.constant(in.graph.node_features), &in.nb},
                                   &trace);
    const auto ref = oracle::stream(params, "s", row(in.q, 0), rows(in.concepts), rows(in.context),
                                    rows(in.graph.node_features), &in.graph, cfg.steps,
                                    cfg.update_neighbor_agg);
    const oracle::Mat& expected = cfg.output_read_vector ? ref.c : ref.h;
    ASSERT_EQ(out.rows(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      for (std::size_t k = 0; k < expected[i].size(); ++k) {
        EXPECT_NEAR(out.value()(i, k), expected[i][k], 1e-9);
      }
    }
    EXPECT_EQ(trace.reads, ref.reads);
    EXPECT_EQ(trace.memory_updates, ref.updates);
    // Every step's read attention sums to 1 within each concept.
    ASSERT_EQ(trace.gamma.size(), cfg.steps);
    const std::size_t entries = in.graph.num_nodes();
    for (const Tensor& gamma : trace.gamma) {
      for (std::size_t i = 0; i < in.concepts.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < entries; ++j) s += gamma(i * entries + j, 0);
        EXPECT_NEAR(s, 1.0, 1e-6);
      }
    }
  }
}

TEST(GrucStream, ReadMatchesOracle) {
  std::mt19937_64 rng(22);
  const GrucStream stream(stream_config(1));
  for (int trial = 0; trial < 100; ++trial) {
    ParameterSet params;
    stream.add_params(params, 1);
    testing::randomize(params, rng);
    const std::size_t entries = 1 + rng() % 6;
    const Tensor h = random_tensor(1, kHidden, rng);
    const Tensor mem = random_tensor(entries, kMem, rng);
    ad::Tape tape;
    const auto [c, gamma] =
        stream.read(params, tape.constant(h), tape.constant(mem), ad::Index(entries, 0));
    const auto [rc, rg] = oracle::read(params, "s", row(h, 0), rows(mem));
    for (std::size_t k = 0; k < kMem; ++k) EXPECT_NEAR(c.value()(0, k), rc[k], 1e-9);
    for (std::size_t j = 0; j < entries; ++j) EXPECT_NEAR(gamma.value()(j, 0), rg[j], 1e-9);
  }
}

TEST(GrucStream, ReadSingleAndIdenticalEntries) {
  std::mt19937_64 rng(23);
  const GrucStream stream(stream_config(1));
  ParameterSet params;
  stream.add_params(params, 1);
  testing::randomize(params, rng);
  const Tensor h = random_tensor(1, kHidden, rng);
  const Tensor one = random_tensor(1, kMem, rng);
  ad::Tape tape;
  auto [c1, g1] = stream.read(params, tape.constant(h), tape.constant(one), ad::Index{0});
  EXPECT_DOUBLE_EQ(g1.value()(0, 0), 1.0);
  for (std::size_t k = 0; k < kMem; ++k) EXPECT_DOUBLE_EQ(c1.value()(0, k), one(0, k));

  Tensor same(3, kMem);
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < kMem; ++k) same(j, k) = one(0, k);
  }
  for (int t = 0; t < 3; ++t) {
    auto [c, g] = stream.read(params, tape.constant(random_tensor(1, kHidden, rng)),
                              tape.constant(same), ad::Index{0, 0, 0});
    for (std::size_t k = 0; k < kMem; ++k) EXPECT_NEAR(c.value()(0, k), one(0, k), 1e-12);
  }
}

TEST(GrucStream, UpdateMemoryStarGraph) {
  std::mt19937_64 rng(24);
  const GrucStream stream(stream_config(2));
  ParameterSet params;
  stream.add_params(params, 1);
  testing::randomize(params, rng);
  // Center 0 with leaves 1..4, plus isolated entry 5.
  ModalGraph g = random_graph(6, 4, kMem, kEdge, rng);
  g.edges = {{0, 1}, {2, 0}, {0, 3}, {4, 0}};
  const Neighborhood nb = neighborhood(g, NeighborMode::kBoth, PairOrientation::kReceiverToNeighbor);
  const Tensor h = random_tensor(1, kHidden, rng);
  ad::Tape tape;
  ad::Index edge(nb.size());
  for (std::uint32_t p = 0; p < nb.size(); ++p) edge[p] = p;
  const ad::Var next = stream.update_memory(params, tape.constant(g.node_features), tape.constant(h),
                                            ad::Index(6, 0), nb.receiver, nb.neighbor, edge,
                                            tape.constant(nb.pair_features));
  const auto ref = oracle::update(params, "s", rows(g.node_features), row(h, 0),
                                  oracle::neighbors(g, true, false), true);
  for (std::size_t j = 0; j < 6; ++j) {
    for (std::size_t k = 0; k < kMem; ++k) EXPECT_NEAR(next.value()(j, k), ref[j][k], 1e-9);
  }
  // The isolated entry sees only its own state and h.
  const auto alone = oracle::affine(params, "s.W11",
                                    oracle::cat(row(g.node_features, 5), oracle::Vec(kMem, 0.0), row(h, 0)));
  for (std::size_t k = 0; k < kMem; ++k) EXPECT_NEAR(next.value()(5, k), alone[k], 1e-12);
}

TEST(GrucStream, UpdateMemoryMatchesOracleOnRandomGraphs) {
  std::mt19937_64 rng(25);
  const GrucStream stream(stream_config(2));
  for (int trial = 0; trial < 100; ++trial) {
    ParameterSet params;
    stream.add_params(params, 1);
    testing::randomize(params, rng);
    const std::size_t n = 1 + rng() % 6;
    const ModalGraph g = random_graph(n, rng() % (2 * n + 1), kMem, kEdge, rng);
    const Neighborhood nb = neighborhood(g, NeighborMode::kBoth, PairOrientation::kReceiverToNeighbor);
    const Tensor h = random_tensor(1, kHidden, rng);
    ad::Index edge(nb.size());
    for (std::uint32_t p = 0; p < nb.size(); ++p) edge[p] = p;
    ad::Tape tape;
    const ad::Var next = stream.update_memory(
        params, tape.constant(g.node_features), tape.constant(h), ad::Index(n, 0), nb.receiver,
        nb.neighbor, edge, tape.constant(nb.size() ? nb.pair_features : Tensor(0, kEdge)));
    const auto ref = oracle::update(params, "s", rows(g.node_features), row(h, 0),
                                    oracle::neighbors(g, true, false), true);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < kMem; ++k) EXPECT_NEAR(next.value()(j, k), ref[j][k], 1e-9);
    }
  }
}

TEST(GruCell, ZeroWeightsHalveTheState) {
  const GruCell cell{"g", 3, 4};
  ParameterSet params;
  cell.add_params(params, 0);
  for (auto& [name, p] : params) p.value.fill(0.0);
  std::mt19937_64 rng(26);
  const Tensor h = random_tensor(2, 4, rng);
  ad::Tape tape;
  const ad::Var out = cell.step(params, tape.constant(h), tape.constant(random_tensor(2, 3, rng)));
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(out.value()[i], 0.5 * h[i]);
}

TEST(GruCell, MatchesOracleAndIsDeterministic) {
  const GruCell cell{"g", 3, 4};
  std::mt19937_64 rng(27);
  ParameterSet params;
  cell.add_params(params, 0);
  testing::randomize(params, rng);
  const Tensor h = random_tensor(1, 4, rng), x = random_tensor(1, 3, rng);
  ad::Tape tape;
  const Tensor a = cell.step(params, tape.constant(h), tape.constant(x)).value();
  const Tensor b = cell.step(params, tape.constant(h), tape.constant(x)).value();
  const auto ref = oracle::gru(params, "g", row(h, 0), row(x, 0));
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(a(0, k), ref[k], 1e-12);
    EXPECT_EQ(a(0, k), b(0, k));
  }
}

TEST(GrucStream, StepCountsFollowT) {
  std::mt19937_64 rng(28);
  for (std::size_t steps : {1u, 3u}) {
    const GrucStream stream(stream_config(steps));
    ParameterSet params;
    stream.add_params(params, 1);
    const Inputs in = random_inputs(2, 3, rng);
    ad::Tape tape;
    StreamTrace trace;
    stream.run(params, tape.constant(in.q), tape.constant(in.concepts), tape.constant(in.context),
               StreamMemory{tape.constant(in.graph.node_features), &in.nb}, &trace);
    EXPECT_EQ(trace.reads, steps);
    EXPECT_EQ(trace.control_updates, steps);
    EXPECT_EQ(trace.memory_updates, steps - 1);
  }
  EXPECT_THROW(GrucStream(stream_config(0)), DomainError);
}

TEST(GrucStream, ConceptsAreIsolated) {
  std::mt19937_64 rng(29);
  const GrucStream stream(stream_config(3));
  ParameterSet params;
  stream.add_params(params, 1);
  testing::randomize(params, rng);
  Inputs in = random_inputs(3, 4, rng);
  for (std::size_t k = 0; k < kConcept; ++k) {
    in.concepts(1, k) = in.concepts(0, k);
    in.context(1, k) = in.context(0, k);
  }
  auto run = [&](const Inputs& x) {
    ad::Tape tape;
    return stream
        .run(params, tape.constant(x.q), tape.constant(x.concepts), tape.constant(x.context),
             StreamMemory{tape.constant(x.graph.node_features), &x.nb})
        .value();
  };
  const Tensor base = run(in);
  for (std::size_t k = 0; k < kHidden; ++k) EXPECT_EQ(base(0, k), base(1, k));
  // Perturbing concept 2 leaves concepts 0 and 1 untouched.
  Inputs changed = in;
  for (std::size_t k = 0; k < kConcept; ++k) changed.concepts(2, k) += 1.0;
  const Tensor after = run(changed);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < kHidden; ++k) EXPECT_EQ(base(i, k), after(i, k));
  }
}

TEST(GrucStream, StreamsAreSymmetric) {
  std::mt19937_64 rng(30);
  const GrucStream va(stream_config(3, "va")), sb(stream_config(3, "sb"));
  ParameterSet params;
  va.add_params(params, 1);
  sb.add_params(params, 2);
  testing::randomize(params, rng);
  ParameterSet swapped = params;
  for (const auto& name : params.names()) {
    const std::string other = name.rfind("va.", 0) == 0 ? "sb." + name.substr(3) : "va." + name.substr(3);
    swapped.value(other) = params.value(name);
  }
  const Inputs x = random_inputs(2, 3, rng), y = random_inputs(2, 4, rng);
  auto run = [&](const GrucStream& s, const ParameterSet& p, const Inputs& mem) {
    ad::Tape tape;
    return s.run(p, tape.constant(x.q), tape.constant(x.concepts), tape.constant(x.context),
                 StreamMemory{tape.constant(mem.graph.node_features), &mem.nb})
        .value();
  };
  const Tensor v1 = run(va, params, x), s1 = run(sb, params, y);
  const Tensor v2 = run(va, swapped, y), s2 = run(sb, swapped, x);
  EXPECT_TRUE(std::ranges::equal(v1.values(), s2.values()));
  EXPECT_TRUE(std::ranges::equal(s1.values(), v2.values()));
}

TEST(GrucStream, DisabledStreamReadsZero) {
  std::mt19937_64 rng(31);
  GrucStreamConfig cfg = stream_config(3);
  const GrucStream stream(cfg);
  ParameterSet params;
  stream.add_params(params, 1);
  testing::randomize(params, rng);
  const Inputs in = random_inputs(2, 3, rng);
  ad::Tape tape;
  StreamTrace trace;
  const Tensor h = stream
                       .run(params, tape.constant(in.q), tape.constant(in.concepts),
                            tape.constant(in.context), std::nullopt, &trace)
                       .value();
  const auto ref = oracle::stream(params, "s", row(in.q, 0), rows(in.concepts), rows(in.context), {},
                                  nullptr, 3, true);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < kHidden; ++k) EXPECT_NEAR(h(i, k), ref.h[i][k], 1e-12);
  }
  EXPECT_EQ(trace.reads, 0u);
  cfg.output_read_vector = true;
  const Tensor c = GrucStream(cfg)
                       .run(params, tape.constant(in.q), tape.constant(in.concepts),
                            tape.constant(in.context), std::nullopt)
                       .value();
  for (double v : c.values()) EXPECT_EQ(v, 0.0);
}

TEST(NeighborSum, MatchesBruteForce) {
  std::mt19937_64 rng(32);
  ModalGraph g = random_graph(5, 0, 3, 0, rng);
  g.edge_features = Tensor(3, 0);
  g.edges = {{1, 0}, {0, 2}, {3, 0}};  // node 0 has three neighbors; node 4 none
  const Neighborhood nb = neighborhood(g, NeighborMode::kBoth, PairOrientation::kNeighborToReceiver);
  ad::Tape tape;
  const Tensor s = neighbor_sum(tape.constant(g.node_features), nb).value();
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(s(0, k), g.node_features(1, k) + g.node_features(2, k) + g.node_features(3, k), 1e-12);
    EXPECT_DOUBLE_EQ(s(1, k), g.node_features(0, k));
    EXPECT_EQ(s(4, k), 0.0);
  }
}

TEST(GrucStream, InitControlMatchesOracle) {
  std::mt19937_64 rng(33);
  const GrucStream stream(stream_config(1));
  ParameterSet params;
  stream.add_params(params, 1);
  testing::randomize(params, rng);
  const Inputs in = random_inputs(3, 2, rng);
  ad::Tape tape;
  const Tensor h = stream
                       .init_control(params, tape.constant(in.q), tape.constant(in.concepts),
                                     tape.constant(in.context))
                       .value();
  for (std::size_t i = 0; i < 3; ++i) {
    const auto ref = oracle::affine(params, "s.W8",
                                    oracle::cat(row(in.q, 0), row(in.concepts, i), row(in.context, i)));
    for (std::size_t k = 0; k < kHidden; ++k) EXPECT_NEAR(h(i, k), ref[k], 1e-12);
  }
}

TEST(GrucStream, GradientsThroughThreeSteps) {
  std::mt19937_64 rng(34);
  const GrucStream stream(stream_config(3));
  ParameterSet params;
  stream.add_params(params, 1);
  testing::randomize(params, rng);
  const Inputs in = random_inputs(2, 3, rng);
  ParameterSet all = params;
  all.set("in.memory", in.graph.node_features);
  all.set("in.concepts", in.concepts);
  const auto loss = testing::tape_loss([&](ad::Tape& tape, const ParameterSet& p) {
    return testing::probe(stream.run(p, tape.constant(in.q), tape.param(p, "in.concepts"),
                                     tape.constant(in.context),
                                     StreamMemory{tape.param(p, "in.memory"), &in.nb}));
  });
  const GradCheckReport report = testing::full_check(loss, all, 1e-4);
  EXPECT_TRUE(report.passed) << report.worst_param << " " << report.max_rel_error;
}

TEST(GrucStream, MemoryWidthMismatch) {
  std::mt19937_64 rng(35);
  const GrucStream stream(stream_config(2));
  ParameterSet params;
  stream.add_params(params, 1);
  const Inputs in = random_inputs(1, 2, rng);
  ad::Tape tape;
  EXPECT_THROW(stream.run(params, tape.constant(in.q), tape.constant(in.concepts),
                          tape.constant(in.context),
                          StreamMemory{tape.constant(random_tensor(2, kMem + 1, rng)), &in.nb}),
               DimensionError);
}

}  // namespace
}  // namespace gruc
