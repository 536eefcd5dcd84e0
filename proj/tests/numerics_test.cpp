// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <numbers>

#include "gruc/autodiff.hpp"
#include "gruc/checkpoint.hpp"
#include "gruc/errors.hpp"
#include "gruc/gradcheck.hpp"
#include "gruc/kernels.hpp"
#include "gruc/layers.hpp"
#include "gruc/optim.hpp"
#include "test_util.hpp"

namespace gruc {
namespace {

using testing::full_check;
using testing::probe;
using testing::random_tensor;
using testing::tape_loss;

// ---- kernels ---------------------------------------------------------------

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {};

TEST_P(KernelEquivalence, VectorVariantsMatchScalar) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(n + 1);
  Tensor a = random_tensor(1, n, rng), b = random_tensor(1, n, rng);
  const kernels::KernelTable& ref = kernels::scalar_table();
  for (const kernels::KernelTable* t : {kernels::avx2_table(), kernels::neon_table()}) {
    if (t == nullptr) continue;
    SCOPED_TRACE(std::string(kernels::isa_name(t->isa)));
    const double d_ref = ref.dot(a.data(), b.data(), n);
    EXPECT_NEAR(t->dot(a.data(), b.data(), n), d_ref, 1e-12 * (1.0 + std::abs(d_ref)));

    Tensor y_ref = b, y = b;
    ref.axpy(0.37, a.data(), y_ref.data(), n);
    t->axpy(0.37, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], y_ref[i], 1e-14);

    Tensor z_ref = a, z = a;
    ref.mul_add(a.data(), b.data(), z_ref.data(), n);
    t->mul_add(a.data(), b.data(), z.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(z[i], z_ref[i], 1e-14);
  }
}

// Lengths straddle every unroll boundary of the vector loops.
INSTANTIATE_TEST_SUITE_P(Lengths, KernelEquivalence,
                         ::testing::Values(0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 31, 64, 301));

TEST(Kernels, SelectSwitchesActiveTable) {
  const kernels::Isa before = kernels::active().isa;
  kernels::select(kernels::Isa::kScalar);
  EXPECT_EQ(kernels::active().isa, kernels::Isa::kScalar);
  kernels::select(before);
}

TEST(Kernels, MatmulMatchesNaiveLoop) {
  std::mt19937_64 rng(5);
  Tensor x = random_tensor(3, 7, rng), w = random_tensor(5, 7, rng);
  Tensor y(3, 5);
  kernels::matmul_nt(x.data(), 3, 7, w.data(), 5, y.data());
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t o = 0; o < 5; ++o) {
      double s = 0.0;
      for (std::size_t k = 0; k < 7; ++k) s += x(r, k) * w(o, k);
      EXPECT_NEAR(y(r, o), s, 1e-12);
    }
  }
}

// ---- linear ----------------------------------------------------------------

TEST(Linear, IdentityWeight) {
  ParameterSet p;
  p.set("id.W", Tensor::matrix({{1, 0}, {0, 1}}));
  ad::Tape t;
  ad::Var y = dense(p, "id", t.constant(Tensor::row({1, 2})));
  EXPECT_EQ(y.value(), Tensor::row({1, 2}));
}

TEST(Linear, ZeroWeight) {
  ParameterSet p;
  p.set("z.W", Tensor(3, 2));
  ad::Tape t;
  ad::Var y = dense(p, "z", t.constant(Tensor::row({4, -7})));
  EXPECT_EQ(y.value(), Tensor(1, 3));
}

TEST(Linear, HandProduct) {
  ParameterSet p;
  p.set("s.W", Tensor::matrix({{1, 1}}));
  ad::Tape t;
  ad::Var y = dense(p, "s", t.constant(Tensor::row({2, 3})));
  ASSERT_EQ(y.value().size(), 1u);
  EXPECT_DOUBLE_EQ(y.value()[0], 5.0);
}

TEST(Linear, MismatchNamesParameter) {
  ParameterSet p;
  p.set("enc.W", Tensor(2, 3));
  ad::Tape t;
  try {
    dense(p, "enc", t.constant(Tensor::row({1, 2})));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("enc.W"), std::string::npos);
  }
}

// ---- softmax ---------------------------------------------------------------

TEST(Softmax, Symmetric) {
  auto s = ad::softmax_values(std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
}

TEST(Softmax, Singleton) {
  EXPECT_DOUBLE_EQ(ad::softmax_values(std::vector<double>{-3.2})[0], 1.0);
}

TEST(Softmax, HandEvaluation) {
  auto s = ad::softmax_values(std::vector<double>{std::log(2.0), 0.0});
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, EmptyIsDomainError) {
  EXPECT_THROW(ad::softmax_values(std::vector<double>{}), DomainError);
  ad::Tape t;
  EXPECT_THROW(ad::softmax(t.constant(Tensor(0, 1))), DomainError);
}

TEST(Softmax, PropertiesOverRandomLogits) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    Tensor v = random_tensor(1, n, rng, -30.0, 30.0);
    auto s = ad::softmax_values(v.values());
    double sum = 0.0;
    for (double x : s) {
      EXPECT_GT(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (double& x : v.values()) x += 123.4;
    auto shifted = ad::softmax_values(v.values());
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(shifted[i], s[i], 1e-12);
  }
}

TEST(Softmax, SegmentsNormalizeIndependently) {
  ad::Tape t;
  ad::Var s = t.constant(Tensor(5, 1, {1.0, 2.0, 0.5, -1.0, 3.0}));
  ad::Var out = ad::softmax_segments(s, {0, 1, 0, 1, 1}, 2);
  const Tensor& o = out.value();
  EXPECT_NEAR(o[0] + o[2], 1.0, 1e-15);
  EXPECT_NEAR(o[1] + o[3] + o[4], 1.0, 1e-15);
  EXPECT_NEAR(o[0] / o[2], std::exp(0.5), 1e-12);
}

// ---- gru cell ----------------------------------------------------------------

ParameterSet zero_gru(const GruCell& cell) {
  ParameterSet p;
  cell.add_params(p, 1);
  for (auto& [_, param] : p) param.value.fill(0.0);
  return p;
}

TEST(GruCell, ZeroWeightsHalveState) {
  GruCell cell{"g", 3, 4};
  ParameterSet p = zero_gru(cell);
  ad::Tape t;
  Tensor h = Tensor::row({0.2, -1.0, 3.0, 0.7});
  ad::Var out = cell.step(p, t.constant(h), t.constant(Tensor::row({5, 6, 7})));
  ASSERT_EQ(out.cols(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out.value()[i], 0.5 * h[i]);
}

TEST(GruCell, FixedPointWhenCandidateEqualsState) {
  // With all W/U zero the candidate is tanh(bh); choose h = tanh(bh).
  GruCell cell{"g", 2, 2};
  ParameterSet p = zero_gru(cell);
  p.value("g.bh") = Tensor::row({0.3, -0.8});
  p.value("g.bz") = Tensor::row({1.7, -2.2});  // arbitrary z
  Tensor h = Tensor::row({std::tanh(0.3), std::tanh(-0.8)});
  ad::Tape t;
  ad::Var out = cell.step(p, t.constant(h), t.constant(Tensor::row({1, 1})));
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(out.value()[i], h[i], 1e-15);
}

TEST(GruCell, SaturatedUpdateGateYieldsCandidate) {
  GruCell cell{"g", 2, 3};
  std::mt19937_64 rng(3);
  ParameterSet p;
  cell.add_params(p, 3);
  p.value("g.bz") = Tensor(1, 3, 40.0);
  Tensor h = random_tensor(1, 3, rng), x = random_tensor(1, 2, rng);
  ad::Tape t;
  ad::Var out = cell.step(p, t.constant(h), t.constant(x));
  // Independent candidate: tanh(Wh x + Uh (r*h) + bh).
  const Tensor& wr = p.value("g.Wr");
  const Tensor& ur = p.value("g.Ur");
  const Tensor& wh = p.value("g.Wh");
  const Tensor& uh = p.value("g.Uh");
  std::vector<double> rh(3);
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0;
    for (std::size_t k = 0; k < 2; ++k) s += wr(i, k) * x[k];
    for (std::size_t k = 0; k < 3; ++k) s += ur(i, k) * h[k];
    rh[i] = ad::sigmoid_value(s) * h[i];
  }
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0;
    for (std::size_t k = 0; k < 2; ++k) s += wh(i, k) * x[k];
    for (std::size_t k = 0; k < 3; ++k) s += uh(i, k) * rh[k];
    EXPECT_NEAR(out.value()[i], std::tanh(s), 1e-12);
  }
}

TEST(GruCell, DimensionMismatchThrows) {
  GruCell cell{"g", 2, 3};
  ParameterSet p = zero_gru(cell);
  ad::Tape t;
  EXPECT_THROW(cell.step(p, t.constant(Tensor(1, 2)), t.constant(Tensor(1, 2))),
               DimensionError);
}

// ---- dropout ---------------------------------------------------------------

TEST(Dropout, IdentityOutsideTraining) {
  ad::Tape t;
  std::mt19937_64 rng(1);
  ad::Var x = t.constant(Tensor::row({1, 2, 3}));
  EXPECT_EQ(ad::dropout(x, 0.5, false, rng).value(), x.value());
  EXPECT_EQ(ad::dropout(x, 0.0, true, rng).value(), x.value());
}

TEST(Dropout, SeededMaskIsReproducible) {
  auto run = [] {
    ad::Tape t;
    std::mt19937_64 rng(42);
    return ad::dropout(t.constant(Tensor(4, 16, 1.0)), 0.5, true, rng).value();
  };
  const Tensor a = run();
  EXPECT_EQ(a, run());
  for (double v : a.values()) EXPECT_TRUE(v == 0.0 || v == 2.0);
}

TEST(Dropout, RateOutOfRange) {
  ad::Tape t;
  std::mt19937_64 rng(1);
  EXPECT_THROW(ad::dropout(t.constant(Tensor(1, 2)), 1.0, true, rng), DomainError);
  EXPECT_THROW(ad::dropout(t.constant(Tensor(1, 2)), -0.1, true, rng), DomainError);
}

// ---- adam ------------------------------------------------------------------

TEST(Adam, ZeroGradientLeavesParameters) {
  ParameterSet p;
  p.set("w", Tensor::row({0.5, -2.0}));
  AdamState s;
  adam_step(p, s, 1e-3);
  EXPECT_EQ(p.value("w"), Tensor::row({0.5, -2.0}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterSet p;
  p.set("w", Tensor::row({1.0}));
  p.at("w").grad = Tensor::row({0.1});
  AdamState s;
  adam_step(p, s, 1e-3);
  // m_hat = 0.1, v_hat = 0.01 -> step = lr * 0.1 / (0.1 + 1e-8)
  EXPECT_NEAR(1.0 - p.value("w")[0], 1e-3 * 0.1 / (0.1 + 1e-8), 1e-15);
  EXPECT_NEAR(1.0 - p.value("w")[0], 1e-3, 1e-9);
}

TEST(Adam, RepeatedGradientMovesMonotonically) {
  ParameterSet p;
  p.set("w", Tensor::row({0.0}));
  AdamState s;
  double prev = 0.0;
  for (int i = 0; i < 2; ++i) {
    p.at("w").grad = Tensor::row({-0.3});
    adam_step(p, s, 1e-3);
    EXPECT_GT(p.value("w")[0], prev);
    prev = p.value("w")[0];
  }
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  ParameterSet p;
  p.set("layer.W", Tensor::row({1.0}));
  p.at("layer.W").grad = Tensor::row({std::nan("")});
  AdamState s;
  try {
    adam_step(p, s, 1e-3);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("layer.W"), std::string::npos);
  }
  EXPECT_EQ(p.value("layer.W")[0], 1.0);
}

// ---- schedule ----------------------------------------------------------------

TEST(LrSchedule, Anchors) {
  LrSchedule s;
  EXPECT_NEAR(s.lr_at(0.0), 2.0e-4, 1e-18);
  EXPECT_EQ(s.lr_at(2.0), 1.0e-3);
  EXPECT_EQ(s.lr_at(10.0), 3.6e-4);
}

TEST(LrSchedule, RangeAndContinuity) {
  LrSchedule s;
  for (int i = 0; i <= 1000; ++i) {
    const double e = 10.0 * i / 1000.0;
    const double lr = s.lr_at(e);
    if (e <= 2.0) {
      EXPECT_GE(lr, 0.2e-3 - 1e-18);
      EXPECT_LE(lr, 1e-3);
    } else {
      EXPECT_GE(lr, 3.6e-4);
      EXPECT_LE(lr, 1e-3);
    }
  }
  EXPECT_NEAR(s.lr_at(std::nextafter(2.0, 3.0)), s.lr_at(2.0), 1e-12);
  EXPECT_NEAR(s.lr_at(std::nextafter(2.0, 1.0)), s.lr_at(2.0), 1e-12);
  // Midpoint of the cosine phase is the average of the endpoints.
  EXPECT_NEAR(s.lr_at(6.0), 0.5 * (1e-3 + 3.6e-4), 1e-18);
}

TEST(LrSchedule, OutOfRangeEpoch) {
  LrSchedule s;
  EXPECT_THROW(s.lr_at(-0.1), DomainError);
  EXPECT_THROW(s.lr_at(10.5), DomainError);
}

// ---- gradient oracle ---------------------------------------------------------

TEST(GradCheck, QuadraticMatchesKnownGradient) {
  ParameterSet p;
  std::mt19937_64 rng(2);
  p.set("theta", random_tensor(1, 6, rng));
  auto f = tape_loss([](ad::Tape& t, const ParameterSet& ps) {
    ad::Var th = t.param(ps, "theta");
    return ad::sum_all(ad::mul(th, th));
  });
  GradCheckReport r = full_check(f, p, 1e-8);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(p.at("theta").grad[i], 2.0 * p.value("theta")[i]);
  }
}

TEST(GradCheck, UnusedParameterHasZeroGradient) {
  ParameterSet p;
  p.set("used", Tensor::row({1.5}));
  p.set("unused", Tensor::row({2.0, 3.0}));
  auto f = tape_loss([](ad::Tape& t, const ParameterSet& ps) {
    ad::Var u = t.param(ps, "used");
    return ad::sum_all(ad::mul(u, u));
  });
  GradCheckReport r = full_check(f, p);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(p.at("unused").grad, Tensor(1, 2));
}

TEST(GradCheck, NonDeterministicLossAborts) {
  ParameterSet p;
  p.set("w", Tensor::row({1.0}));
  int calls = 0;
  LossAndGrad f = [&calls](ParameterSet&, bool) { return static_cast<double>(++calls); };
  EXPECT_THROW(grad_check(f, p), DataError);
}

// Every op's backward against central differences.
TEST(GradCheck, EveryOpBackward) {
  std::mt19937_64 rng(17);
  ParameterSet p;
  p.set("x", random_tensor(4, 3, rng));
  p.set("w", random_tensor(5, 3, rng));
  p.set("b", random_tensor(1, 5, rng));
  p.set("y", random_tensor(4, 5, rng));
  p.set("s", random_tensor(4, 1, rng));
  p.set("v", random_tensor(1, 3, rng));
  auto f = tape_loss([](ad::Tape& t, const ParameterSet& ps) {
    ad::Var x = t.param(ps, "x"), w = t.param(ps, "w"), b = t.param(ps, "b");
    ad::Var y = t.param(ps, "y"), s = t.param(ps, "s"), v = t.param(ps, "v");
    ad::Var lin = ad::linear(x, w, b);                     // 4x5
    ad::Var h = ad::mul(ad::tanh(lin), ad::sigmoid(y));    // 4x5
    ad::Var r = ad::relu(ad::sub(h, ad::affine(y, 0.3, 0.1)));
    ad::Var cat = ad::concat_cols({r, x});                 // 4x8
    ad::Var sl = ad::slice_cols(cat, 2, 5);                // 4x5
    ad::Var g = ad::gather_rows(sl, {3, 0, 0, 2, 1});      // 5x5
    ad::Var sc = ad::scatter_add_rows(g, {1, 1, 0, 2, 0}, 3);
    ad::Var att = ad::softmax_segments(s, {0, 1, 0, 1}, 2);
    ad::Var weighted = ad::mul_rows(x, att);
    ad::Var vb = ad::broadcast_rows(v, 4);
    ad::Var mean = ad::mean_rows(ad::add(weighted, vb));
    ad::Var sm = ad::softmax(mean);
    ad::Var stacked = ad::concat_rows(std::vector<ad::Var>{sm, v});
    ad::Var logits = ad::slice_cols(ad::gather_rows(lin, {2}), 0, 4);
    return ad::add(ad::add(ad::add(probe(sc), probe(stacked, 7)),
                           ad::softmax_cross_entropy(logits, 1)),
                   probe(ad::add(lin, b), 3));
  });
  GradCheckReport r = full_check(f, p, 1e-6);
  EXPECT_TRUE(r.passed) << r.worst_param << "[" << r.worst_index << "] " << r.max_rel_error;
}

TEST(GradCheck, WeightedBceBackward) {
  std::mt19937_64 rng(4);
  ParameterSet p;
  p.set("logit", random_tensor(5, 1, rng, -2.0, 2.0));
  std::vector<double> labels{0, 1, 0, 0, 0};
  auto f = tape_loss([labels](ad::Tape& t, const ParameterSet& ps) {
    return ad::weighted_bce(ad::sigmoid(t.param(ps, "logit")), labels, 0.7, 0.3, 1e-7);
  });
  EXPECT_TRUE(full_check(f, p).passed);
}

TEST(GradCheck, GruAndLstmBackward) {
  GruCell gru{"gru", 3, 4};
  LstmCell lstm{"lstm", 3, 4};
  ParameterSet p;
  gru.add_params(p, 8);
  lstm.add_params(p, 9);
  std::mt19937_64 rng(8);
  for (auto& [name, param] : p) param.value = random_tensor(param.value.rows(),
                                                             param.value.cols(), rng);
  p.set("x", random_tensor(2, 3, rng));
  p.set("h", random_tensor(2, 4, rng));
  auto f = tape_loss([&](ad::Tape& t, const ParameterSet& ps) {
    ad::Var x = t.param(ps, "x");
    ad::Var h = gru.step(ps, t.param(ps, "h"), x);
    ad::Var lh = t.constant(Tensor(1, 4)), lc = t.constant(Tensor(1, 4));
    lstm.step(ps, ad::gather_rows(x, {0}), lh, lc);
    lstm.step(ps, ad::gather_rows(x, {1}), lh, lc);
    return ad::add(probe(h), probe(lh, 5));
  });
  GradCheckReport r = full_check(f, p, 1e-6);
  EXPECT_TRUE(r.passed) << r.worst_param << " " << r.max_rel_error << " a=" << r.worst_analytic << " n=" << r.worst_numeric;
}

TEST(Tape, ReplayIsBitIdentical) {
  auto run = [] {
    std::mt19937_64 rng(77);
    ParameterSet p;
    GruCell cell{"c", 4, 4};
    cell.add_params(p, 77);
    ad::Tape t;
    ad::Var h = t.constant(random_tensor(3, 4, rng));
    for (int i = 0; i < 3; ++i) h = cell.step(p, h, ad::dropout(h, 0.5, true, rng));
    ad::Var loss = probe(h);
    t.backward(loss);
    p.zero_grad();
    t.accumulate_param_grads(p);
    return std::make_pair(h.value(), p.at("c.Uz").grad);
  };
  EXPECT_EQ(run(), run());
}

// ---- checkpoint ---------------------------------------------------------------

TEST(Checkpoint, RoundTripPreservesEveryField) {
  Checkpoint c;
  c.seed = 1234;
  c.metadata = R"({"model":"tiny"})";
  std::mt19937_64 rng(1);
  c.params.set("a.W", random_tensor(3, 2, rng));
  c.params.set("b", random_tensor(1, 4, rng));
  c.adam.step = 9;
  c.adam.moments.emplace("a.W", AdamMoments{random_tensor(3, 2, rng), random_tensor(3, 2, rng)});
  c.schedule_epoch = 3.25;
  c.global_step = 40;
  std::ostringstream rs;
  rs << rng;
  c.rng_state = rs.str();

  const auto path = std::filesystem::temp_directory_path() / "gruc_ckpt_test.bin";
  save_checkpoint(c, path);
  Checkpoint d = load_checkpoint(path);
  EXPECT_EQ(d.seed, c.seed);
  EXPECT_EQ(d.metadata, c.metadata);
  EXPECT_EQ(d.params.value("a.W"), c.params.value("a.W"));
  EXPECT_EQ(d.params.value("b"), c.params.value("b"));
  EXPECT_EQ(d.adam.step, 9);
  EXPECT_EQ(d.adam.moments.at("a.W").v, c.adam.moments.at("a.W").v);
  EXPECT_EQ(d.schedule_epoch, 3.25);
  EXPECT_EQ(d.global_step, 40);
  EXPECT_EQ(d.rng_state, c.rng_state);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsGarbage) {
  const auto path = std::filesystem::temp_directory_path() / "gruc_ckpt_garbage.bin";
  {
    std::ofstream out(path);
    out << "not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint(path), DataError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace gruc
