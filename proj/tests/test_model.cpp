// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dcaug/checkpoint.hpp"
#include "test_util.hpp"

namespace dcaug {
namespace {

using P = ClassifierParams<double>;

// Scalar-loop forward pass, independent of the Eigen path.
std::vector<double> forward_oracle(const P& p, const std::vector<double>& x) {
  const auto& s = p.shape();
  const double* w = p.flat().data();
  const double* b1 = w + s.hidden * s.inputs;
  const double* w2 = b1 + s.hidden;
  const double* b2 = w2 + s.classes * s.hidden;
  std::vector<double> h(s.hidden), out(s.classes);
  for (int i = 0; i < s.hidden; ++i) {
    double acc = b1[i];
    for (int j = 0; j < s.inputs; ++j) acc += w[j * s.hidden + i] * x[j];  // column-major
    h[i] = std::tanh(acc);
  }
  for (int k = 0; k < s.classes; ++k) {
    double acc = b2[k];
    for (int i = 0; i < s.hidden; ++i) acc += w2[i * s.classes + k] * h[i];
    out[k] = acc;
  }
  return out;
}

double loss_at(const P& p, const Eigen::VectorXd& x, int label) { return cross_entropy(forward<double>(p, x), label); }

TEST(Forward, ZeroParamsGiveZeroLogits) {
  const P p({12, 5, 3});
  const Eigen::VectorXd logits = forward<double>(p, Eigen::VectorXd::Random(12));
  EXPECT_TRUE(logits.isZero(0));
}

TEST(Forward, DeterministicAndMatchesScalarOracle) {
  const P p = init_classifier<double>({7, 4, 3}, 99);
  Rng rng(1);
  std::vector<double> xs(7);
  Eigen::VectorXd x(7);
  for (int i = 0; i < 7; ++i) x[i] = xs[static_cast<std::size_t>(i)] = rng.uniform(-1, 1);
  const Eigen::VectorXd a = forward<double>(p, x), b = forward<double>(p, x);
  EXPECT_EQ(a, b);
  const auto want = forward_oracle(p, xs);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[k], want[static_cast<std::size_t>(k)], 1e-6);
}

TEST(Forward, ShapeMismatchThrows) {
  const P p({4, 3, 2});
  EXPECT_THROW(forward<double>(p, Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST(Forward, ImageEncodingIsCentredUnitRange) {
  const Image img(2, 2, 255);
  const Eigen::VectorXf x = encode<float>(img);
  EXPECT_EQ(x.size(), 12);
  EXPECT_FLOAT_EQ(x.maxCoeff(), 0.5f);
}

TEST(CrossEntropy, Examples) {
  EXPECT_NEAR(cross_entropy(Eigen::VectorXd::Constant(5, 0.3), 2), std::log(5.0), 1e-12);
  Eigen::VectorXd sat = Eigen::VectorXd::Zero(4);
  sat[1] = 1000;
  EXPECT_LT(cross_entropy(sat, 1), 1e-6);
  // Direct softmax: -log(e^1 / (e^1 + e^2 + e^3)).
  const double want = -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)));
  EXPECT_NEAR(cross_entropy(Eigen::Vector3d(1, 2, 3), 0), want, 1e-12);
  EXPECT_NEAR(want, 2.40760596, 1e-8);
  EXPECT_THROW(cross_entropy(Eigen::Vector3d(1, 2, 3), 3), std::invalid_argument);
  EXPECT_THROW(cross_entropy(Eigen::Vector3d(1, 2, 3), -1), std::invalid_argument);
}

TEST(CrossEntropy, NonNegativeAndBoundedForUniform) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd z(6);
    for (int i = 0; i < 6; ++i) z[i] = rng.uniform(-50, 50);
    EXPECT_GE(cross_entropy(z, static_cast<int>(t % 6)), 0.0);
  }
}

class GradientCheck : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  const std::uint64_t seed = GetParam();
  P p = init_classifier<double>({10, 6, 4}, seed);
  Rng rng(seed + 100);
  for (Eigen::Index i = 0; i < p.flat().size(); ++i) p.flat()[i] += rng.uniform(-0.3, 0.3);  // non-zero biases too
  Eigen::VectorXd x(10);
  for (int i = 0; i < 10; ++i) x[i] = rng.uniform(-1, 1);
  const int label = static_cast<int>(seed % 4);
  const GradientBundle<double> g = backward<double>(p, x, label);
  const double h = 1e-4;
  for (int probe = 0; probe < 10; ++probe) {
    const auto k = static_cast<Eigen::Index>(rng.uniform_int(0, p.flat().size() - 1));
    P plus = p, minus = p;
    plus.flat()[k] += h;
    minus.flat()[k] -= h;
    const double fd = (loss_at(plus, x, label) - loss_at(minus, x, label)) / (2 * h);
    const double rel = std::abs(fd - g.flat()[k]) / std::max({std::abs(fd), std::abs(g.flat()[k]), 1e-8});
    EXPECT_LT(rel, 1e-4) << "coordinate " << k << " fd " << fd << " analytic " << g.flat()[k];
  }
}

INSTANTIATE_TEST_SUITE_P(Points, GradientCheck, ::testing::Values(1u, 2u, 3u));

TEST(Backward, FlatAtSaturatedMinimum) {
  P p({3, 2, 2});
  p.b2()[0] = 1000;  // saturated correct class
  const auto g = backward<double>(p, Eigen::Vector3d(0.1, -0.2, 0.3), 0);
  EXPECT_LT(g.flat().cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Backward, BatchGradientIsMeanOfPerSample) {
  const P p = init_classifier<double>({5, 4, 3}, 8);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 6);
  const std::vector<int> labels{0, 1, 2, 2, 1, 0};
  const auto batch = backward_batch<double>(p, x, labels);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p.flat().size());
  for (int j = 0; j < 6; ++j) mean += backward<double>(p, x.col(j), labels[static_cast<std::size_t>(j)]).flat();
  mean /= 6;
  EXPECT_LT((batch.flat() - mean).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_THROW(backward_batch<double>(p, Eigen::MatrixXd(5, 0), std::span<const int>{}), std::invalid_argument);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  P p = init_classifier<double>({4, 3, 2}, 1);
  const P before = p;
  AdamState<double> s(p.shape(), 0.01);
  s.m.setConstant(0.5);
  s.v.setConstant(0.25);
  adam_step(p, GradientBundle<double>(p.shape()), s);
  EXPECT_EQ(s.step, 1);
  EXPECT_TRUE((s.m.array() == 0.45).all());
  // Moments decay; parameters move only by the decayed first moment.
  AdamState<double> fresh(p.shape(), 0.01);
  P q = before;
  adam_step(q, GradientBundle<double>(q.shape()), fresh);
  EXPECT_EQ(q, before);
}

TEST(Adam, FirstStepClosedForm) {
  P p = init_classifier<double>({4, 3, 2}, 2);
  const P before = p;
  GradientBundle<double> g(p.shape());
  Rng rng(4);
  for (Eigen::Index i = 0; i < g.flat().size(); ++i) g.flat()[i] = rng.uniform(-2, 2);
  AdamState<double> s(p.shape(), 0.003);
  adam_step(p, g, s);
  for (Eigen::Index i = 0; i < g.flat().size(); ++i) {
    const double gi = g.flat()[i];
    const double want = -0.003 * gi / (std::abs(gi) + 1e-8);
    EXPECT_NEAR(p.flat()[i] - before.flat()[i], want, 1e-12);
  }
  EXPECT_THROW(adam_step(p, GradientBundle<double>({5, 3, 2}), s), std::invalid_argument);
}

TEST(Adam, DeterministicTrajectories) {
  auto run = [] {
    P p = init_classifier<double>({6, 4, 3}, 5);
    AdamState<double> s(p.shape(), 0.01);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(6, 3, 0.2);
    const std::vector<int> y{0, 1, 2};
    for (int i = 0; i < 20; ++i) adam_step(p, backward_batch<double>(p, x, y), s);
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(Ema, SingleUpdateArithmetic) {
  P src({2, 2, 2});
  src.flat().setOnes();
  P zero({2, 2, 2});
  EmaState<double> e(zero, 0.999);
  ema_update(e, src);
  EXPECT_NEAR(e.shadow.flat()[0], 0.001, 1e-15);
  EmaState<double> e0(zero, 0.0);
  ema_update(e0, src);
  EXPECT_EQ(e0.shadow, src);
  EXPECT_THROW(EmaState<double>(zero, 1.0), std::invalid_argument);
  EXPECT_THROW(ema_update(e, P({3, 2, 2})), std::invalid_argument);
}

TEST(Ema, GeometricSeriesClosedForm) {
  for (double beta : {0.0, 0.9, 0.999}) {
    P e0({3, 2, 2}), p({3, 2, 2});
    e0.flat().setLinSpaced(-1, 2);
    p.flat().setLinSpaced(4, -3);
    EmaState<double> e(e0, beta);
    for (int i = 0; i < 1000; ++i) ema_update(e, p);
    const double bn = std::pow(beta, 1000);
    const Eigen::VectorXd want = bn * e0.flat() + (1 - bn) * p.flat();
    EXPECT_LT((e.shadow.flat() - want).cwiseAbs().maxCoeff(), 1e-9) << beta;
  }
}

TEST(Ema, ShadowStaysInsideEnvelope) {
  P init = init_classifier<double>({3, 2, 2}, 1);
  EmaState<double> e(init, 0.9);
  Eigen::VectorXd lo = init.flat(), hi = init.flat();
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    P src(init.shape());
    for (Eigen::Index i = 0; i < src.flat().size(); ++i) src.flat()[i] = rng.uniform(-3, 3);
    lo = lo.cwiseMin(src.flat());
    hi = hi.cwiseMax(src.flat());
    ema_update(e, src);
    EXPECT_TRUE((e.shadow.flat().array() >= lo.array() - 1e-12).all());
    EXPECT_TRUE((e.shadow.flat().array() <= hi.array() + 1e-12).all());
  }
}

TEST(Training, SeparableToyDriveLossDown) {
  const int n = 64, d = 8;
  Rng rng(123);
  Eigen::MatrixXd x(d, n);
  std::vector<int> y(n);
  Eigen::VectorXd w(d);
  for (int i = 0; i < d; ++i) w[i] = rng.uniform(-1, 1);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) x(i, j) = rng.uniform(-1, 1);
    double m = w.dot(x.col(j));
    if (std::abs(m) < 0.2) x.col(j) += (m < 0 ? -0.3 : 0.3) * w / w.norm(), m = w.dot(x.col(j));  // margin
    y[static_cast<std::size_t>(j)] = m > 0 ? 1 : 0;
  }
  P p = init_classifier<double>({d, 16, 2}, 7);
  AdamState<double> s(p.shape(), 0.02);
  for (int t = 0; t < 200; ++t) adam_step(p, backward_batch<double>(p, x, y), s);
  const auto act = forward_batch<double>(p, x);
  EXPECT_LT(cross_entropy_batch<double>(act.logits, y).mean(), 0.1);
}

TEST(Checkpoint, RoundTripAndValidation) {
  const Classifier p = init_classifier<float>({12, 5, 3}, 4);
  std::stringstream buf;
  write_checkpoint(buf, p);
  EXPECT_EQ(buf.str().size(), 4u + 4 * 4 + 8 + 4 * static_cast<std::size_t>(p.flat().size()));
  EXPECT_EQ(buf.str().substr(0, 4), "DCCK");
  EXPECT_EQ(read_checkpoint(buf), p);
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_checkpoint(bad), std::runtime_error);
  std::string truncated = [&] {
    std::stringstream b;
    write_checkpoint(b, p);
    return b.str().substr(0, 40);
  }();
  std::stringstream t(truncated);
  EXPECT_THROW(read_checkpoint(t), std::runtime_error);
}

TEST(Checksum, DetectsChanges) {
  Classifier p = init_classifier<float>({4, 3, 2}, 1);
  const auto c = checksum(p);
  EXPECT_EQ(c, checksum(p));
  p.flat()[3] += 1e-3f;
  EXPECT_NE(c, checksum(p));
}

}  // namespace
}  // namespace dcaug
