// Copyright 2026 The handmimic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "handmimic/nn.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"

namespace handmimic::nn {
namespace {

using testing::CentralDifference;
using testing::RelativeError;

TEST(Mlp, ZeroParametersGiveZeroOutput) {
  Mlp<double> net({4, 8, 3});
  EXPECT_TRUE(net.forward(Eigen::MatrixXd::Random(4, 5)).isZero());
}

TEST(Mlp, IdentityLinearLayerIsIdentity) {
  Mlp<double> net({3, 3}, Activation::kLinear);
  net.weight(0) = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
  EXPECT_EQ(net.forward(x), x);
}

TEST(Mlp, ForwardIsPure) {
  Mlp<double> net({5, 16, 16, 2});
  net.init(InitScheme::kUniformFanIn, 3);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 7);
  const Eigen::MatrixXd a = net.forward(x);
  const Eigen::MatrixXd b = net.forward(x);
  EXPECT_EQ(a, b);
  Mlp<double>::Tape tape;
  EXPECT_EQ(net.forward(x, tape), a);
}

TEST(Mlp, WrongInputRowsIsShapeError) {
  Mlp<double> net({5, 4, 2});
  EXPECT_THROW(net.forward(Eigen::MatrixXd::Zero(4, 1)), ShapeError);
  EXPECT_THROW(Mlp<double>({5}), ShapeError);
  EXPECT_THROW(Mlp<double>({5, 0, 2}), ShapeError);
}

TEST(Mlp, LinearLayerHalfSquaredNormGradient) {
  // L = 0.5 |W x + b|^2 gives dL/dW = y x^T and dL/db = y.
  Mlp<double> net({4, 3}, Activation::kLinear);
  net.init(InitScheme::kUniformFanIn, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 1);
  Mlp<double>::Tape tape;
  const Eigen::MatrixXd y = net.forward(x, tape);
  Eigen::VectorXd grad;
  net.backward(tape, y, grad);
  const Eigen::Map<const Eigen::MatrixXd> gw(grad.data(), 3, 4);
  EXPECT_LT((gw - y * x.transpose()).norm(), 1e-15);
  EXPECT_LT((grad.tail(3) - y).norm(), 1e-15);
}

TEST(Mlp, ConstantLossHasZeroGradient) {
  Mlp<double> net({4, 6, 2});
  net.init(InitScheme::kOrthogonal, 2);
  Mlp<double>::Tape tape;
  net.forward(Eigen::MatrixXd::Random(4, 3), tape);
  Eigen::VectorXd grad;
  const Eigen::MatrixXd dx = net.backward(tape, Eigen::MatrixXd::Zero(2, 3), grad);
  EXPECT_TRUE(grad.isZero());
  EXPECT_TRUE(dx.isZero());
}

class MlpGradient : public ::testing::TestWithParam<Activation> {};

TEST_P(MlpGradient, ParametersAndInputsMatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int draw = 0; draw < 10; ++draw) {
    Mlp<double> net({6, 10, 7, 3}, GetParam());
    net.init(InitScheme::kUniformFanIn, rng());
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 4);
    const Eigen::MatrixXd w = Eigen::MatrixXd::Random(3, 4);
    auto loss = [&](const Mlp<double>& m, const Eigen::MatrixXd& in) {
      return (m.forward(in).array() * w.array()).sum();
    };
    Mlp<double>::Tape tape;
    net.forward(x, tape);
    Eigen::VectorXd grad;
    const Eigen::MatrixXd dx = net.backward(tape, w, grad);

    const Eigen::VectorXd numeric = CentralDifference(net.params(), [&](const Eigen::VectorXd& p) {
      Mlp<double> m = net;
      m.params() = p;
      return loss(m, x);
    });
    EXPECT_LT(RelativeError(grad, numeric), 1e-4);

    Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
    const Eigen::VectorXd numeric_x = CentralDifference(flat, [&](const Eigen::VectorXd& v) {
      return loss(net, Eigen::Map<const Eigen::MatrixXd>(v.data(), 6, 4));
    });
    EXPECT_LT(RelativeError(Eigen::Map<const Eigen::VectorXd>(dx.data(), dx.size()), numeric_x), 1e-4);
  }
}

INSTANTIATE_TEST_SUITE_P(Activations, MlpGradient,
                         ::testing::Values(Activation::kTanh, Activation::kLinear));

TEST(Mlp, OrthogonalInitHasOrthonormalColumnsTimesGain) {
  Mlp<double> net({8, 32, 16, 4});
  net.init(InitScheme::kOrthogonal, 5, std::sqrt(2.0), 0.01);
  // Tall 32x8: W^T W = gain^2 I. Wide layers: W W^T = gain^2 I.
  const Eigen::MatrixXd w0 = net.weight(0);
  EXPECT_LT((w0.transpose() * w0 - 2.0 * Eigen::MatrixXd::Identity(8, 8)).norm(), 1e-6);
  const Eigen::MatrixXd w1 = net.weight(1);
  EXPECT_LT((w1 * w1.transpose() - 2.0 * Eigen::MatrixXd::Identity(16, 16)).norm(), 1e-6);
  const Eigen::MatrixXd w2 = net.weight(2);
  EXPECT_LT((w2 * w2.transpose() - 1e-4 * Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-6);
  EXPECT_TRUE(net.bias(0).isZero());
}

TEST(Mlp, InitIsSeeded) {
  Mlp<double> a({6, 12, 2}), b({6, 12, 2}), c({6, 12, 2});
  a.init(InitScheme::kOrthogonal, 9);
  b.init(InitScheme::kOrthogonal, 9);
  c.init(InitScheme::kOrthogonal, 10);
  EXPECT_EQ(a.params(), b.params());
  EXPECT_NE(a.params(), c.params());
  a.init(InitScheme::kUniformFanIn, 9);
  EXPECT_LE(a.weight(0).cwiseAbs().maxCoeff(), 1.0 / std::sqrt(6.0));
}

TEST(Mlp, JsonRoundTrip) {
  Mlp<double> net({3, 5, 2}, Activation::kRelu);
  net.init(InitScheme::kUniformFanIn, 4);
  const Mlp<double> back = Mlp<double>::from_json(net.to_json());
  EXPECT_EQ(back.params(), net.params());
  EXPECT_EQ(back.activation(), Activation::kRelu);
  EXPECT_THROW(activation_from_string("gelu"), ConfigError);
}

TEST(Gaussian, StandardNormalAtMode) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  const LogProbEntropy r = gaussian_logprob_entropy<double>(zero, zero, zero);
  EXPECT_NEAR(r.log_prob, -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(r.log_prob, -0.9189, 1e-4);
  EXPECT_NEAR(r.entropy, 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e), 1e-15);
  EXPECT_NEAR(r.entropy, 1.4189, 1e-4);
}

TEST(Gaussian, EntropyIncreasesWithLogStd) {
  const Eigen::VectorXd m = Eigen::VectorXd::Zero(3);
  double prev = -1e300;
  for (double ls = -3.0; ls <= 1.0; ls += 0.25) {
    const double h = gaussian_logprob_entropy<double>(m, Eigen::VectorXd::Constant(3, ls), m).entropy;
    EXPECT_GT(h, prev);
    prev = h;
  }
}

TEST(Gaussian, LogProbMatchesDensityProduct) {
  Eigen::VectorXd mean(2), log_std(2), a(2);
  mean << 0.3, -1.0;
  log_std << -0.5, 0.2;
  a << 0.1, 0.4;
  double density = 1.0;
  for (int i = 0; i < 2; ++i) {
    const double s = std::exp(log_std[i]);
    const double z = (a[i] - mean[i]) / s;
    density *= std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
  }
  EXPECT_NEAR(gaussian_logprob_entropy<double>(mean, log_std, a).log_prob, std::log(density), 1e-12);
}

TEST(GaussianPolicy, LogStdInitialValue) {
  const GaussianPolicy<double> p(46, {64, 32}, 15, Activation::kTanh, -2.0);
  EXPECT_TRUE((p.log_std.array() == -2.0).all());
  EXPECT_EQ(p.obs_dim(), 46);
  EXPECT_EQ(p.action_dim(), 15);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Adam<double> opt(3, 0.1);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd g(3);
  g << 2.0, -0.5, 0.0;
  opt.step(p, g);
  EXPECT_NEAR(p[0], -0.1, 1e-6);
  EXPECT_NEAR(p[1], 0.1, 1e-6);
  EXPECT_EQ(p[2], 0.0);
}

TEST(Adam, MinimizesQuadratic) {
  Adam<double> opt(2, 0.05);
  Eigen::VectorXd p(2);
  p << 3.0, -2.0;
  for (int k = 0; k < 2000; ++k) opt.step(p, 2.0 * p);
  EXPECT_LT(p.norm(), 1e-3);
}

TEST(Adam, DecoupledWeightDecayShrinksWithoutGradient) {
  Adam<double> opt(1, 0.1, 0.5);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 2.0);
  opt.step(p, Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(p[0], 2.0 * (1.0 - 0.05), 1e-12);
}

TEST(ClipGradNorm, ScalesToMaxNorm) {
  Eigen::VectorXd a(2), b(1);
  a << 3.0, 0.0;
  b << 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm<double>({&a, &b}, 1.0), 5.0);
  EXPECT_NEAR(std::sqrt(a.squaredNorm() + b.squaredNorm()), 1.0, 1e-6);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(1, 0.1);
  clip_grad_norm<double>({&c}, 1.0);
  EXPECT_EQ(c[0], 0.1);
}

TEST(Polyak, TauOneCopiesAndTauZeroKeeps) {
  Eigen::VectorXd target = Eigen::VectorXd::Zero(3), online = Eigen::VectorXd::Ones(3);
  polyak_update<double>(target, online, 0.0);
  EXPECT_TRUE(target.isZero());
  polyak_update<double>(target, online, 0.25);
  EXPECT_TRUE(target.isApprox(Eigen::VectorXd::Constant(3, 0.25)));
  polyak_update<double>(target, online, 1.0);
  EXPECT_EQ(target, online);
}

TEST(RunningNormalizer, MatchesBatchStatistics) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(3.0, 2.0);
  Eigen::MatrixXd data(2, 3000);
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = n(rng);
  RunningNormalizer norm(2);
  for (int start = 0; start < 3000; start += 7) {
    const int len = std::min<int>(7, 3000 - start);
    norm.update(data.middleCols(start, len));
  }
  const Eigen::VectorXd mean = data.rowwise().mean();
  const Eigen::VectorXd var = (data.colwise() - mean).array().square().rowwise().mean();
  EXPECT_LT((norm.mean() - mean).norm(), 1e-5);
  EXPECT_LT((norm.var() - var).norm(), 1e-4);
  const Eigen::MatrixXd z = norm.normalize_batch(data);
  EXPECT_LT(z.rowwise().mean().norm(), 1e-4);
  EXPECT_TRUE(norm.normalize(data.col(5)).isApprox(z.col(5), 1e-14));
}

TEST(RunningNormalizer, ClipsAndFreezes) {
  RunningNormalizer norm(1, 5.0);
  norm.update(Eigen::MatrixXd::Constant(1, 10, 1.0));
  EXPECT_EQ(norm.normalize(Eigen::VectorXd::Constant(1, 1e6))[0], 5.0);
  RunningNormalizer restored = RunningNormalizer::from_json(norm.to_json());
  EXPECT_TRUE(restored.frozen());
  const Eigen::VectorXd before = restored.mean();
  restored.update(Eigen::MatrixXd::Constant(1, 10, 50.0));
  EXPECT_EQ(restored.mean(), before);
}

}  // namespace
}  // namespace handmimic::nn
