/* Copyright 2026 The asbnn Authors.

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License. */

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "asbnn/network/checkpoint.hpp"
#include "asbnn/network/mlp.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace asbnn {
namespace {

MlpConfig make_config(std::size_t p, std::vector<std::size_t> hidden, OutputHead head,
                      Activation act = Activation::Tanh) {
  MlpConfig c;
  c.input_dim = p;
  c.hidden = std::move(hidden);
  c.head = head;
  c.activation = act;
  return c;
}

TEST(ParamCount, KnownArchitectures) {
  EXPECT_EQ(param_count(make_config(1, {32, 32, 32}, OutputHead::ScalarMean)), 2209u);
  EXPECT_EQ(param_count(make_config(13, {50}, OutputHead::MeanVariance)), 802u);
  EXPECT_EQ(param_count(make_config(1, {}, OutputHead::ScalarMean)), 2u);
}

TEST(ParamCount, RejectsZeroWidth) {
  EXPECT_THROW(param_count(make_config(1, {0}, OutputHead::ScalarMean)), InvalidInput);
  EXPECT_THROW(param_count(make_config(0, {3}, OutputHead::ScalarMean)), InvalidInput);
}

TEST(InitParams, ShapeBiasesAndDeterminism) {
  const auto c = make_config(3, {4, 5}, OutputHead::MeanVariance);
  RngStream a(9), b(9);
  const auto ta = init_params(c, a);
  EXPECT_EQ(ta.size(), param_count(c));
  EXPECT_EQ(ta, init_params(c, b));
  // Layer-major: W then b.
  const std::size_t bias_offsets[][2] = {{12, 4}, {16 + 20, 5}, {41 + 10, 2}};
  for (auto [off, len] : bias_offsets)
    for (std::size_t k = 0; k < len; ++k) EXPECT_EQ(ta[off + k], 0.0);
}

TEST(InitParams, WeightScaleIsInverseRootFanIn) {
  const auto c = make_config(400, {}, OutputHead::ScalarMean);
  RngStream rng(3);
  const auto t = init_params(c, rng);
  double ss = 0.0;
  for (std::size_t k = 0; k < 400; ++k) ss += t[k] * t[k];
  EXPECT_NEAR(ss / 400.0, 1.0 / 400.0, 0.25 / 400.0);
}

TEST(Forward, ZeroNetworkHasZeroMean) {
  const auto c = make_config(2, {8, 8}, OutputHead::ScalarMean);
  const ParamVector theta(param_count(c), 0.0);
  const std::vector<double> x{0.3, -1.7};
  EXPECT_EQ(forward(c, theta, x).mean, 0.0);
}

TEST(Forward, AffineIdentity) {
  const auto c = make_config(1, {}, OutputHead::ScalarMean);
  const std::vector<double> theta{2.0, 1.0}, x{3.0};
  const auto out = forward(c, theta, x);
  EXPECT_DOUBLE_EQ(out.mean, 7.0);
  EXPECT_FALSE(out.variance.has_value());
}

TEST(Forward, VarianceHeadAtZeroRaw) {
  const auto c = make_config(1, {}, OutputHead::MeanVariance);
  const std::vector<double> theta{0.0, 0.0, 0.0, 0.0}, x{5.0};
  const auto out = forward(c, theta, x);
  ASSERT_TRUE(out.variance.has_value());
  EXPECT_NEAR(*out.variance, std::log(2.0) + 1e-6, 1e-15);
}

TEST(Forward, VarianceFloorHolds) {
  const auto c = make_config(1, {}, OutputHead::MeanVariance);
  const std::vector<double> theta{0.0, 0.0, 0.0, -800.0}, x{1.0};
  EXPECT_GE(*forward(c, theta, x).variance, kVarianceFloor);
}

TEST(Forward, ReluClampsNegativePreactivations) {
  const auto c = make_config(1, {1}, OutputHead::ScalarMean, Activation::Relu);
  // hidden = relu(w1 x + b1), out = w2 h + b2
  const std::vector<double> theta{1.0, 0.0, 3.0, 0.5};
  EXPECT_DOUBLE_EQ(forward(c, theta, std::vector<double>{2.0}).mean, 6.5);
  EXPECT_DOUBLE_EQ(forward(c, theta, std::vector<double>{-2.0}).mean, 0.5);
}

TEST(Forward, PureAndRepeatable) {
  const auto c = make_config(3, {16, 16}, OutputHead::MeanVariance);
  RngStream rng(4);
  const auto theta = init_params(c, rng);
  const std::vector<double> x{0.1, 0.2, -0.3};
  const auto a = forward(c, theta, x), b = forward(c, theta, x);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(*a.variance, *b.variance);
  MlpWorkspace ws(c);
  const auto w = ws.forward(theta, x);
  EXPECT_EQ(w.mean, a.mean);
  EXPECT_EQ(*w.variance, *a.variance);
}

TEST(Forward, DimensionMismatch) {
  const auto c = make_config(2, {3}, OutputHead::ScalarMean);
  const ParamVector theta(param_count(c), 0.1);
  EXPECT_THROW(forward(c, theta, std::vector<double>{1.0}), DimensionError);
  EXPECT_THROW(forward(c, ParamVector(3, 0.0), std::vector<double>{1.0, 2.0}), DimensionError);
}

TEST(ScalarTarget, ClosedForms) {
  const auto c = make_config(1, {}, OutputHead::MeanVariance);
  // Layout {w_mu, w_v, b_mu, b_v}: mu = 1 and softplus(b_v) + 1e-6 = 1.
  const double r = std::log(std::expm1(1.0 - 1e-6));
  const std::vector<double> theta{0.0, 0.0, 1.0, r}, x{0.0};
  EXPECT_NEAR(scalar_target(c, theta, x, 1.0, GradTarget::GaussianNll),
              0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(0.5 * std::log(2.0 * std::numbers::pi), 0.91894, 1e-5);
  EXPECT_EQ(scalar_target(c, theta, x, 1.0, GradTarget::MseLoss), 0.0);

  const double r4 = std::log(std::expm1(4.0 - 1e-6));
  const std::vector<double> theta4{0.0, 0.0, 1.0, r4};
  EXPECT_NEAR(scalar_target(c, theta4, x, 3.0, GradTarget::StandardizedSqResidual), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(scalar_target(c, theta4, x, std::nullopt, GradTarget::OutputMean), 1.0);
}

TEST(ScalarTarget, Errors) {
  const auto c = make_config(1, {}, OutputHead::MeanVariance);
  const std::vector<double> theta{0.0, 1.0, 0.0, 0.0}, x{0.0};
  EXPECT_THROW(scalar_target(c, theta, x, std::nullopt, GradTarget::MseLoss), InvalidInput);
  EXPECT_THROW(scalar_target(c, theta, x, std::nullopt, GradTarget::GaussianNll), InvalidInput);
  const auto s = make_config(1, {}, OutputHead::ScalarMean);
  EXPECT_THROW(scalar_target(s, std::vector<double>{1.0, 0.0}, x, 1.0, GradTarget::GaussianNll),
               InvalidInput);
  EXPECT_THROW(target_from_outputs<double>(GradTarget::GaussianNll, 0.0, 0.0, 1.0),
               NumericDomainError);
  EXPECT_THROW(target_from_outputs<double>(GradTarget::StandardizedSqResidual, 0.0, -1.0, 1.0),
               NumericDomainError);
}

TEST(Backprop, AffineOutputMean) {
  const auto c = make_config(1, {}, OutputHead::ScalarMean);
  const std::vector<double> theta{-0.7, 4.0}, x{2.5};
  const auto g = backprop_param_grad(c, theta, x, std::nullopt, GradTarget::OutputMean);
  EXPECT_EQ(g, (Vector{2.5, 1.0}));
}

TEST(Backprop, MseAtZeroResidualIsZero) {
  const auto c = make_config(2, {6, 6}, OutputHead::ScalarMean);
  RngStream rng(8);
  const auto theta = init_params(c, rng);
  const std::vector<double> x{0.4, -0.2};
  const double mu = forward(c, theta, x).mean;
  for (double v : backprop_param_grad(c, theta, x, mu, GradTarget::MseLoss)) EXPECT_EQ(v, 0.0);
}

TEST(Backprop, Deep3x32TanhOutputMeanMatchesFd) {
  const auto c = make_config(1, {32, 32, 32}, OutputHead::ScalarMean);
  RngStream rng(17);
  const auto theta = init_params(c, rng);
  const std::vector<double> x{0.37};
  const auto g = backprop_param_grad(c, theta, x, std::nullopt, GradTarget::OutputMean);
  const auto fd = testing::target_fd(c, theta, x, std::nullopt, GradTarget::OutputMean);
  EXPECT_LE(testing::max_rel_error(g, fd), 1e-5);
}

struct FdCase {
  GradTarget target;
  OutputHead head;
  Activation act;
};

class BackpropFd : public ::testing::TestWithParam<FdCase> {};

TEST_P(BackpropFd, TenSeededCases) {
  const FdCase fc = GetParam();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(1000 + seed);
    const std::size_t p = 1 + rng.index(4);
    std::vector<std::size_t> hidden(1 + rng.index(3));
    for (auto& w : hidden) w = 2 + rng.index(10);
    const auto c = make_config(p, hidden, fc.head, fc.act);
    auto theta = init_params(c, rng);
    for (double& t : theta) t += 0.1 * rng.normal();
    std::vector<double> x(p);
    for (double& v : x) v = rng.normal();
    const double y = rng.normal();
    const std::optional<double> label =
        needs_label(fc.target) ? std::optional<double>(y) : std::nullopt;
    const auto g = backprop_param_grad(c, theta, x, label, fc.target);
    const auto fd = testing::target_fd(c, theta, x, label, fc.target);
    EXPECT_LE(testing::max_rel_error(g, fd), 1e-5) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllTargets, BackpropFd,
    ::testing::Values(FdCase{GradTarget::OutputMean, OutputHead::ScalarMean, Activation::Tanh},
                      FdCase{GradTarget::MseLoss, OutputHead::ScalarMean, Activation::Tanh},
                      FdCase{GradTarget::GaussianNll, OutputHead::MeanVariance, Activation::Tanh},
                      FdCase{GradTarget::StandardizedSqResidual, OutputHead::MeanVariance,
                             Activation::Tanh},
                      FdCase{GradTarget::OutputMean, OutputHead::MeanVariance, Activation::Tanh},
                      FdCase{GradTarget::MseLoss, OutputHead::MeanVariance, Activation::Relu},
                      FdCase{GradTarget::GaussianNll, OutputHead::MeanVariance, Activation::Relu}));

TEST(Backprop, WorkspaceAccumulates) {
  const auto c = make_config(2, {4}, OutputHead::ScalarMean);
  RngStream rng(2);
  const auto theta = init_params(c, rng);
  const std::vector<double> x{1.0, -1.0};
  const auto g = backprop_param_grad(c, theta, x, std::nullopt, GradTarget::OutputMean);
  MlpWorkspace ws(c);
  Vector acc(g.size(), 0.0);
  ws.forward(theta, x);
  ws.backward(theta, 1.0, 0.0, acc);
  ws.backward(theta, 1.0, 0.0, acc);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_DOUBLE_EQ(acc[i], 2.0 * g[i]);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto c = make_config(3, {5}, OutputHead::MeanVariance, Activation::Relu);
  RngStream rng(12);
  auto theta = init_params(c, rng);
  theta[0] = std::nextafter(1.0, 2.0);
  const auto path = (std::filesystem::temp_directory_path() / "asbnn_ckpt_test.bin").string();
  save_checkpoint(path, c, theta);
  EXPECT_EQ(load_checkpoint(path, c), theta);
  const auto other = make_config(3, {5}, OutputHead::MeanVariance, Activation::Tanh);
  EXPECT_THROW(load_checkpoint(path, other), Error);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path, c), IoError);
}

}  // namespace
}  // namespace asbnn
