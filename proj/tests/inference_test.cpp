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
#include <filesystem>
#include <limits>
#include <numbers>

#include "asbnn/data/dataset.hpp"
#include "asbnn/inference/bma.hpp"
#include "asbnn/inference/hmc.hpp"
#include "asbnn/inference/posterior.hpp"
#include "asbnn/inference/sample_io.hpp"
#include "asbnn/inference/vi.hpp"
#include "asbnn/numerics/linalg.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace asbnn {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Independent log N(y; m, v) for oracles.
double log_normal(double y, double m, double v) {
  return -0.5 * kLog2Pi - 0.5 * std::log(v) - 0.5 * (y - m) * (y - m) / v;
}

MlpConfig net(std::size_t p, std::vector<std::size_t> hidden, OutputHead head) {
  MlpConfig c;
  c.input_dim = p;
  c.hidden = std::move(hidden);
  c.head = head;
  return c;
}

Dataset sine_data(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  return gen_sine(n, 0.3, rng);
}

/// Model with a random orthonormal basis of rank k around a random anchor.
SubspaceModel random_model(const MlpConfig& c, std::size_t k, std::uint64_t seed,
                           double prior_std = 1.0) {
  const std::size_t n = param_count(c);
  GradientMatrix g;
  g.g = testing::random_matrix(std::max(k, n), n, seed);
  SubspaceModel m;
  m.proj = projection_from_gradients(g, k);
  RngStream rng(seed, 1);
  m.anchor = init_params(c, rng);
  m.prior_std = prior_std;
  return m;
}

TargetDensity standard_normal(std::size_t d) {
  return {d, [](std::span<const double> x, std::span<double> g) {
            double lp = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
              lp -= 0.5 * x[j] * x[j];
              g[j] = -x[j];
            }
            return lp;
          }};
}

// ---------------------------------------------------------------- posterior

TEST(SubspacePosterior, EmptyDatasetIsPriorOnly) {
  const auto c = net(1, {4}, OutputHead::ScalarMean);
  const auto model = random_model(c, 3, 1, 2.0);
  Dataset empty;
  empty.features = DenseMatrix(0, 1);
  const SubspacePosterior post(model, c, empty, NoiseModel::fixed(0.1));
  const Vector z{0.3, -1.0, 2.0};
  double expect = 0.0;
  for (double v : z) expect += log_normal(v, 0.0, 4.0);
  EXPECT_NEAR(post.log_posterior(z), expect, 1e-12);
  EXPECT_GT(post.log_posterior(Vector(3, 0.0)), post.log_posterior(z));
  const auto g = post.grad_log_posterior(z);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(g[k], -z[k] / 4.0, 1e-15);
}

// Oracle: log posterior in the full parameter space at theta = anchor + V z
// with prior N(anchor, s^2 I), written without any subspace code.
double full_space_log_posterior(const MlpConfig& c, const ParamVector& theta,
                                const ParamVector& anchor, double s, const Dataset& d,
                                double noise_var) {
  double lp = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    lp += log_normal(d.y(i), forward(c, theta, d.x(i)).mean, noise_var);
  }
  for (std::size_t j = 0; j < theta.size(); ++j) lp += log_normal(theta[j], anchor[j], s * s);
  return lp;
}

TEST(SubspacePosterior, FullRankEqualsFullSpace) {
  const auto c = net(1, {3, 2}, OutputHead::ScalarMean);
  const std::size_t n = param_count(c);
  ASSERT_LE(n, 20u);
  const auto d = sine_data(15, 2);
  const auto model = random_model(c, n, 3, 1.5);
  const SubspacePosterior post(model, c, d, NoiseModel::fixed(0.2));
  const DenseMatrix v = model.proj.basis();
  RngStream rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto z = gaussian_vector(n, 0.0, 1.0, rng);
    ParamVector theta = model.anchor;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) theta[i] += v(i, k) * z[k];
    EXPECT_NEAR(post.log_posterior(z),
                full_space_log_posterior(c, theta, model.anchor, 1.5, d, 0.2), 1e-10);
  }
}

TEST(SubspacePosterior, DoublingPriorStdShiftsOnlyPrior) {
  const auto c = net(1, {5}, OutputHead::MeanVariance);
  const auto d = sine_data(20, 5);
  auto m1 = random_model(c, 4, 6, 1.0);
  auto m2 = m1;
  m2.prior_std = 2.0;
  const SubspacePosterior p1(m1, c, d, NoiseModel::head()), p2(m2, c, d, NoiseModel::head());
  const Vector z{0.5, -0.2, 1.1, 0.0};
  double delta = 0.0;
  for (double v : z) delta += log_normal(v, 0.0, 4.0) - log_normal(v, 0.0, 1.0);
  EXPECT_NEAR(p2.log_posterior(z) - p1.log_posterior(z), delta, 1e-10);
  EXPECT_EQ(p1.log_likelihood(z), p2.log_likelihood(z));
}

TEST(SubspacePosterior, HeadVarianceLikelihoodMatchesDirectSum) {
  const auto c = net(1, {5}, OutputHead::MeanVariance);
  const auto d = sine_data(12, 7);
  const auto m = random_model(c, 3, 8);
  const SubspacePosterior post(m, c, d, NoiseModel::head());
  const Vector z{0.1, 0.2, -0.3};
  const auto theta = embed(m, z);
  double ll = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto out = forward(c, theta, d.x(i));
    ll += log_normal(d.y(i), out.mean, *out.variance);
  }
  EXPECT_NEAR(post.log_likelihood(z), ll, 1e-10);
}

TEST(SubspacePosterior, GlobalNoiseCoordinate) {
  const auto c = net(1, {4}, OutputHead::ScalarMean);
  const auto d = sine_data(10, 9);
  const auto m = random_model(c, 2, 10);
  const SubspacePosterior post(m, c, d, NoiseModel::global());
  ASSERT_EQ(post.dim(), 3u);
  const Vector z{0.2, -0.1, std::log(0.3)};
  const auto theta = embed(m, std::span<const double>(z).first(2));
  double expect = log_normal(z[0], 0.0, 1.0) + log_normal(z[1], 0.0, 1.0) +
                  log_normal(z[2], std::log(0.5), 1.0);
  for (std::size_t i = 0; i < d.size(); ++i)
    expect += log_normal(d.y(i), forward(c, theta, d.x(i)).mean, 0.09);
  EXPECT_NEAR(post.log_posterior(z), expect, 1e-10);
}

class PosteriorGradFd : public ::testing::TestWithParam<int> {};

TEST_P(PosteriorGradFd, TenRandomPoints) {
  const int which = GetParam();
  const OutputHead head = which == 0 ? OutputHead::MeanVariance : OutputHead::ScalarMean;
  const NoiseModel noise = which == 0   ? NoiseModel::head()
                           : which == 1 ? NoiseModel::global()
                                        : NoiseModel::fixed(0.25);
  const auto c = net(1, {6, 6}, head);
  const auto d = sine_data(25, 11);
  const auto m = random_model(c, 5, 12, 0.7);
  const SubspacePosterior post(m, c, d, noise);
  RngStream rng(13);
  for (int t = 0; t < 10; ++t) {
    const auto z = gaussian_vector(post.dim(), 0.0, 0.5, rng);
    const auto g = post.grad_log_posterior(z);
    const auto fd =
        testing::central_fd_double([&](const std::vector<double>& x) { return post.log_posterior(x); },
                                   z, 1e-5);
    double worst = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k)
      worst = std::max(worst, std::abs(g[k] - fd[k]) / (1e-8 + std::abs(fd[k])));
    EXPECT_LE(worst, 1e-5) << "point " << t;
  }
}

INSTANTIATE_TEST_SUITE_P(NoiseModels, PosteriorGradFd, ::testing::Values(0, 1, 2));

TEST(SubspacePosterior, GradientVanishesAtLocatedMode) {
  const auto c = net(1, {4}, OutputHead::ScalarMean);
  const auto d = sine_data(20, 14);
  const auto m = random_model(c, 3, 15);
  const SubspacePosterior post(m, c, d, NoiseModel::fixed(0.5));
  // Plain gradient ascent with backtracking; the oracle is the stopping point.
  Vector z(3, 0.0);
  double f = post.log_posterior(z);
  double step = 0.1;
  for (int it = 0; it < 20000; ++it) {
    const auto g = post.grad_log_posterior(z);
    if (norm2(g) < 1e-6) break;
    Vector cand = z;
    axpy(step, g, cand);
    const double fc = post.log_posterior(cand);
    if (fc > f) {
      z = cand;
      f = fc;
      step *= 1.2;
    } else {
      step *= 0.5;
    }
  }
  EXPECT_LE(norm2(post.grad_log_posterior(z)), 1e-4);
}

TEST(SubspacePosterior, NonFiniteReportsPoint) {
  const auto c = net(1, {}, OutputHead::ScalarMean);
  const auto d = sine_data(5, 16);
  SubspaceModel m = SubspaceModel::full(2, 1.0);
  const SubspacePosterior post(m, c, d, NoiseModel::fixed(1.0));
  const Vector z{1e200, 1e200};
  try {
    post.log_posterior(z);
    FAIL() << "expected NonFiniteDensity";
  } catch (const NonFiniteDensity& e) {
    EXPECT_EQ(e.point(), z);
  }
}

TEST(SubspacePosterior, Errors) {
  const auto c = net(1, {3}, OutputHead::ScalarMean);
  const auto d = sine_data(5, 17);
  const auto m = random_model(c, 2, 18);
  EXPECT_THROW(SubspacePosterior(m, c, d, NoiseModel::head()), InvalidInput);
  const SubspacePosterior post(m, c, d, NoiseModel::fixed(1.0));
  EXPECT_THROW(post.log_posterior(Vector(3, 0.0)), DimensionError);
}

// ---------------------------------------------------------------------- HMC

TEST(Hmc, StandardNormalMoments) {
  HmcOptions o;
  o.warmup = 1000;
  o.samples = 5000;
  RngStream rng(19);
  const auto s = hmc_run(standard_normal(5), Vector(5, 0.0), o, rng);
  ASSERT_EQ(s.count(), 5000u);
  for (std::size_t k = 0; k < 5; ++k) {
    double m = 0.0, v = 0.0;
    for (std::size_t r = 0; r < s.count(); ++r) m += s.draws(r, k);
    m /= s.count();
    for (std::size_t r = 0; r < s.count(); ++r) v += (s.draws(r, k) - m) * (s.draws(r, k) - m);
    v /= s.count();
    EXPECT_LE(std::abs(m), 0.1) << k;
    EXPECT_GE(v, 0.85) << k;
    EXPECT_LE(v, 1.15) << k;
  }
  EXPECT_GE(s.acceptance_rate, 0.5);
  EXPECT_LE(s.acceptance_rate, 0.99);
}

TEST(Hmc, ZeroStepSizeKeepsCurrentPoint) {
  HmcOptions o;
  o.warmup = 0;
  o.samples = 20;
  o.step_size = 0.0;
  o.adapt = false;
  RngStream rng(20);
  const Vector init{0.5, -0.25};
  const auto s = hmc_run(standard_normal(2), init, o, rng);
  EXPECT_DOUBLE_EQ(s.acceptance_rate, 1.0);
  for (std::size_t r = 0; r < s.count(); ++r) {
    EXPECT_EQ(s.draws(r, 0), init[0]);
    EXPECT_EQ(s.draws(r, 1), init[1]);
  }
}

TEST(Hmc, SmallStepEnergyError) {
  // Quadratic target with covariance diag(1, 4): H is known exactly.
  const TargetDensity t{2, [](std::span<const double> x, std::span<double> g) {
                          g[0] = -x[0];
                          g[1] = -x[1] / 4.0;
                          return -0.5 * x[0] * x[0] - 0.125 * x[1] * x[1];
                        }};
  const Vector q{0.7, -1.3}, p{0.4, 1.1};
  EXPECT_LE(std::abs(leapfrog_energy_error(t, q, p, 1e-3, 10)), 1e-4);
}

TEST(Hmc, StuckSamplerThrows) {
  const TargetDensity t{1, [](std::span<const double> x, std::span<double> g) {
                          g[0] = 0.0;
                          return x[0] == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
                        }};
  HmcOptions o;
  o.warmup = 0;
  o.samples = 1000;
  o.step_size = 0.1;
  o.adapt = false;
  RngStream rng(21);
  EXPECT_THROW(hmc_run(t, Vector{0.0}, o, rng), SamplerStuck);
}

TEST(Hmc, Deterministic) {
  HmcOptions o;
  o.warmup = 100;
  o.samples = 200;
  RngStream a(22), b(22);
  EXPECT_EQ(hmc_run(standard_normal(3), Vector(3, 0.0), o, a).draws,
            hmc_run(standard_normal(3), Vector(3, 0.0), o, b).draws);
}

TEST(Hmc, Errors) {
  HmcOptions o;
  o.leapfrog_steps = 0;
  RngStream rng(1);
  EXPECT_THROW(hmc_run(standard_normal(2), Vector(2, 0.0), o, rng), InvalidInput);
  o.leapfrog_steps = 5;
  EXPECT_THROW(hmc_run(standard_normal(2), Vector(3, 0.0), o, rng), DimensionError);
}

// ----------------------------------------------------------------------- VI

TEST(Kl, IdenticalIsZero) {
  const VariationalParams q{{0.0, 0.0}, {std::log(1.5), std::log(1.5)}};
  EXPECT_NEAR(kl_diag_gaussians(q, 1.5), 0.0, 1e-15);
}

TEST(Kl, ShiftedMean) {
  const VariationalParams q{{1.0}, {0.0}};
  EXPECT_NEAR(kl_diag_gaussians(q, 1.0), 0.5, 1e-15);
}

TEST(Kl, NonNegativeSweep) {
  RngStream rng(23);
  for (int t = 0; t < 100; ++t) {
    VariationalParams q;
    q.mean = gaussian_vector(4, 0.0, 2.0, rng);
    q.log_std = gaussian_vector(4, 0.0, 1.0, rng);
    EXPECT_GE(kl_diag_gaussians(q, 0.1 + 3.0 * rng.uniform()), 0.0);
  }
}

// Conjugate problem: observation y ~ N(z, lv), prior z ~ N(0, 1). The
// posterior is N(2, 0.25) for y = 8/3, lv = 1/3, and the log evidence is
// log N(y; 0, lv + 1).
constexpr double kObsY = 8.0 / 3.0;
constexpr double kObsVar = 1.0 / 3.0;

VariationalTarget conjugate_target() {
  VariationalTarget t;
  t.log_likelihood = {1, [](std::span<const double> z, std::span<double> g) {
                        g[0] = (kObsY - z[0]) / kObsVar;
                        return log_normal(kObsY, z[0], kObsVar);
                      }};
  t.prior = DiagGaussianPrior::isotropic(1, 1.0);
  return t;
}

TEST(Elbo, CollapsedFamilyIsPointEvaluation) {
  const auto t = conjugate_target();
  const VariationalParams q{{0.7}, {-800.0}};
  RngStream rng(24);
  EXPECT_EQ(elbo_estimate(q, t, 1, rng),
            log_normal(kObsY, 0.7, kObsVar) - kl_diag_gaussians(q, t.prior));
}

TEST(Elbo, ConjugateOptimumEqualsEvidence) {
  const auto t = conjugate_target();
  const double log_evidence = log_normal(kObsY, 0.0, kObsVar + 1.0);
  const VariationalParams exact{{2.0}, {std::log(0.5)}};
  RngStream rng(25);
  EXPECT_NEAR(elbo_estimate(exact, t, 200000, rng), log_evidence, 0.01);
  // Jensen: any other q has a lower ELBO, checked in expectation.
  const VariationalParams off{{1.5}, {std::log(0.8)}};
  EXPECT_LT(elbo_estimate(off, t, 200000, rng), log_evidence);
}

TEST(FitVi, RecoversGaussianTarget) {
  const auto t = conjugate_target();
  ViOptions o;
  RngStream rng(26);
  const auto res = fit_vi(t, o, rng);
  EXPECT_NEAR(res.params.mean[0], 2.0, 0.05);
  EXPECT_NEAR(res.params.std(0), 0.5, 0.05);
  RngStream erng(27);
  const double log_evidence = log_normal(kObsY, 0.0, kObsVar + 1.0);
  EXPECT_NEAR(elbo_estimate(res.params, t, 100000, erng), log_evidence, 0.05);
}

TEST(FitVi, PriorOnlyTargetReturnsPrior) {
  VariationalTarget t;
  t.log_likelihood = {3, [](std::span<const double>, std::span<double> g) {
                        std::fill(g.begin(), g.end(), 0.0);
                        return 0.0;
                      }};
  t.prior = DiagGaussianPrior::isotropic(3, 1.3);
  ViOptions o;
  o.init_mean = Vector{0.5, -0.5, 0.2};
  RngStream rng(28);
  const auto res = fit_vi(t, o, rng);
  EXPECT_LE(norm2(res.params.mean), 0.05);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(res.params.std(k), 1.3, 0.13);
}

TEST(FitVi, ElboMovingAverageSettles) {
  const auto t = conjugate_target();
  ViOptions o;
  RngStream rng(29);
  const auto res = fit_vi(t, o, rng);
  const std::size_t tail = o.steps / 5, window = tail / 4;
  auto avg = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < from + window; ++i) s += res.elbo_trace[i];
    return s / static_cast<double>(window);
  };
  const std::size_t start = o.steps - tail;
  double m = 0.0, v = 0.0;
  for (std::size_t i = start; i < o.steps; ++i) m += res.elbo_trace[i];
  m /= static_cast<double>(tail);
  for (std::size_t i = start; i < o.steps; ++i) v += std::pow(res.elbo_trace[i] - m, 2);
  const double sd = std::sqrt(v / static_cast<double>(tail - 1));
  // Three standard errors of a difference of two window means.
  const double tol = 3.0 * std::sqrt(2.0) * sd / std::sqrt(static_cast<double>(window));
  for (std::size_t w = 1; w < 4; ++w) {
    EXPECT_GE(avg(start + w * window), avg(start + (w - 1) * window) - tol);
  }
}

TEST(FitVi, Deterministic) {
  const auto t = conjugate_target();
  ViOptions o;
  o.steps = 300;
  RngStream a(30), b(30);
  EXPECT_EQ(fit_vi(t, o, a).params, fit_vi(t, o, b).params);
}

TEST(FitVi, NanGradientDiverges) {
  VariationalTarget t;
  t.log_likelihood = {1, [](std::span<const double>, std::span<double> g) {
                        g[0] = std::numeric_limits<double>::quiet_NaN();
                        return 0.0;
                      }};
  t.prior = DiagGaussianPrior::isotropic(1, 1.0);
  RngStream rng(31);
  EXPECT_THROW(fit_vi(t, ViOptions{}, rng), TrainingDiverged);
}

TEST(FitVi, SubspacePosteriorTargetRuns) {
  const auto c = net(1, {4}, OutputHead::MeanVariance);
  const auto d = sine_data(30, 32);
  const auto m = random_model(c, 3, 33);
  const SubspacePosterior post(m, c, d, NoiseModel::head());
  const auto t = VariationalTarget::from_posterior(post);
  ViOptions o;
  o.steps = 500;
  RngStream rng(34);
  const auto res = fit_vi(t, o, rng);
  EXPECT_EQ(res.params.dim(), 3u);
  EXPECT_GT(res.elbo_trace.back(), res.elbo_trace.front());
}

// ---------------------------------------------------------- draw_posterior

TEST(DrawPosterior, ThinningStride) {
  EXPECT_EQ(thinning_stride(5000, 30), 166u);
  PosteriorSamples h;
  h.draws = DenseMatrix(5000, 1);
  for (std::size_t r = 0; r < 5000; ++r) h.draws(r, 0) = static_cast<double>(r);
  const auto s = draw_posterior(h, 30);
  ASSERT_EQ(s.count(), 30u);
  for (std::size_t r = 0; r < 30; ++r) EXPECT_EQ(s.draws(r, 0), 166.0 * r);
  const auto one = draw_posterior(h, 1);
  EXPECT_EQ(one.count(), 1u);
  EXPECT_THROW(draw_posterior(h, 5001), InvalidInput);
  EXPECT_THROW(draw_posterior(h, 0), InvalidInput);
}

TEST(DrawPosterior, CollapsedVariationalRowsIdentical) {
  const VariationalParams q{{1.0, -2.0}, {-800.0, -800.0}};
  RngStream rng(35);
  const auto s = draw_posterior(q, 7, rng);
  EXPECT_EQ(s.source, PosteriorSamples::Source::Vi);
  for (std::size_t r = 0; r < 7; ++r) {
    EXPECT_EQ(s.draws(r, 0), 1.0);
    EXPECT_EQ(s.draws(r, 1), -2.0);
  }
  EXPECT_EQ(draw_posterior(q, 1, rng).count(), 1u);
}

// --------------------------------------------------------------------- BMA

TEST(PredictiveMixture, TwoComponentTotalVariance) {
  const PredictiveMixture m{{-1.0, 1.0}, {0.0, 0.0}};
  EXPECT_DOUBLE_EQ(m.mean(), 0.0);
  EXPECT_DOUBLE_EQ(m.variance(), 1.0);
}

TEST(PredictiveMixture, VarianceAtLeastMeanComponentVariance) {
  RngStream rng(36);
  for (int t = 0; t < 50; ++t) {
    PredictiveMixture m;
    for (int j = 0; j < 10; ++j) {
      m.means.push_back(rng.normal());
      m.variances.push_back(rng.uniform());
    }
    double mv = 0.0;
    for (double v : m.variances) mv += v;
    EXPECT_GE(m.variance(), mv / 10.0 - 1e-12);
  }
}

TEST(Bma, IdenticalDrawsGiveComponentVariance) {
  const auto c = net(1, {4}, OutputHead::MeanVariance);
  const auto m = random_model(c, 2, 37);
  PosteriorSamples s;
  s.draws = DenseMatrix(5, 2);
  for (std::size_t r = 0; r < 5; ++r) {
    s.draws(r, 0) = 0.3;
    s.draws(r, 1) = -0.4;
  }
  const std::vector<double> x{0.5};
  const auto mix = bma_predictive(m, s, c, x, NoiseModel::head());
  const auto out = forward(c, embed(m, Vector{0.3, -0.4}), x);
  EXPECT_NEAR(mix.variance(), *out.variance, 1e-15);
  EXPECT_DOUBLE_EQ(mix.mean(), out.mean);
}

TEST(Bma, ThirtyComponents) {
  const auto c = net(1, {4}, OutputHead::ScalarMean);
  const auto m = random_model(c, 3, 38);
  RngStream rng(39);
  const VariationalParams q{{0, 0, 0, std::log(0.3)}, {-1, -1, -1, -1}};
  const auto s = draw_posterior(q, 30, rng);
  const auto mix = bma_predictive(m, s, c, std::vector<double>{0.2}, NoiseModel::global());
  EXPECT_EQ(mix.components(), 30u);
  for (std::size_t j = 0; j < 30; ++j) {
    EXPECT_DOUBLE_EQ(mix.variances[j], std::exp(2.0 * s.draws(j, 3)));
  }
}

TEST(Bma, DimensionMismatch) {
  const auto c = net(1, {4}, OutputHead::ScalarMean);
  const auto m = random_model(c, 3, 40);
  PosteriorSamples s;
  s.draws = DenseMatrix(2, 3);
  EXPECT_THROW(bma_predictive(m, s, c, std::vector<double>{0.1}, NoiseModel::global()),
               DimensionError);
  EXPECT_NO_THROW(bma_predictive(m, s, c, std::vector<double>{0.1}, NoiseModel::fixed(1.0)));
}

TEST(Bma, PredictAllMatchesPointwise) {
  const auto c = net(1, {4}, OutputHead::MeanVariance);
  const auto m = random_model(c, 2, 41);
  RngStream rng(42);
  const auto s = draw_posterior(VariationalParams{{0, 0}, {-1, -1}}, 6, rng);
  const BmaPredictor pred(m, c, NoiseModel::head(), s);
  DenseMatrix xs(9, 1);
  for (std::size_t i = 0; i < 9; ++i) xs(i, 0) = 0.1 * i;
  const auto all = pred.predict_all(xs, 3);
  for (std::size_t i = 0; i < 9; ++i) {
    const auto one = pred.predict(xs.row(i));
    EXPECT_EQ(all[i].means, one.means);
    EXPECT_EQ(all[i].variances, one.variances);
  }
}

TEST(AveragedWeight, Identities) {
  const auto c = net(1, {3}, OutputHead::ScalarMean);
  const auto m = random_model(c, 2, 43);
  PosteriorSamples s;
  s.draws = DenseMatrix{{1.0, -2.0}, {-1.0, 2.0}};
  const auto centered = averaged_weight_diagnostic(m, s);
  for (std::size_t i = 0; i < centered.size(); ++i) EXPECT_NEAR(centered[i], m.anchor[i], 1e-15);

  PosteriorSamples one;
  one.draws = DenseMatrix{{0.3, 0.7}};
  EXPECT_EQ(averaged_weight_diagnostic(m, one), embed(m, Vector{0.3, 0.7}));

  PosteriorSamples three;
  three.draws = DenseMatrix{{0.3, 0.7}, {1.2, -0.1}, {-0.6, 0.3}};
  const auto avg = averaged_weight_diagnostic(m, three);
  const auto lin = embed(m, Vector{0.3, 0.3});
  for (std::size_t i = 0; i < avg.size(); ++i) EXPECT_NEAR(avg[i], lin[i], 1e-14);
}

// ------------------------------------------------------------------ sample io

TEST(SampleCsv, RoundTripWithLogNoise) {
  PosteriorSamples s;
  s.draws = DenseMatrix{{0.1, 1.0 / 3.0, -2.5e-17}, {std::nextafter(1.0, 2.0), -7.0, 0.0}};
  const auto path = (std::filesystem::temp_directory_path() / "asbnn_samples.csv").string();
  save_samples_csv(path, s, 2);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "z_1,z_2,log_noise");
  EXPECT_EQ(load_samples_csv(path).draws, s.draws);
  save_samples_csv(path, s, 3);
  std::ifstream in3(path);
  std::getline(in3, header);
  EXPECT_EQ(header, "z_1,z_2,z_3");
  EXPECT_THROW(save_samples_csv(path, s, 5), DimensionError);
  std::filesystem::remove(path);
}

TEST(SampleCsv, FormatG17) {
  EXPECT_EQ(format_g17(0.1), "0.10000000000000001");
  EXPECT_EQ(format_g17(1.0), "1");
  EXPECT_EQ(format_g17(-2.5e-17), "-2.4999999999999999e-17");
}

}  // namespace
}  // namespace asbnn
