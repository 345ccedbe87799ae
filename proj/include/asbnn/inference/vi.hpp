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

#ifndef ASBNN_INFERENCE_VI_HPP
#define ASBNN_INFERENCE_VI_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asbnn/error.hpp"
#include "asbnn/inference/hmc.hpp"
#include "asbnn/inference/posterior.hpp"
#include "asbnn/numerics/rng.hpp"

namespace asbnn {

/// Mean-field Gaussian q(z) = prod_k N(mean_k, exp(log_std_k)^2).
struct VariationalParams {
  Vector mean;
  Vector log_std;

  std::size_t dim() const noexcept { return mean.size(); }
  double std(std::size_t k) const { return std::exp(log_std[k]); }
  bool operator==(const VariationalParams&) const = default;
};

/// Independent Gaussian prior, one (mean, std) per coordinate.
struct DiagGaussianPrior {
  Vector mean;
  Vector std;

  static DiagGaussianPrior isotropic(std::size_t k, double std) {
    return {Vector(k, 0.0), Vector(k, std)};
  }
};

/// KL(q || prior) in closed form:
///   sum_k ln(s_k / sigma_k) + (sigma_k^2 + (mu_k - m_k)^2) / (2 s_k^2) - 1/2
inline double kl_diag_gaussians(const VariationalParams& q, const DiagGaussianPrior& prior) {
  if (q.mean.size() != q.log_std.size() || prior.mean.size() != q.dim() ||
      prior.std.size() != q.dim()) {
    throw DimensionError("kl_diag_gaussians: dimension mismatch");
  }
  double kl = 0.0;
  for (std::size_t k = 0; k < q.dim(); ++k) {
    const double s = prior.std[k];
    const double sigma = q.std(k);
    const double dm = q.mean[k] - prior.mean[k];
    kl += std::log(s) - q.log_std[k] + (sigma * sigma + dm * dm) / (2.0 * s * s) - 0.5;
  }
  return kl;
}

inline double kl_diag_gaussians(const VariationalParams& q, double prior_std) {
  return kl_diag_gaussians(q, DiagGaussianPrior::isotropic(q.dim(), prior_std));
}

/// Likelihood part of a variational problem plus the prior the KL is taken
/// against. `log_likelihood.log_density_grad` must not include the prior.
struct VariationalTarget {
  TargetDensity log_likelihood;
  DiagGaussianPrior prior;

  std::size_t dim() const noexcept { return log_likelihood.dim; }

  static VariationalTarget from_posterior(const SubspacePosterior& post) {
    return {post.likelihood_target(), {post.prior_mean(), post.prior_std()}};
  }
};

namespace detail {

inline void draw_reparameterized(const VariationalParams& q, RngStream& rng,
                                 std::span<double> eps, std::span<double> z) {
  for (std::size_t k = 0; k < q.dim(); ++k) {
    eps[k] = rng.normal();
    z[k] = q.mean[k] + std::exp(q.log_std[k]) * eps[k];
  }
}

}  // namespace detail

/// Reparameterized Monte Carlo ELBO, E_q[log p(D|z)] - KL(q || prior), with
/// the KL in closed form. Higher is better.
inline double elbo_estimate(const VariationalParams& q, const VariationalTarget& target,
                            std::size_t n_mc, RngStream& rng) {
  if (n_mc < 1) throw InvalidInput("elbo_estimate: n_mc must be >= 1");
  if (q.dim() != target.dim()) throw DimensionError("elbo_estimate: dimension mismatch");
  Vector eps(q.dim()), z(q.dim()), grad(q.dim());
  double acc = 0.0;
  for (std::size_t s = 0; s < n_mc; ++s) {
    detail::draw_reparameterized(q, rng, eps, z);
    const double ll = target.log_likelihood.log_density_grad(z, grad);
    if (!std::isfinite(ll)) {
      throw NonFiniteDensity("elbo_estimate: non-finite log-likelihood sample", z);
    }
    acc += ll;
  }
  return acc / static_cast<double>(n_mc) - kl_diag_gaussians(q, target.prior);
}

struct ViOptions {
  std::size_t steps = 5000;
  double learning_rate = 0.01;
  // The step size decays geometrically from learning_rate to
  // learning_rate * final_lr_fraction over the run; 1 keeps it constant.
  double final_lr_fraction = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double init_log_std = -3.0;
  std::optional<Vector> init_mean;  // defaults to the prior mean
};

struct ViResult {
  VariationalParams params;
  std::vector<double> elbo_trace;  // single-sample ELBO at each step
};

/// Adam ascent on the reparameterized ELBO with one Monte Carlo sample per
/// step and the closed-form KL gradient. Returns the parameters after the
/// final step.
inline ViResult fit_vi(const VariationalTarget& target, const ViOptions& opts, RngStream& rng) {
  const std::size_t d = target.dim();
  if (!(opts.learning_rate > 0.0) || !(opts.final_lr_fraction > 0.0 && opts.final_lr_fraction <= 1.0)) {
    throw InvalidInput("fit_vi: learning rate must be > 0 and final fraction in (0, 1]");
  }
  if (target.prior.mean.size() != d || target.prior.std.size() != d) {
    throw DimensionError("fit_vi: prior dimension mismatch");
  }
  ViResult res;
  VariationalParams& q = res.params;
  q.mean = opts.init_mean.value_or(target.prior.mean);
  if (q.mean.size() != d) throw DimensionError("fit_vi: init mean length");
  q.log_std.assign(d, opts.init_log_std);
  res.elbo_trace.reserve(opts.steps);

  Vector eps(d), z(d), g_ll(d);
  // Adam moments over [mean, log_std].
  Vector m1(2 * d, 0.0), m2(2 * d, 0.0), g(2 * d);
  for (std::size_t t = 1; t <= opts.steps; ++t) {
    detail::draw_reparameterized(q, rng, eps, z);
    const double ll = target.log_likelihood.log_density_grad(z, g_ll);
    const double kl = kl_diag_gaussians(q, target.prior);
    bool finite = std::isfinite(ll);
    for (std::size_t k = 0; k < d; ++k) {
      const double s = target.prior.std[k];
      const double sigma = std::exp(q.log_std[k]);
      const double dkl_dmean = (q.mean[k] - target.prior.mean[k]) / (s * s);
      const double dkl_dlogstd = -1.0 + sigma * sigma / (s * s);
      g[k] = g_ll[k] - dkl_dmean;
      g[d + k] = g_ll[k] * eps[k] * sigma - dkl_dlogstd;
      finite = finite && std::isfinite(g[k]) && std::isfinite(g[d + k]);
    }
    if (!finite) {
      Vector last = q.mean;
      last.insert(last.end(), q.log_std.begin(), q.log_std.end());
      throw TrainingDiverged("fit_vi: non-finite ELBO gradient at step " + std::to_string(t),
                             last);
    }
    res.elbo_trace.push_back(ll - kl);

    const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(t));
    const double progress =
        opts.steps > 1 ? static_cast<double>(t - 1) / static_cast<double>(opts.steps - 1) : 0.0;
    const double lr = opts.learning_rate * std::pow(opts.final_lr_fraction, progress);
    for (std::size_t j = 0; j < 2 * d; ++j) {
      m1[j] = opts.beta1 * m1[j] + (1.0 - opts.beta1) * g[j];
      m2[j] = opts.beta2 * m2[j] + (1.0 - opts.beta2) * g[j] * g[j];
      const double step =
          lr * (m1[j] / bc1) / (std::sqrt(m2[j] / bc2) + opts.adam_eps);
      if (j < d) {
        q.mean[j] += step;
      } else {
        q.log_std[j - d] += step;
      }
    }
  }
  return res;
}

/// J draws for model averaging. HMC draws are thinned at an even stride
/// floor(available / J) starting from the first draw; variational draws are
/// fresh reparameterized samples.
inline PosteriorSamples draw_posterior(const PosteriorSamples& hmc, std::size_t j) {
  if (j < 1) throw InvalidInput("draw_posterior: J must be >= 1");
  if (hmc.count() < j) {
    throw InvalidInput("draw_posterior: requested " + std::to_string(j) + " draws from " +
                       std::to_string(hmc.count()) + " HMC samples");
  }
  const std::size_t stride = hmc.count() / j;
  PosteriorSamples out = hmc;
  out.draws = DenseMatrix(j, hmc.dim());
  for (std::size_t r = 0; r < j; ++r) {
    auto src = hmc.draws.row(r * stride);
    std::copy(src.begin(), src.end(), out.draws.row(r).begin());
  }
  return out;
}

inline std::size_t thinning_stride(std::size_t available, std::size_t j) {
  return j == 0 ? 0 : available / j;
}

inline PosteriorSamples draw_posterior(const VariationalParams& q, std::size_t j,
                                       RngStream& rng) {
  if (j < 1) throw InvalidInput("draw_posterior: J must be >= 1");
  PosteriorSamples out;
  out.source = PosteriorSamples::Source::Vi;
  out.draws = DenseMatrix(j, q.dim());
  Vector eps(q.dim());
  for (std::size_t r = 0; r < j; ++r) detail::draw_reparameterized(q, rng, eps, out.draws.row(r));
  return out;
}

}  // namespace asbnn

#endif  // ASBNN_INFERENCE_VI_HPP
