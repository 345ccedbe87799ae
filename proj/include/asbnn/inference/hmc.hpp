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

#ifndef ASBNN_INFERENCE_HMC_HPP
#define ASBNN_INFERENCE_HMC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asbnn/error.hpp"
#include "asbnn/inference/posterior.hpp"
#include "asbnn/numerics/dense_matrix.hpp"
#include "asbnn/numerics/rng.hpp"

namespace asbnn {

struct PosteriorSamples {
  enum class Source { Hmc, Vi };
  DenseMatrix draws;  // J x dim
  Source source = Source::Hmc;
  double acceptance_rate = 0.0;  // mean Metropolis acceptance probability (HMC)
  double step_size = 0.0;

  std::size_t count() const noexcept { return draws.rows(); }
  std::size_t dim() const noexcept { return draws.cols(); }
};

struct HmcOptions {
  std::size_t leapfrog_steps = 20;
  std::size_t warmup = 1000;
  std::size_t samples = 1000;
  double target_accept = 0.8;
  std::optional<double> step_size;  // unset: heuristic initial step
  bool adapt = true;                // dual averaging during warmup
  std::size_t max_consecutive_rejects = 500;
  // Each iteration uses eps * (1 + step_jitter * u), u ~ U[-1, 1]. Breaks the
  // periodic orbits a fixed trajectory length hits on near-Gaussian targets.
  double step_jitter = 0.2;
};

namespace detail {

struct PhasePoint {
  Vector q, p, grad;
  double log_density = 0.0;
};

inline double kinetic(std::span<const double> p) { return 0.5 * dot(p, p); }

inline double hamiltonian(const PhasePoint& s) {
  return -s.log_density + kinetic(s.p);
}

}  // namespace detail

/// L leapfrog steps of size eps from (q, p). The state's grad/log_density
/// must be current on entry and are current on exit. A non-finite density
/// stops the trajectory early and leaves log_density at -inf.
inline void leapfrog(const TargetDensity& target, detail::PhasePoint& s, double eps,
                     std::size_t steps) {
  const std::size_t d = s.q.size();
  for (std::size_t l = 0; l < steps; ++l) {
    for (std::size_t j = 0; j < d; ++j) s.p[j] += 0.5 * eps * s.grad[j];
    for (std::size_t j = 0; j < d; ++j) s.q[j] += eps * s.p[j];
    try {
      s.log_density = target.log_density_grad(s.q, s.grad);
    } catch (const NumericError&) {
      s.log_density = -std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(s.log_density)) {
      s.log_density = -std::numeric_limits<double>::infinity();
      return;
    }
    for (std::size_t j = 0; j < d; ++j) s.p[j] += 0.5 * eps * s.grad[j];
  }
}

/// Energy change H(end) - H(start) of one deterministic leapfrog trajectory
/// with momentum p0. Exposed for integrator tests.
inline double leapfrog_energy_error(const TargetDensity& target, std::span<const double> q0,
                                    std::span<const double> p0, double eps, std::size_t steps) {
  detail::PhasePoint s{Vector(q0.begin(), q0.end()), Vector(p0.begin(), p0.end()),
                       Vector(q0.size()), 0.0};
  s.log_density = target.log_density_grad(s.q, s.grad);
  const double h0 = detail::hamiltonian(s);
  leapfrog(target, s, eps, steps);
  return detail::hamiltonian(s) - h0;
}

namespace detail {

inline double accept_probability(const TargetDensity& target, const PhasePoint& cur,
                                 PhasePoint& prop, double eps, std::size_t steps) {
  leapfrog(target, prop, eps, steps);
  const double dh = hamiltonian(prop) - hamiltonian(cur);
  if (!std::isfinite(dh)) return 0.0;
  return std::min(1.0, std::exp(-dh));
}

/// Doubles or halves eps from 1 until the one-step acceptance crosses 1/2.
inline double initial_step_size(const TargetDensity& target, const PhasePoint& cur,
                                RngStream& rng) {
  double eps = 1.0;
  PhasePoint start = cur;
  for (double& v : start.p) v = rng.normal();
  PhasePoint prop = start;
  double a = accept_probability(target, start, prop, eps, 1);
  const double dir = a > 0.5 ? 1.0 : -1.0;
  for (int it = 0; it < 100; ++it) {
    if (dir > 0 ? !(a > 0.5) : !(a < 0.5)) break;
    eps *= dir > 0 ? 2.0 : 0.5;
    prop = start;
    a = accept_probability(target, start, prop, eps, 1);
  }
  return eps;
}

}  // namespace detail

/// Metropolis-corrected leapfrog HMC with unit mass matrix. During warmup the
/// step size follows the dual-averaging scheme of Hoffman and Gelman (2014)
/// toward `target_accept`; afterwards it is frozen at the averaged value.
/// Only post-warmup draws are returned.
inline PosteriorSamples hmc_run(const TargetDensity& target, std::span<const double> init,
                                const HmcOptions& opts, RngStream& rng) {
  if (opts.leapfrog_steps < 1) throw InvalidInput("hmc_run: leapfrog steps must be >= 1");
  if (opts.samples < 1) throw InvalidInput("hmc_run: need at least one sample");
  if (init.size() != target.dim) throw DimensionError("hmc_run: init length != target dim");
  if (!(opts.step_jitter >= 0.0 && opts.step_jitter < 1.0)) {
    throw InvalidInput("hmc_run: step jitter must be in [0, 1)");
  }
  const std::size_t d = target.dim;

  detail::PhasePoint cur{Vector(init.begin(), init.end()), Vector(d, 0.0), Vector(d), 0.0};
  cur.log_density = target.log_density_grad(cur.q, cur.grad);
  if (!std::isfinite(cur.log_density)) {
    throw NonFiniteDensity("hmc_run: initial point has non-finite density", cur.q);
  }

  double eps = opts.step_size ? *opts.step_size : detail::initial_step_size(target, cur, rng);
  // Dual-averaging state.
  const double mu = std::log(10.0 * std::max(eps, 1e-12));
  constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
  double h_bar = 0.0, log_eps_bar = 0.0;
  const bool adapt = opts.adapt && opts.warmup > 0;

  PosteriorSamples out;
  out.source = PosteriorSamples::Source::Hmc;
  out.draws = DenseMatrix(opts.samples, d);
  double accept_sum = 0.0;
  std::size_t rejects_in_row = 0;
  const std::size_t total = opts.warmup + opts.samples;
  detail::PhasePoint prop;
  for (std::size_t it = 0; it < total; ++it) {
    for (double& v : cur.p) v = rng.normal();
    prop = cur;
    const double eps_it =
        opts.step_jitter > 0.0 ? eps * (1.0 + opts.step_jitter * (2.0 * rng.uniform() - 1.0)) : eps;
    const double alpha =
        detail::accept_probability(target, cur, prop, eps_it, opts.leapfrog_steps);
    const bool accept = rng.uniform() < alpha;
    if (accept) {
      cur = prop;
      rejects_in_row = 0;
    } else if (++rejects_in_row >= opts.max_consecutive_rejects) {
      throw SamplerStuck("hmc_run: " + std::to_string(rejects_in_row) +
                         " consecutive rejections (step size " + std::to_string(eps) + ")");
    }

    if (it < opts.warmup) {
      if (adapt) {
        const double m = static_cast<double>(it + 1);
        h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (opts.target_accept - alpha) / (m + t0);
        const double log_eps = mu - std::sqrt(m) / gamma * h_bar;
        const double w = std::pow(m, -kappa);
        log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
        eps = std::exp(log_eps);
        if (it + 1 == opts.warmup) eps = std::exp(log_eps_bar);
      }
      continue;
    }
    accept_sum += alpha;
    auto row = out.draws.row(it - opts.warmup);
    std::copy(cur.q.begin(), cur.q.end(), row.begin());
  }
  out.acceptance_rate = accept_sum / static_cast<double>(opts.samples);
  out.step_size = eps;
  return out;
}

}  // namespace asbnn

#endif  // ASBNN_INFERENCE_HMC_HPP
