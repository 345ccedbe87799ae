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

#ifndef ASBNN_INFERENCE_POSTERIOR_HPP
#define ASBNN_INFERENCE_POSTERIOR_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "asbnn/data/dataset.hpp"
#include "asbnn/error.hpp"
#include "asbnn/network/mlp.hpp"
#include "asbnn/subspace/projection.hpp"

namespace asbnn {

/// Observation noise of the Gaussian likelihood.
///  - HeadVariance: per-point variance from the network's variance head.
///  - GlobalLogNoise: one extra inferred coordinate s = log(sigma) appended
///    after z, v = exp(2 s), prior s ~ N(log_noise_mean, log_noise_std^2).
///  - Fixed: constant variance `fixed_variance`.
struct NoiseModel {
  enum class Kind { HeadVariance, GlobalLogNoise, Fixed };
  Kind kind = Kind::HeadVariance;
  double fixed_variance = 1.0;
  double log_noise_mean = std::log(0.5);
  double log_noise_std = 1.0;

  static NoiseModel head() { return {}; }
  static NoiseModel global() { return {Kind::GlobalLogNoise}; }
  static NoiseModel fixed(double variance) { return {Kind::Fixed, variance}; }

  /// Default for a network: the head variance when present, otherwise a
  /// global log-noise coordinate.
  static NoiseModel for_head(OutputHead head) {
    return head == OutputHead::MeanVariance ? NoiseModel::head() : NoiseModel::global();
  }

  std::size_t extra_dims() const { return kind == Kind::GlobalLogNoise ? 1 : 0; }
};

/// Log density over R^dim with its gradient. `log_density_grad` writes the
/// gradient into its second argument and returns the log density.
struct TargetDensity {
  std::size_t dim = 0;
  std::function<double(std::span<const double>, std::span<double>)> log_density_grad;

  double log_density(std::span<const double> x) const {
    std::vector<double> scratch(dim);
    return log_density_grad(x, scratch);
  }
};

inline double gaussian_log_density(double y, double mean, double variance) {
  const double r = y - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * r * r / variance;
}

/// Posterior over subspace coordinates:
///   log p(z | D) = sum_i log N(y_i; mu_theta(x_i), v_i) + log N(z; 0, s^2 I)
/// with theta = anchor + P z. Stateless between calls and safe to evaluate
/// concurrently.
class SubspacePosterior {
 public:
  SubspacePosterior(const SubspaceModel& model, const MlpConfig& config,
                    const Dataset& data, NoiseModel noise)
      : model_(model), config_(config), data_(data), noise_(noise) {
    model_.validate();
    if (model_.anchor.size() != param_count(config_)) {
      throw DimensionError("SubspacePosterior: anchor length != network parameter count");
    }
    if (noise_.kind == NoiseModel::Kind::HeadVariance &&
        config_.head != OutputHead::MeanVariance) {
      throw InvalidInput("SubspacePosterior: head-variance noise needs a variance head");
    }
    if (noise_.kind == NoiseModel::Kind::Fixed && !(noise_.fixed_variance > 0.0)) {
      throw NumericDomainError("SubspacePosterior: fixed variance must be > 0");
    }
    if (!data_.empty() && data_.dim() != config_.input_dim) {
      throw DimensionError("SubspacePosterior: dataset feature count != network input");
    }
  }

  std::size_t k() const noexcept { return model_.k(); }
  std::size_t dim() const noexcept { return model_.k() + noise_.extra_dims(); }
  const SubspaceModel& model() const noexcept { return model_; }
  const MlpConfig& config() const noexcept { return config_; }
  const NoiseModel& noise() const noexcept { return noise_; }
  const Dataset& data() const noexcept { return data_; }

  /// Per-coordinate prior means and standard deviations.
  Vector prior_mean() const {
    Vector m(dim(), 0.0);
    if (noise_.extra_dims()) m.back() = noise_.log_noise_mean;
    return m;
  }
  Vector prior_std() const {
    Vector s(dim(), model_.prior_std);
    if (noise_.extra_dims()) s.back() = noise_.log_noise_std;
    return s;
  }

  /// Data term only. `grad` (length dim()) receives its gradient when
  /// non-empty.
  double log_likelihood(std::span<const double> z, std::span<double> grad = {}) const {
    check(z);
    const std::size_t k = this->k();
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != dim()) {
      throw DimensionError("log_likelihood: gradient buffer length");
    }
    ParamVector theta(model_.anchor.size());
    model_.proj.embed_into(model_.anchor, z.first(k), theta);

    double noise_var = noise_.fixed_variance;
    if (noise_.kind == NoiseModel::Kind::GlobalLogNoise) noise_var = std::exp(2.0 * z[k]);

    MlpWorkspace ws(config_);
    Vector g_theta(want_grad ? theta.size() : 0, 0.0);
    double total = 0.0, d_log_noise = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const NetOutput out = ws.forward(theta, data_.x(i));
      const double r = data_.y(i) - out.mean;
      double v = noise_var, d_mean = 0.0, d_var = 0.0;
      if (noise_.kind == NoiseModel::Kind::HeadVariance) v = *out.variance;
      total += gaussian_log_density(data_.y(i), out.mean, v);
      if (!want_grad) continue;
      d_mean = r / v;
      if (noise_.kind == NoiseModel::Kind::HeadVariance) {
        d_var = -0.5 / v + 0.5 * r * r / (v * v);
      } else if (noise_.kind == NoiseModel::Kind::GlobalLogNoise) {
        d_log_noise += -1.0 + r * r / v;
      }
      ws.backward(theta, d_mean, d_var, g_theta);
    }
    if (!std::isfinite(total)) {
      throw NonFiniteDensity("log_likelihood: non-finite value at z", Vector(z.begin(), z.end()));
    }
    if (want_grad) {
      model_.proj.pullback_into(g_theta, grad.first(k));
      if (noise_.extra_dims()) grad[k] = d_log_noise;
    }
    return total;
  }

  /// Gaussian prior term; adds its gradient into `grad` when non-empty.
  double log_prior(std::span<const double> z, std::span<double> grad = {}) const {
    check(z);
    const Vector m = prior_mean(), s = prior_std();
    double lp = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      lp += gaussian_log_density(z[j], m[j], s[j] * s[j]);
      if (!grad.empty()) grad[j] += -(z[j] - m[j]) / (s[j] * s[j]);
    }
    return lp;
  }

  double log_posterior(std::span<const double> z) const {
    return log_likelihood(z) + log_prior(z);
  }

  /// Returns log p(z | D) up to a constant and writes its gradient.
  double log_posterior_grad(std::span<const double> z, std::span<double> grad) const {
    const double ll = log_likelihood(z, grad);
    return ll + log_prior(z, grad);
  }

  Vector grad_log_posterior(std::span<const double> z) const {
    Vector g(dim());
    log_posterior_grad(z, g);
    return g;
  }

  TargetDensity target() const {
    return {dim(), [this](std::span<const double> z, std::span<double> g) {
              return log_posterior_grad(z, g);
            }};
  }

  /// Likelihood-only density (used with a closed-form KL by variational fits).
  TargetDensity likelihood_target() const {
    return {dim(), [this](std::span<const double> z, std::span<double> g) {
              return log_likelihood(z, g);
            }};
  }

 private:
  void check(std::span<const double> z) const {
    if (z.size() != dim()) {
      throw DimensionError("subspace posterior: z has " + std::to_string(z.size()) +
                           " entries, expected " + std::to_string(dim()));
    }
  }

  SubspaceModel model_;
  MlpConfig config_;
  const Dataset& data_;
  NoiseModel noise_;
};

}  // namespace asbnn

#endif  // ASBNN_INFERENCE_POSTERIOR_HPP
