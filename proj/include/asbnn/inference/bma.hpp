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

#ifndef ASBNN_INFERENCE_BMA_HPP
#define ASBNN_INFERENCE_BMA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "asbnn/data/dataset.hpp"
#include "asbnn/error.hpp"
#include "asbnn/inference/hmc.hpp"
#include "asbnn/inference/posterior.hpp"
#include "asbnn/network/mlp.hpp"
#include "asbnn/numerics/parallel.hpp"
#include "asbnn/subspace/projection.hpp"

namespace asbnn {

/// Equal-weight Gaussian mixture for one test input.
struct PredictiveMixture {
  Vector means;
  Vector variances;

  std::size_t components() const noexcept { return means.size(); }

  double mean() const {
    double s = 0.0;
    for (double m : means) s += m;
    return s / static_cast<double>(means.size());
  }

  /// (1/J) sum (v_j + mu_j^2) - mean^2, evaluated as mean(v) + mean((mu - mean)^2).
  double variance() const {
    const double mu = mean();
    double s = 0.0;
    for (std::size_t j = 0; j < means.size(); ++j) {
      const double d = means[j] - mu;
      s += variances[j] + d * d;
    }
    return std::max(0.0, s / static_cast<double>(means.size()));
  }

  /// Map from standardized to original target units.
  PredictiveMixture destandardized(const Scaler& sc) const {
    PredictiveMixture out = *this;
    for (std::size_t j = 0; j < means.size(); ++j) {
      out.means[j] = sc.target_inverse(means[j]);
      out.variances[j] = sc.variance_inverse(variances[j]);
    }
    return out;
  }
};

/// Per-draw network evaluations shared by BMA prediction and plot emission.
class BmaPredictor {
 public:
  BmaPredictor(const SubspaceModel& model, const MlpConfig& config, NoiseModel noise,
               const PosteriorSamples& samples)
      : config_(config), noise_(noise) {
    model.validate();
    const std::size_t k = model.k();
    if (samples.dim() != k + noise.extra_dims()) {
      throw DimensionError("bma_predictive: sample dimension " + std::to_string(samples.dim()) +
                           " != subspace dimension " + std::to_string(k + noise.extra_dims()));
    }
    if (noise.kind == NoiseModel::Kind::HeadVariance && config.head != OutputHead::MeanVariance) {
      throw InvalidInput("bma_predictive: head-variance noise needs a variance head");
    }
    thetas_.reserve(samples.count());
    for (std::size_t j = 0; j < samples.count(); ++j) {
      auto z = samples.draws.row(j);
      thetas_.push_back(embed(model, z.first(k)));
      noise_var_.push_back(noise.kind == NoiseModel::Kind::GlobalLogNoise
                               ? std::exp(2.0 * z[k])
                               : noise.fixed_variance);
    }
  }

  std::size_t components() const noexcept { return thetas_.size(); }

  PredictiveMixture predict(std::span<const double> x) const {
    PredictiveMixture mix;
    mix.means.resize(thetas_.size());
    mix.variances.resize(thetas_.size());
    MlpWorkspace ws(config_);
    for (std::size_t j = 0; j < thetas_.size(); ++j) {
      const NetOutput out = ws.forward(thetas_[j], x);
      mix.means[j] = out.mean;
      mix.variances[j] =
          noise_.kind == NoiseModel::Kind::HeadVariance ? *out.variance : noise_var_[j];
    }
    return mix;
  }

  std::vector<PredictiveMixture> predict_all(const DenseMatrix& xs, std::size_t threads = 1) const {
    std::vector<PredictiveMixture> out(xs.rows());
    parallel_for(xs.rows(), threads, [&](std::size_t i) { out[i] = predict(xs.row(i)); });
    return out;
  }

 private:
  MlpConfig config_;
  NoiseModel noise_;
  std::vector<ParamVector> thetas_;
  Vector noise_var_;
};

/// Component j is (mu_{theta_j}(x), v_j) with theta_j = embed(model, z_j).
inline PredictiveMixture bma_predictive(const SubspaceModel& model, const PosteriorSamples& samples,
                                        const MlpConfig& config, std::span<const double> x,
                                        NoiseModel noise) {
  return BmaPredictor(model, config, noise, samples).predict(x);
}

/// anchor + P * mean(z). Diagnostic only; reported metrics use the mixture.
inline ParamVector averaged_weight_diagnostic(const SubspaceModel& model,
                                              const PosteriorSamples& samples) {
  if (samples.count() < 1) throw InvalidInput("averaged_weight_diagnostic: no draws");
  const std::size_t k = model.k();
  if (samples.dim() < k) throw DimensionError("averaged_weight_diagnostic: sample dimension");
  Vector zbar(k, 0.0);
  for (std::size_t j = 0; j < samples.count(); ++j) axpy(1.0, samples.draws.row(j).first(k), zbar);
  for (double& v : zbar) v /= static_cast<double>(samples.count());
  return embed(model, zbar);
}

}  // namespace asbnn

#endif  // ASBNN_INFERENCE_BMA_HPP
