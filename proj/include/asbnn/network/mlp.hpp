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

#ifndef ASBNN_NETWORK_MLP_HPP
#define ASBNN_NETWORK_MLP_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asbnn/error.hpp"
#include "asbnn/numerics/dense_matrix.hpp"
#include "asbnn/numerics/rng.hpp"

namespace asbnn {

enum class Activation { Tanh, Relu };

/// ScalarMean emits mu only; MeanVariance emits (mu, raw) with
/// v = softplus(raw) + kVarianceFloor.
enum class OutputHead { ScalarMean, MeanVariance };

inline constexpr double kVarianceFloor = 1e-6;

/// Scalar functions of one example whose parameter gradients the library
/// computes. OutputMean needs no label.
enum class GradTarget { OutputMean, MseLoss, GaussianNll, StandardizedSqResidual };

inline bool needs_label(GradTarget t) { return t != GradTarget::OutputMean; }
inline bool needs_variance(GradTarget t) {
  return t == GradTarget::GaussianNll || t == GradTarget::StandardizedSqResidual;
}

struct MlpConfig {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden;
  OutputHead head = OutputHead::ScalarMean;
  Activation activation = Activation::Tanh;

  std::size_t output_dim() const {
    return head == OutputHead::MeanVariance ? 2 : 1;
  }

  /// [input, hidden..., output]
  std::vector<std::size_t> layer_sizes() const {
    std::vector<std::size_t> sizes;
    sizes.reserve(hidden.size() + 2);
    sizes.push_back(input_dim);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(output_dim());
    return sizes;
  }

  void validate() const {
    if (input_dim == 0) throw InvalidInput("MlpConfig: input_dim must be >= 1");
    for (std::size_t w : hidden) {
      if (w == 0) throw InvalidInput("MlpConfig: hidden widths must be >= 1");
    }
  }

  bool operator==(const MlpConfig&) const = default;
};

/// Flattened layer-major parameters: for each layer, W (out x in, row-major)
/// followed by b (out).
using ParamVector = std::vector<double>;

inline std::size_t param_count(const MlpConfig& config) {
  config.validate();
  const auto sizes = config.layer_sizes();
  std::size_t n = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    n += sizes[l - 1] * sizes[l] + sizes[l];
  }
  return n;
}

/// Weights ~ N(0, 1/fan_in), biases zero.
inline ParamVector init_params(const MlpConfig& config, RngStream& rng) {
  ParamVector theta(param_count(config), 0.0);
  const auto sizes = config.layer_sizes();
  std::size_t off = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const std::size_t in = sizes[l - 1], out = sizes[l];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (std::size_t k = 0; k < in * out; ++k) theta[off + k] = scale * rng.normal();
    off += in * out + out;
  }
  return theta;
}

struct NetOutput {
  double mean = 0.0;
  std::optional<double> variance;
};

namespace detail {

template <class T>
T softplus(T x) {
  using std::exp;
  using std::log1p;
  return (x > T(0) ? x : T(0)) + log1p(exp(-(x > T(0) ? x : -x)));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <class T>
T activate(Activation a, T x) {
  using std::tanh;
  return a == Activation::Tanh ? tanh(x) : (x > T(0) ? x : T(0));
}

inline void check_shapes(const MlpConfig& config, std::size_t theta_size,
                         std::size_t x_size) {
  if (x_size != config.input_dim) {
    throw DimensionError("mlp: input has " + std::to_string(x_size) +
                         " features, config expects " +
                         std::to_string(config.input_dim));
  }
  if (theta_size != param_count(config)) {
    throw DimensionError("mlp: parameter vector has " +
                         std::to_string(theta_size) + " entries, config needs " +
                         std::to_string(param_count(config)));
  }
}

}  // namespace detail

/// Raw network outputs (mu, and the pre-softplus variance logit when the
/// head has one) in arbitrary floating precision.
template <class T>
std::vector<T> forward_raw(const MlpConfig& config, std::span<const T> theta,
                           std::span<const double> x) {
  detail::check_shapes(config, theta.size(), x.size());
  const auto sizes = config.layer_sizes();
  std::vector<T> a(x.begin(), x.end());
  std::vector<T> next;
  std::size_t off = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const std::size_t in = sizes[l - 1], out = sizes[l];
    const bool last = l + 1 == sizes.size();
    next.assign(out, T(0));
    for (std::size_t o = 0; o < out; ++o) {
      T s = theta[off + in * out + o];
      const T* w = theta.data() + off + o * in;
      for (std::size_t i = 0; i < in; ++i) s += w[i] * a[i];
      next[o] = last ? s : detail::activate(config.activation, s);
    }
    a.swap(next);
    off += in * out + out;
  }
  return a;
}

template <class T>
T variance_from_raw(T raw) {
  return detail::softplus(raw) + T(kVarianceFloor);
}

inline NetOutput forward(const MlpConfig& config, std::span<const double> theta,
                         std::span<const double> x) {
  const auto raw = forward_raw<double>(config, theta, x);
  NetOutput out{raw[0], std::nullopt};
  if (config.head == OutputHead::MeanVariance) out.variance = variance_from_raw(raw[1]);
  return out;
}

/// Value of a GradTarget from the network outputs, templated so the same
/// formula serves the high-precision finite-difference checks.
template <class T>
T target_from_outputs(GradTarget target, T mean, std::optional<T> variance,
                      std::optional<double> y) {
  if (needs_label(target) && !y) {
    throw InvalidInput("scalar_target: target requires a label");
  }
  if (needs_variance(target)) {
    if (!variance) {
      throw InvalidInput("scalar_target: target requires a variance head");
    }
    if (!(*variance > T(0))) {
      throw NumericDomainError("scalar_target: variance must be > 0");
    }
  }
  using std::log;
  switch (target) {
    case GradTarget::OutputMean:
      return mean;
    case GradTarget::MseLoss: {
      const T r = T(*y) - mean;
      return r * r;
    }
    case GradTarget::GaussianNll: {
      const T r = T(*y) - mean;
      return T(0.5) * log(T(2) * std::numbers::pi_v<T> * *variance) +
             r * r / (T(2) * *variance);
    }
    case GradTarget::StandardizedSqResidual: {
      const T r = T(*y) - mean;
      return r * r / *variance;
    }
  }
  return T(0);
}

template <class T>
T scalar_target_t(const MlpConfig& config, std::span<const T> theta,
                  std::span<const double> x, std::optional<double> y,
                  GradTarget target) {
  const auto raw = forward_raw<T>(config, theta, x);
  std::optional<T> v;
  if (config.head == OutputHead::MeanVariance) v = variance_from_raw(raw[1]);
  return target_from_outputs<T>(target, raw[0], v, y);
}

inline double scalar_target(const MlpConfig& config,
                            std::span<const double> theta,
                            std::span<const double> x, std::optional<double> y,
                            GradTarget target) {
  return scalar_target_t<double>(config, theta, x, y, target);
}

/// Derivatives of a target with respect to (mu, v).
struct OutputAdjoint {
  double value = 0.0;
  double d_mean = 0.0;
  double d_variance = 0.0;
};

inline OutputAdjoint target_adjoint(GradTarget target, const NetOutput& out,
                                    std::optional<double> y) {
  OutputAdjoint adj;
  adj.value = target_from_outputs<double>(target, out.mean, out.variance, y);
  switch (target) {
    case GradTarget::OutputMean:
      adj.d_mean = 1.0;
      break;
    case GradTarget::MseLoss:
      adj.d_mean = -2.0 * (*y - out.mean);
      break;
    case GradTarget::GaussianNll: {
      const double r = *y - out.mean, v = *out.variance;
      adj.d_mean = -r / v;
      adj.d_variance = 0.5 / v - 0.5 * r * r / (v * v);
      break;
    }
    case GradTarget::StandardizedSqResidual: {
      const double r = *y - out.mean, v = *out.variance;
      adj.d_mean = -2.0 * r / v;
      adj.d_variance = -r * r / (v * v);
      break;
    }
  }
  return adj;
}

/// Reusable forward/backward buffers for one network. Not thread-safe; give
/// each worker its own.
class MlpWorkspace {
 public:
  explicit MlpWorkspace(const MlpConfig& config)
      : config_(config), sizes_(config.layer_sizes()), n_(asbnn::param_count(config)) {
    acts_.resize(sizes_.size());
    for (std::size_t l = 0; l < sizes_.size(); ++l) acts_[l].resize(sizes_[l]);
    delta_.resize(sizes_.size());
    for (std::size_t l = 0; l < sizes_.size(); ++l) delta_[l].resize(sizes_[l]);
  }

  const MlpConfig& config() const noexcept { return config_; }
  std::size_t param_count() const noexcept { return n_; }

  /// Forward pass that keeps post-activations for the backward pass.
  NetOutput forward(std::span<const double> theta, std::span<const double> x) {
    detail::check_shapes(config_, theta.size(), x.size());
    std::copy(x.begin(), x.end(), acts_[0].begin());
    std::size_t off = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
      const std::size_t in = sizes_[l - 1], out = sizes_[l];
      const bool last = l + 1 == sizes_.size();
      const double* a = acts_[l - 1].data();
      for (std::size_t o = 0; o < out; ++o) {
        double s = theta[off + in * out + o];
        const double* w = theta.data() + off + o * in;
        for (std::size_t i = 0; i < in; ++i) s += w[i] * a[i];
        acts_[l][o] = last ? s : detail::activate(config_.activation, s);
      }
      off += in * out + out;
    }
    const auto& raw = acts_.back();
    NetOutput res{raw[0], std::nullopt};
    if (config_.head == OutputHead::MeanVariance) {
      res.variance = variance_from_raw(raw[1]);
    }
    return res;
  }

  /// Adds d(target)/d(theta) to `grad` given adjoints of (mu, v) at the most
  /// recent forward() call.
  void backward(std::span<const double> theta, double d_mean,
                double d_variance, std::span<double> grad) {
    if (grad.size() != n_) throw DimensionError("mlp backward: grad length");
    const std::size_t L = sizes_.size() - 1;
    delta_[L][0] = d_mean;
    if (config_.head == OutputHead::MeanVariance) {
      delta_[L][1] = d_variance * detail::sigmoid(acts_[L][1]);
    }
    std::size_t off = n_;
    for (std::size_t l = L; l >= 1; --l) {
      const std::size_t in = sizes_[l - 1], out = sizes_[l];
      off -= in * out + out;
      const double* a = acts_[l - 1].data();
      const double* d = delta_[l].data();
      double* gw = grad.data() + off;
      double* gb = grad.data() + off + in * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        gb[o] += dv;
        double* row = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) row[i] += dv * a[i];
      }
      if (l == 1) break;
      // Propagate to the previous layer's post-activation, then through the
      // activation derivative.
      auto& dprev = delta_[l - 1];
      std::fill(dprev.begin(), dprev.end(), 0.0);
      const double* w = theta.data() + off;
      for (std::size_t o = 0; o < out; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        const double* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i) dprev[i] += dv * row[i];
      }
      for (std::size_t i = 0; i < in; ++i) {
        const double h = acts_[l - 1][i];
        dprev[i] *= config_.activation == Activation::Tanh ? 1.0 - h * h
                                                            : (h > 0.0 ? 1.0 : 0.0);
      }
    }
  }

 private:
  MlpConfig config_;
  std::vector<std::size_t> sizes_;
  std::size_t n_;
  std::vector<Vector> acts_;
  std::vector<Vector> delta_;
};

/// Exact reverse-mode gradient of scalar_target with respect to theta.
inline Vector backprop_param_grad(const MlpConfig& config,
                                  std::span<const double> theta,
                                  std::span<const double> x,
                                  std::optional<double> y, GradTarget target) {
  MlpWorkspace ws(config);
  const NetOutput out = ws.forward(theta, x);
  const OutputAdjoint adj = target_adjoint(target, out, y);
  Vector grad(ws.param_count(), 0.0);
  ws.backward(theta, adj.d_mean, adj.d_variance, grad);
  return grad;
}

}  // namespace asbnn

#endif  // ASBNN_NETWORK_MLP_HPP
