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

#ifndef ASBNN_METRICS_METRICS_HPP
#define ASBNN_METRICS_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asbnn/error.hpp"
#include "asbnn/inference/bma.hpp"

namespace asbnn {

inline void check_lengths(std::span<const PredictiveMixture> mixtures,
                          std::span<const double> targets, const char* who) {
  if (mixtures.size() != targets.size()) {
    throw InvalidInput(std::string(who) + ": " + std::to_string(mixtures.size()) +
                       " predictions for " + std::to_string(targets.size()) + " targets");
  }
  if (mixtures.empty()) throw InvalidInput(std::string(who) + ": no test points");
}

/// Root mean squared error of the mixture means.
inline double rmse(std::span<const PredictiveMixture> mixtures, std::span<const double> targets) {
  check_lengths(mixtures, targets, "rmse");
  double ss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double r = mixtures[i].mean() - targets[i];
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(targets.size()));
}

/// log[(1/J) sum_j N(y; mu_j, v_j)] by log-sum-exp.
inline double mixture_log_density(const PredictiveMixture& mix, double y) {
  if (mix.components() == 0) throw InvalidInput("mixture_log_density: empty mixture");
  std::vector<double> terms(mix.components());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < mix.components(); ++j) {
    const double v = mix.variances[j];
    if (!(v > 0.0)) {
      throw NumericDomainError("mixture_log_density: component variance must be > 0");
    }
    terms[j] = gaussian_log_density(y, mix.means[j], v);
    top = std::max(top, terms[j]);
  }
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s / static_cast<double>(terms.size()));
}

/// Mean over test points of the mixture log density.
inline double avg_log_likelihood(std::span<const PredictiveMixture> mixtures,
                                 std::span<const double> targets) {
  check_lengths(mixtures, targets, "avg_log_likelihood");
  double s = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) s += mixture_log_density(mixtures[i], targets[i]);
  return s / static_cast<double>(targets.size());
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Mixture CDF. Zero-variance components are point masses; infinite-variance
/// components contribute 1/2 everywhere.
inline double mixture_cdf(const PredictiveMixture& mix, double y) {
  double s = 0.0;
  for (std::size_t j = 0; j < mix.components(); ++j) {
    const double v = mix.variances[j];
    if (std::isinf(v)) {
      s += 0.5;
    } else if (v == 0.0) {
      s += y >= mix.means[j] ? 1.0 : 0.0;
    } else {
      s += normal_cdf((y - mix.means[j]) / std::sqrt(v));
    }
  }
  return s / static_cast<double>(mix.components());
}

/// q-quantile of the mixture by bisection on its CDF; the bracket is refined
/// until it is narrower than `tol`. Returns +-inf when infinite-variance
/// components hold the tail mass.
inline double mixture_quantile(const PredictiveMixture& mix, double q, double tol = 1e-6) {
  if (mix.components() == 0) throw InvalidInput("mixture_quantile: empty mixture");
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("mixture_quantile: q must be in (0, 1)");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t infinite = 0;
  for (std::size_t j = 0; j < mix.components(); ++j) {
    const double m = mix.means[j], v = mix.variances[j];
    if (!std::isfinite(m) || std::isnan(v) || v < 0.0) {
      throw NumericError("mixture_quantile: invalid component");
    }
    if (std::isinf(v)) {
      ++infinite;
      continue;
    }
    const double w = 40.0 * std::sqrt(v);
    lo = std::min(lo, m - w - 1.0);
    hi = std::max(hi, m + w + 1.0);
  }
  const double tail = 0.5 * static_cast<double>(infinite) / static_cast<double>(mix.components());
  if (q <= tail) return -std::numeric_limits<double>::infinity();
  if (q >= 1.0 - tail) return std::numeric_limits<double>::infinity();
  if (!(mixture_cdf(mix, lo) <= q && mixture_cdf(mix, hi) >= q)) {
    throw NumericError("mixture_quantile: bisection bracket does not contain the quantile");
  }
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (mixture_cdf(mix, mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Central 95% interval [q_0.025, q_0.975] of the mixture.
inline std::pair<double, double> central_interval95(const PredictiveMixture& mix) {
  return {mixture_quantile(mix, 0.025), mixture_quantile(mix, 0.975)};
}

/// Fraction of targets inside their mixture's central 95% interval.
inline double coverage95(std::span<const PredictiveMixture> mixtures,
                         std::span<const double> targets) {
  check_lengths(mixtures, targets, "coverage95");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto [lo, hi] = central_interval95(mixtures[i]);
    if (lo <= targets[i] && targets[i] <= hi) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(targets.size());
}

/// Test-set metrics of one trial. Log-likelihoods are densities of the
/// original-unit targets (the standardization Jacobian is applied).
struct EvalReport {
  double rmse = 0.0;
  double avg_log_lik = 0.0;
  double coverage95 = 0.0;
  std::size_t n_test = 0;
  std::map<std::string, std::string> metadata;
};

/// Scores mixtures given in standardized units against original-unit
/// targets.
inline EvalReport evaluate(std::span<const PredictiveMixture> standardized,
                           std::span<const double> targets_original, const Scaler& scaler) {
  std::vector<PredictiveMixture> orig;
  orig.reserve(standardized.size());
  for (const auto& m : standardized) orig.push_back(m.destandardized(scaler));
  EvalReport r;
  r.rmse = rmse(orig, targets_original);
  r.avg_log_lik = avg_log_likelihood(orig, targets_original);
  r.coverage95 = coverage95(orig, targets_original);
  r.n_test = targets_original.size();
  r.metadata["log_likelihood_units"] = "original";
  return r;
}

}  // namespace asbnn

#endif  // ASBNN_METRICS_METRICS_HPP
