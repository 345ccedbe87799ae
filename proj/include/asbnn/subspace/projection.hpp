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

#ifndef ASBNN_SUBSPACE_PROJECTION_HPP
#define ASBNN_SUBSPACE_PROJECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asbnn/data/dataset.hpp"
#include "asbnn/error.hpp"
#include "asbnn/network/mlp.hpp"
#include "asbnn/numerics/dense_matrix.hpp"
#include "asbnn/numerics/linalg.hpp"
#include "asbnn/numerics/parallel.hpp"
#include "asbnn/numerics/rng.hpp"

namespace asbnn {

/// How a projection was built. Full is the identity basis used by the
/// full-network baseline.
enum class ProjectionMethod : std::uint32_t { AS = 0, LIS = 1, PCA = 2, Full = 3 };

inline std::string to_string(ProjectionMethod m) {
  switch (m) {
    case ProjectionMethod::AS: return "AS";
    case ProjectionMethod::LIS: return "LIS";
    case ProjectionMethod::PCA: return "PCA";
    case ProjectionMethod::Full: return "FULL";
  }
  return "?";
}

/// Rows are parameter gradients of one scalar function, one per sampled
/// (theta_m, x_m) pair.
struct GradientMatrix {
  DenseMatrix g;  // M x n
  ProjectionMethod kind = ProjectionMethod::AS;
  double sigma0 = 0.0;
  std::uint64_t seed = 0;

  std::size_t samples() const noexcept { return g.rows(); }
  std::size_t dim() const noexcept { return g.cols(); }
};

/// n x K basis with orthonormal columns plus the leading eigenvalues of the
/// gradient covariance. The identity basis is stored implicitly.
class Projection {
 public:
  Projection() = default;
  Projection(DenseMatrix basis, Vector spectrum, ProjectionMethod method,
             double sigma0 = 0.0, std::uint64_t seed = 0)
      : basis_(std::move(basis)),
        spectrum_(std::move(spectrum)),
        method_(method),
        n_(basis_.rows()),
        k_(basis_.cols()),
        sigma0_(sigma0),
        seed_(seed) {
    if (spectrum_.size() != k_) {
      throw DimensionError("Projection: spectrum length != column count");
    }
  }

  static Projection identity(std::size_t n) {
    Projection p;
    p.method_ = ProjectionMethod::Full;
    p.n_ = p.k_ = n;
    p.spectrum_.assign(n, 1.0);
    p.identity_ = true;
    return p;
  }

  std::size_t dim() const noexcept { return n_; }
  std::size_t rank() const noexcept { return k_; }
  bool is_identity() const noexcept { return identity_; }
  ProjectionMethod method() const noexcept { return method_; }
  const Vector& spectrum() const noexcept { return spectrum_; }
  double sigma0() const noexcept { return sigma0_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Dense basis; materializes the identity when needed.
  DenseMatrix basis() const {
    return identity_ ? DenseMatrix::identity(n_) : basis_;
  }
  const DenseMatrix& stored_basis() const noexcept { return basis_; }

  /// out = anchor + P z
  void embed_into(std::span<const double> anchor, std::span<const double> z,
                  std::span<double> out) const {
    if (z.size() != k_) {
      throw DimensionError("embed: z has " + std::to_string(z.size()) +
                           " entries, subspace has " + std::to_string(k_));
    }
    if (anchor.size() != n_ || out.size() != n_) {
      throw DimensionError("embed: anchor length does not match projection");
    }
    if (identity_) {
      for (std::size_t i = 0; i < n_; ++i) out[i] = anchor[i] + z[i];
      return;
    }
    for (std::size_t i = 0; i < n_; ++i) out[i] = anchor[i] + dot(basis_.row(i), z);
  }

  /// out = P^T g
  void pullback_into(std::span<const double> g, std::span<double> out) const {
    if (g.size() != n_) {
      throw DimensionError("pullback: gradient has " + std::to_string(g.size()) +
                           " entries, parameters have " + std::to_string(n_));
    }
    if (out.size() != k_) throw DimensionError("pullback: output length");
    if (identity_) {
      std::copy(g.begin(), g.end(), out.begin());
      return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      if (g[i] != 0.0) axpy(g[i], basis_.row(i), out);
    }
  }

  bool operator==(const Projection&) const = default;

 private:
  DenseMatrix basis_;
  Vector spectrum_;
  ProjectionMethod method_ = ProjectionMethod::AS;
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  double sigma0_ = 0.0;
  std::uint64_t seed_ = 0;
  bool identity_ = false;
};

/// Affine subspace theta = anchor + P z with prior z ~ N(0, prior_std^2 I).
struct SubspaceModel {
  ParamVector anchor;
  Projection proj;
  double prior_std = 1.0;

  std::size_t k() const noexcept { return proj.rank(); }

  void validate() const {
    if (anchor.size() != proj.dim()) {
      throw DimensionError("SubspaceModel: anchor length != projection rows");
    }
    if (!(prior_std > 0.0)) throw InvalidInput("SubspaceModel: prior std must be > 0");
  }

  /// Full-network baseline: K = n, P = I, anchor = 0.
  static SubspaceModel full(std::size_t n, double prior_std) {
    return {ParamVector(n, 0.0), Projection::identity(n), prior_std};
  }
};

inline ParamVector embed(const SubspaceModel& model, std::span<const double> z) {
  ParamVector theta(model.anchor.size());
  model.proj.embed_into(model.anchor, z, theta);
  return theta;
}

inline Vector pullback_gradient(const SubspaceModel& model,
                                std::span<const double> g_theta) {
  Vector out(model.k());
  model.proj.pullback_into(g_theta, out);
  return out;
}

/// 0.1 x root-mean-square of the anchor weights.
inline double default_sigma0(std::span<const double> anchor) {
  if (anchor.empty()) return 0.0;
  return 0.1 * norm2(anchor) / std::sqrt(static_cast<double>(anchor.size()));
}

/// Function whose gradients define the subspace. AS differentiates the
/// predicted mean. LIS differentiates the squared residual, standardized by
/// the predicted variance when the network has a variance head.
inline GradTarget default_gradient_target(ProjectionMethod kind, OutputHead head) {
  if (kind == ProjectionMethod::AS) return GradTarget::OutputMean;
  if (kind == ProjectionMethod::LIS) {
    return head == OutputHead::MeanVariance ? GradTarget::StandardizedSqResidual
                                            : GradTarget::MseLoss;
  }
  throw InvalidInput("default_gradient_target: only AS and LIS use gradients");
}

struct GradientSampling {
  std::size_t samples = 100;  // M
  double sigma0 = -1.0;       // < 0 selects default_sigma0(anchor)
  std::optional<GradTarget> target;
  std::size_t threads = 1;
};

/// Monte Carlo gradient collection: row m draws (x_m, y_m) uniformly with
/// replacement and theta_m ~ N(anchor, sigma0^2 I) from its own child stream
/// `rng.child(m)`, so rows do not depend on scheduling.
inline GradientMatrix sample_gradient_matrix(ProjectionMethod kind,
                                             const MlpConfig& config,
                                             std::span<const double> anchor,
                                             const Dataset& data,
                                             const GradientSampling& opts,
                                             const RngStream& rng) {
  if (data.empty()) throw InvalidInput("sample_gradient_matrix: empty dataset");
  if (opts.samples == 0) throw InvalidInput("sample_gradient_matrix: M must be >= 1");
  const std::size_t n = param_count(config);
  if (anchor.size() != n) throw DimensionError("sample_gradient_matrix: anchor length");
  const double sigma0 = opts.sigma0 < 0.0 ? default_sigma0(anchor) : opts.sigma0;
  if (!std::isfinite(sigma0)) throw InvalidInput("sample_gradient_matrix: sigma0");
  const GradTarget target = opts.target.value_or(default_gradient_target(kind, config.head));

  GradientMatrix out;
  out.g = DenseMatrix(opts.samples, n);
  out.kind = kind;
  out.sigma0 = sigma0;
  out.seed = rng.seed();
  parallel_for(opts.samples, opts.threads, [&](std::size_t m) {
    RngStream row_rng = rng.child(m);
    const std::size_t i = row_rng.index(data.size());
    ParamVector theta = gaussian_vector(n, 0.0, sigma0, row_rng);
    for (std::size_t j = 0; j < n; ++j) theta[j] += anchor[j];
    MlpWorkspace ws(config);
    const NetOutput net = ws.forward(theta, data.x(i));
    const OutputAdjoint adj = target_adjoint(target, net, data.y(i));
    ws.backward(theta, adj.d_mean, adj.d_variance, out.g.row(m));
  });
  if (!out.g.all_finite()) throw NumericError("sample_gradient_matrix: non-finite gradient");
  return out;
}

/// C = (1/M) G^T G
inline DenseMatrix empirical_covariance(const GradientMatrix& g) {
  if (g.samples() == 0) throw InvalidInput("empirical_covariance: no rows");
  return gram_of_columns(g.g, 1.0 / static_cast<double>(g.samples()));
}

/// Gram routes through the M x M Gram matrix of the rows and never forms the
/// n x n covariance; Direct eigendecomposes the covariance itself.
enum class EigenRoute { Auto, Gram, Direct };

namespace detail {

inline Projection top_k_projection(const DenseMatrix& rows, std::size_t k,
                                   ProjectionMethod method, double sigma0,
                                   std::uint64_t seed, EigenRoute route) {
  const std::size_t m = rows.rows(), n = rows.cols();
  if (k < 1 || k > std::min(m, n)) {
    throw InvalidInput("projection: K=" + std::to_string(k) + " outside [1, min(M=" +
                       std::to_string(m) + ", n=" + std::to_string(n) + ")]");
  }
  if (route == EigenRoute::Auto) route = n > m ? EigenRoute::Gram : EigenRoute::Direct;
  const double inv_m = 1.0 / static_cast<double>(m);

  DenseMatrix basis(n, k);
  Vector spectrum(k);
  if (route == EigenRoute::Gram) {
    const ThinSvd svd = thin_svd(rows);
    for (std::size_t j = 0; j < k; ++j) {
      spectrum[j] = svd.s[j] * svd.s[j] * inv_m;
      for (std::size_t i = 0; i < n; ++i) basis(i, j) = svd.vt(j, i);
    }
  } else {
    const EigDecomposition eig = sym_eig_desc(gram_of_columns(rows, inv_m));
    for (std::size_t j = 0; j < k; ++j) {
      spectrum[j] = std::max(eig.values[j], 0.0);
      for (std::size_t i = 0; i < n; ++i) basis(i, j) = eig.vectors(i, j);
    }
  }
  return Projection(std::move(basis), std::move(spectrum), method, sigma0, seed);
}

}  // namespace detail

/// Top-K eigenvectors of the uncentered gradient covariance.
inline Projection projection_from_gradients(const GradientMatrix& g, std::size_t k,
                                            EigenRoute route = EigenRoute::Auto) {
  return detail::top_k_projection(g.g, k, g.kind, g.sigma0, g.seed, route);
}

/// SGD-PCA baseline: top-K principal directions of iterate deviations about
/// the averaged weights, uncentered like the gradient route.
inline Projection pca_projection_from_deviations(const DenseMatrix& deviations,
                                                 std::size_t k,
                                                 EigenRoute route = EigenRoute::Auto) {
  return detail::top_k_projection(deviations, k, ProjectionMethod::PCA, 0.0, 0, route);
}

}  // namespace asbnn

#endif  // ASBNN_SUBSPACE_PROJECTION_HPP
