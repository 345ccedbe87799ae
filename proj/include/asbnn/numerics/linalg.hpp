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

#ifndef ASBNN_NUMERICS_LINALG_HPP
#define ASBNN_NUMERICS_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "asbnn/error.hpp"
#include "asbnn/numerics/dense_matrix.hpp"

namespace asbnn {

/// Eigenpairs of a symmetric matrix. Column j of `vectors` pairs with
/// `values[j]`; values are sorted non-increasing.
struct EigDecomposition {
  Vector values;
  DenseMatrix vectors;
};

/// Thin singular value decomposition A = U diag(s) Vt with r = min(rows, cols).
struct ThinSvd {
  DenseMatrix u;   // rows x r
  Vector s;        // r, non-increasing
  DenseMatrix vt;  // r x cols
};

namespace detail {

inline void require_finite(const DenseMatrix& a, const char* who) {
  if (!a.all_finite()) {
    throw InvalidInput(std::string(who) + ": non-finite entry in input");
  }
}

/// Flip column j so that its largest-magnitude entry is positive. Returns
/// true when the column was negated. Ties resolve to the lowest row index.
inline bool canonicalize_column_sign(DenseMatrix& v, std::size_t j) {
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < v.rows(); ++i) {
    const double a = std::abs(v(i, j));
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (v.rows() == 0 || v(arg, j) >= 0.0) return false;
  for (std::size_t i = 0; i < v.rows(); ++i) v(i, j) = -v(i, j);
  return true;
}

/// Index permutation that sorts `keys` non-increasing (stable).
inline std::vector<std::size_t> descending_order(const Vector& keys) {
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
  return order;
}

inline DenseMatrix permute_columns(const DenseMatrix& m,
                                   const std::vector<std::size_t>& order) {
  DenseMatrix out(m.rows(), order.size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < order.size(); ++j) out(i, j) = m(i, order[j]);
  return out;
}

/// Modified Gram-Schmidt, two passes, on column j against columns [0, j).
/// Returns the norm of the residual before normalization.
inline double orthogonalize_column(DenseMatrix& q, std::size_t j) {
  const std::size_t n = q.rows();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t k = 0; k < j; ++k) {
      double proj = 0.0;
      for (std::size_t i = 0; i < n; ++i) proj += q(i, k) * q(i, j);
      for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, k);
    }
  }
  double nrm = 0.0;
  for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
  nrm = std::sqrt(nrm);
  if (nrm > 0.0) {
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
  }
  return nrm;
}

/// Replace column j by a unit vector orthogonal to columns [0, j), chosen
/// from the standard basis.
inline void complete_column(DenseMatrix& q, std::size_t j) {
  for (std::size_t e = 0; e < q.rows(); ++e) {
    for (std::size_t i = 0; i < q.rows(); ++i) q(i, j) = (i == e) ? 1.0 : 0.0;
    if (orthogonalize_column(q, j) > 1e-3) return;
  }
  throw NumericError("complete_column: no independent direction left");
}

}  // namespace detail

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned in descending order, and every eigenvector is
/// signed so its largest-magnitude entry is positive.
inline EigDecomposition sym_eig_desc(const DenseMatrix& s) {
  if (s.rows() != s.cols()) {
    throw DimensionError("sym_eig_desc: matrix is " + std::to_string(s.rows()) +
                         "x" + std::to_string(s.cols()) + ", not square");
  }
  detail::require_finite(s, "sym_eig_desc");
  const std::size_t n = s.rows();
  const double scale = max_abs(s.data());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(s(i, j) - s(j, i)) > 1e-10 * scale) {
        throw DimensionError("sym_eig_desc: matrix is not symmetric");
      }
    }
  }

  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (s(i, j) + s(j, i));
  DenseMatrix v = DenseMatrix::identity(n);

  const double fro = frobenius_norm(a);
  const double stop = 1e-15 * fro;
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(2.0 * off) <= stop) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Negligible against both diagonal entries: zero it without rotating.
        const double app = a(p, p), aqq = a(q, q);
        if (std::abs(apq) < 1e-18 * (std::abs(app) + std::abs(aqq)) &&
            sweep > 3) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  Vector diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
  const auto order = detail::descending_order(diag);
  EigDecomposition out;
  out.values.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.values[j] = diag[order[j]];
  out.vectors = detail::permute_columns(v, order);
  for (std::size_t j = 0; j < n; ++j) {
    detail::canonicalize_column_sign(out.vectors, j);
  }
  return out;
}

/// Thin SVD through the eigendecomposition of the smaller Gram matrix.
/// Singular values are recomputed as norms of the mapped vectors, which keeps
/// small values accurate to roughly eps * s_max instead of sqrt(eps) * s_max.
/// Right singular vectors follow the same sign convention as sym_eig_desc.
inline ThinSvd thin_svd(const DenseMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw DimensionError("thin_svd: empty matrix");
  }
  detail::require_finite(a, "thin_svd");
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t r = std::min(m, n);
  const bool wide = m <= n;

  // `basis` holds the side obtained from the Gram eigenproblem (U when wide,
  // V otherwise); `mapped` receives A^T U or A V.
  const EigDecomposition eig = wide ? sym_eig_desc(gram_of_rows(a))
                                    : sym_eig_desc(gram_of_columns(a));
  const DenseMatrix& basis = eig.vectors;
  const std::size_t other = wide ? n : m;
  DenseMatrix mapped(other, r);
  Vector s(r);
  for (std::size_t j = 0; j < r; ++j) {
    const Vector bj = basis.col(j);
    const Vector w = wide ? matvec_transposed(a, bj) : matvec(a, bj);
    s[j] = norm2(w);
    for (std::size_t i = 0; i < other; ++i) mapped(i, j) = w[i];
  }

  const auto order = detail::descending_order(s);
  DenseMatrix basis_sorted(basis.rows(), r);
  DenseMatrix mapped_sorted(other, r);
  Vector s_sorted(r);
  for (std::size_t j = 0; j < r; ++j) {
    s_sorted[j] = s[order[j]];
    for (std::size_t i = 0; i < basis.rows(); ++i)
      basis_sorted(i, j) = basis(i, order[j]);
    for (std::size_t i = 0; i < other; ++i)
      mapped_sorted(i, j) = mapped(i, order[j]);
  }

  const double tol = 16.0 * std::numeric_limits<double>::epsilon() *
                     static_cast<double>(std::max(m, n)) *
                     (s_sorted.empty() ? 0.0 : s_sorted[0]);
  for (std::size_t j = 0; j < r; ++j) {
    if (s_sorted[j] > tol && s_sorted[j] > 0.0) {
      for (std::size_t i = 0; i < other; ++i) mapped_sorted(i, j) /= s_sorted[j];
      detail::orthogonalize_column(mapped_sorted, j);
    } else {
      s_sorted[j] = std::max(s_sorted[j], 0.0);
      detail::complete_column(mapped_sorted, j);
    }
  }

  DenseMatrix& u = wide ? basis_sorted : mapped_sorted;
  DenseMatrix& v = wide ? mapped_sorted : basis_sorted;
  for (std::size_t j = 0; j < r; ++j) {
    if (detail::canonicalize_column_sign(v, j)) {
      for (std::size_t i = 0; i < u.rows(); ++i) u(i, j) = -u(i, j);
    }
  }
  // Keep only the first r columns of U (the wide case already has r = m).
  ThinSvd out;
  out.s = std::move(s_sorted);
  out.u = DenseMatrix(m, r);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < r; ++j) out.u(i, j) = u(i, j);
  out.vt = DenseMatrix(r, n);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < n; ++i) out.vt(j, i) = v(i, j);
  return out;
}

/// max_ij |(Q^T Q - I)_ij| for a matrix with (intended) orthonormal columns.
inline double orthonormality_error(const DenseMatrix& q) {
  double worst = 0.0;
  for (std::size_t a = 0; a < q.cols(); ++a) {
    for (std::size_t b = a; b < q.cols(); ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.rows(); ++i) s += q(i, a) * q(i, b);
      worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace asbnn

#endif  // ASBNN_NUMERICS_LINALG_HPP
