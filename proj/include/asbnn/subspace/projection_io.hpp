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

#ifndef ASBNN_SUBSPACE_PROJECTION_IO_HPP
#define ASBNN_SUBSPACE_PROJECTION_IO_HPP

#include <string>

#include "asbnn/numerics/binary_io.hpp"
#include "asbnn/subspace/projection.hpp"

namespace asbnn {

inline constexpr std::string_view kProjectionMagic = "ASBNPROJ";
inline constexpr std::uint32_t kProjectionVersion = 1;

// Layout (little-endian):
//   magic[8] | u32 version | u64 n | u64 K | u32 method | f64 sigma0 |
//   u64 seed | f64[n*K] P row-major | f64[K] spectrum
// method 3 (FULL) is the identity basis; its P block is omitted.
inline void save_projection(const std::string& path, const Projection& p) {
  auto os = io::open_out(path);
  io::put_magic(os, kProjectionMagic);
  io::put_u32(os, kProjectionVersion);
  io::put_u64(os, p.dim());
  io::put_u64(os, p.rank());
  io::put_u32(os, static_cast<std::uint32_t>(p.method()));
  io::put_f64(os, p.sigma0());
  io::put_u64(os, p.seed());
  if (!p.is_identity()) io::put_f64s(os, p.stored_basis().data());
  io::put_f64s(os, p.spectrum());
  if (!os) throw IoError("save_projection: write failed for '" + path + "'");
}

inline Projection load_projection(const std::string& path) {
  auto is = io::open_in(path);
  io::expect_magic(is, kProjectionMagic);
  if (const auto v = io::get_u32(is); v != kProjectionVersion) {
    throw IoError("load_projection: unsupported version " + std::to_string(v));
  }
  const std::uint64_t n = io::get_u64(is);
  const std::uint64_t k = io::get_u64(is);
  const std::uint32_t method = io::get_u32(is);
  if (method > 3) throw IoError("load_projection: unknown method tag");
  const double sigma0 = io::get_f64(is);
  const std::uint64_t seed = io::get_u64(is);
  if (static_cast<ProjectionMethod>(method) == ProjectionMethod::Full) {
    if (n != k) throw IoError("load_projection: identity basis must be square");
    io::get_f64s(is, k);
    return Projection::identity(n);
  }
  DenseMatrix basis(n, k, io::get_f64s(is, n * k));
  Vector spectrum = io::get_f64s(is, k);
  return Projection(std::move(basis), std::move(spectrum),
                    static_cast<ProjectionMethod>(method), sigma0, seed);
}

}  // namespace asbnn

#endif  // ASBNN_SUBSPACE_PROJECTION_IO_HPP
