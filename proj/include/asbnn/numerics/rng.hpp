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

#ifndef ASBNN_NUMERICS_RNG_HPP
#define ASBNN_NUMERICS_RNG_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "asbnn/error.hpp"

namespace asbnn {

/// Seeded random stream. Identical (seed, stream) pairs reproduce the same
/// sequence; distinct stream ids feed the seed sequence different words and
/// give independent engines.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent child stream; the child id mixes parent stream and `id`.
  RngStream child(std::uint64_t id) const {
    return RngStream(seed_, (stream_ + 1) * 0x9E3779B97F4A7C15ULL + id);
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw InvalidInput("RngStream::index: empty range");
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x61736e6eU};
    return std::mt19937_64(seq);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// n i.i.d. draws from N(mean, std^2). std == 0 yields the constant vector.
inline std::vector<double> gaussian_vector(std::size_t n, double mean,
                                           double std, RngStream& rng) {
  if (!(std >= 0.0)) {
    throw InvalidInput("gaussian_vector: std must be >= 0, got " +
                       std::to_string(std));
  }
  std::vector<double> out(n, mean);
  if (std == 0.0) return out;
  for (double& v : out) v = mean + std * rng.normal();
  return out;
}

}  // namespace asbnn

#endif  // ASBNN_NUMERICS_RNG_HPP
