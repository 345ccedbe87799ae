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

#ifndef ASBNN_NETWORK_CHECKPOINT_HPP
#define ASBNN_NETWORK_CHECKPOINT_HPP

#include <cstdint>
#include <string>

#include "asbnn/network/mlp.hpp"
#include "asbnn/numerics/binary_io.hpp"

namespace asbnn {

inline constexpr std::string_view kCheckpointMagic = "ASBNCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Stable description of the architecture, hashed into checkpoints.
inline std::string describe(const MlpConfig& config) {
  std::string s = "p=" + std::to_string(config.input_dim) + ";hidden=";
  for (std::size_t i = 0; i < config.hidden.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(config.hidden[i]);
  }
  s += config.head == OutputHead::MeanVariance ? ";head=mean_variance"
                                               : ";head=scalar";
  s += config.activation == Activation::Tanh ? ";act=tanh" : ";act=relu";
  return s;
}

inline std::uint64_t config_hash(const MlpConfig& config) {
  return io::fnv1a(describe(config));
}

// Layout: magic[8] | u32 version | u64 n | u64 config hash | f64[n] theta.
// All integers and floats little-endian.
inline void save_checkpoint(const std::string& path, const MlpConfig& config,
                            const ParamVector& theta) {
  if (theta.size() != param_count(config)) {
    throw DimensionError("save_checkpoint: parameter count mismatch");
  }
  auto os = io::open_out(path);
  io::put_magic(os, kCheckpointMagic);
  io::put_u32(os, kCheckpointVersion);
  io::put_u64(os, theta.size());
  io::put_u64(os, config_hash(config));
  io::put_f64s(os, theta);
  if (!os) throw IoError("save_checkpoint: write failed for '" + path + "'");
}

inline ParamVector load_checkpoint(const std::string& path,
                                   const MlpConfig& config) {
  auto is = io::open_in(path);
  io::expect_magic(is, kCheckpointMagic);
  if (const auto v = io::get_u32(is); v != kCheckpointVersion) {
    throw IoError("load_checkpoint: unsupported version " + std::to_string(v));
  }
  const std::uint64_t n = io::get_u64(is);
  const std::uint64_t hash = io::get_u64(is);
  if (n != param_count(config) || hash != config_hash(config)) {
    throw IoError("load_checkpoint: '" + path +
                  "' was written for a different architecture");
  }
  return io::get_f64s(is, n);
}

}  // namespace asbnn

#endif  // ASBNN_NETWORK_CHECKPOINT_HPP
