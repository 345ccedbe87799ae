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

#ifndef ASBNN_INFERENCE_SAMPLE_IO_HPP
#define ASBNN_INFERENCE_SAMPLE_IO_HPP

#include <array>
#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "asbnn/data/dataset.hpp"
#include "asbnn/error.hpp"
#include "asbnn/inference/hmc.hpp"

namespace asbnn {

/// `v` printed like printf("%.17g").
inline std::string format_g17(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

/// Header `z_1,...,z_K[,log_noise]`, one row per draw.
inline void save_samples_csv(const std::string& path, const PosteriorSamples& s,
                             std::size_t k) {
  if (s.dim() != k && s.dim() != k + 1) {
    throw DimensionError("save_samples_csv: draws have " + std::to_string(s.dim()) +
                         " columns for K=" + std::to_string(k));
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("save_samples_csv: cannot open '" + path + "'");
  for (std::size_t j = 0; j < k; ++j) os << (j ? "," : "") << "z_" << (j + 1);
  if (s.dim() == k + 1) os << (k ? "," : "") << "log_noise";
  os << '\n';
  for (std::size_t r = 0; r < s.count(); ++r) {
    auto row = s.draws.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << format_g17(row[j]);
    os << '\n';
  }
  if (!os) throw IoError("save_samples_csv: write failed for '" + path + "'");
}

inline PosteriorSamples load_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_samples_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("load_samples_csv: empty file '" + path + "'");
  const auto header = detail::split_commas(line);
  std::vector<double> vals;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != header.size()) throw ParseError("load_samples_csv: ragged row");
    ++rows;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      vals.push_back(detail::parse_cell(cells[j], rows, header[j]));
    }
  }
  PosteriorSamples s;
  s.draws = DenseMatrix(rows, header.size(), std::move(vals));
  return s;
}

}  // namespace asbnn

#endif  // ASBNN_INFERENCE_SAMPLE_IO_HPP
