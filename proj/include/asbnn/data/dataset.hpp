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

#ifndef ASBNN_DATA_DATASET_HPP
#define ASBNN_DATA_DATASET_HPP

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "asbnn/error.hpp"
#include "asbnn/numerics/dense_matrix.hpp"
#include "asbnn/numerics/rng.hpp"

namespace asbnn {

/// Affine per-column transform fitted on a training split. Variances map
/// back to original units through the squared target scale.
struct Scaler {
  Vector feature_mean;
  Vector feature_std;
  double target_mean = 0.0;
  double target_std = 1.0;

  static Scaler identity(std::size_t p) {
    return {Vector(p, 0.0), Vector(p, 1.0), 0.0, 1.0};
  }

  double target_forward(double y) const { return (y - target_mean) / target_std; }
  double target_inverse(double z) const { return z * target_std + target_mean; }
  double variance_inverse(double v) const { return v * target_std * target_std; }

  void features_forward(std::span<double> row) const {
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = (row[j] - feature_mean[j]) / feature_std[j];
  }
  void features_inverse(std::span<double> row) const {
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = row[j] * feature_std[j] + feature_mean[j];
  }
};

struct Dataset {
  std::string name;
  std::vector<std::string> feature_names;
  std::string target_name = "y";
  DenseMatrix features;  // N x p
  Vector targets;        // N
  Scaler scaler;         // maps the stored values back to original units

  std::size_t size() const noexcept { return targets.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
  bool empty() const noexcept { return targets.empty(); }
  std::span<const double> x(std::size_t i) const { return features.row(i); }
  double y(std::size_t i) const { return targets[i]; }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.name = name;
    out.feature_names = feature_names;
    out.target_name = target_name;
    out.scaler = scaler;
    out.features = DenseMatrix(rows.size(), dim());
    out.targets.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto src = features.row(rows[k]);
      std::copy(src.begin(), src.end(), out.features.row(k).begin());
      out.targets[k] = targets[rows[k]];
    }
    return out;
  }
};

inline double sine_function(double x) {
  return std::sin(4.0 * std::numbers::pi * x) + std::sin(7.0 * std::numbers::pi * x);
}

/// x ~ Uniform[0, 1], y = sin(4 pi x) + sin(7 pi x) + N(0, noise_std^2).
inline Dataset gen_sine(std::size_t n, double noise_std, RngStream& rng) {
  if (n == 0) throw InvalidInput("gen_sine: N must be >= 1");
  if (!(noise_std >= 0.0)) throw InvalidInput("gen_sine: noise std must be >= 0");
  Dataset ds;
  ds.name = "sine";
  ds.feature_names = {"x"};
  ds.features = DenseMatrix(n, 1);
  ds.targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform();
    ds.features(i, 0) = x;
    ds.targets[i] = sine_function(x) + (noise_std > 0.0 ? noise_std * rng.normal() : 0.0);
  }
  ds.scaler = Scaler::identity(1);
  return ds;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(s.back())) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && ws(s[b])) ++b;
  return s.substr(b);
}

inline std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_cell(const std::string& cell, std::size_t row,
                         const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("load_csv: cannot parse '" + cell + "' at row " +
                     std::to_string(row) + ", column '" + column + "'");
  }
  return v;
}

inline std::pair<double, double> column_moments(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

}  // namespace detail

/// Reads a headed, comma-separated numeric table. Every column other than
/// `target_column` becomes a feature, in header order. Row numbers in errors
/// count data rows from 1.
inline Dataset load_csv(const std::string& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("load_csv: '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_commas(line);
  const auto tgt = std::find(header.begin(), header.end(), target_column);
  if (tgt == header.end()) {
    throw InvalidInput("load_csv: target column '" + target_column +
                       "' not in header of '" + path + "'");
  }
  const std::size_t tcol = static_cast<std::size_t>(tgt - header.begin());

  Dataset ds;
  ds.name = path.substr(path.find_last_of('/') == std::string::npos
                            ? 0
                            : path.find_last_of('/') + 1);
  if (const auto dot = ds.name.rfind('.'); dot != std::string::npos) ds.name.resize(dot);
  ds.target_name = target_column;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != tcol) ds.feature_names.push_back(header[j]);
  }

  std::vector<double> feats;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto cells = detail::split_commas(line);
    if (cells.size() != header.size()) {
      throw ParseError("load_csv: row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const double v = detail::parse_cell(cells[j], row, header[j]);
      if (j == tcol) {
        ds.targets.push_back(v);
      } else {
        feats.push_back(v);
      }
    }
  }
  if (row == 0) throw InvalidInput("load_csv: '" + path + "' has no data rows");
  ds.features = DenseMatrix(row, ds.feature_names.size(), std::move(feats));

  for (std::size_t j = 0; j < ds.dim(); ++j) {
    const Vector c = ds.features.col(j);
    if (std::all_of(c.begin(), c.end(), [&](double v) { return v == c[0]; }) &&
        row > 1) {
      throw ScalerError("load_csv: column '" + ds.feature_names[j] + "' is constant",
                        ds.feature_names[j]);
    }
  }
  if (row > 1 && std::all_of(ds.targets.begin(), ds.targets.end(),
                             [&](double v) { return v == ds.targets[0]; })) {
    throw ScalerError("load_csv: column '" + target_column + "' is constant",
                      target_column);
  }
  ds.scaler = Scaler::identity(ds.dim());
  return ds;
}

/// Test-set size for a split fraction: round(N * fraction), at least 1 and
/// at most N - 1.
inline std::size_t test_count(std::size_t n, double fraction) {
  const auto t = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
  return std::clamp<std::size_t>(t, 1, n - 1);
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline SplitIndices split_indices(std::size_t n, double test_fraction, RngStream& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidInput("split: test fraction must be in (0, 1)");
  }
  if (n < 2) throw InvalidInput("split: need at least 2 rows");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  const std::size_t nt = test_count(n, test_fraction);
  SplitIndices s;
  s.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(nt));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(nt), perm.end());
  return s;
}

inline std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                         RngStream& rng) {
  const auto idx = split_indices(ds.size(), test_fraction, rng);
  return {ds.subset(idx.train), ds.subset(idx.test)};
}

struct Standardized {
  Dataset train;
  Dataset test;
  Scaler scaler;
};

/// Fits a scaler on `train` only and applies it to both splits, including
/// the target. The returned datasets carry the scaler for de-standardizing
/// predictions.
inline Standardized standardize(const Dataset& train, const Dataset& test) {
  if (train.empty()) throw InvalidInput("standardize: empty training split");
  if (train.dim() != test.dim()) throw DimensionError("standardize: feature count mismatch");
  Scaler sc;
  sc.feature_mean.resize(train.dim());
  sc.feature_std.resize(train.dim());
  for (std::size_t j = 0; j < train.dim(); ++j) {
    const Vector c = train.features.col(j);
    const auto [m, s] = detail::column_moments(c);
    if (!(s > 0.0)) {
      const std::string name =
          j < train.feature_names.size() ? train.feature_names[j] : std::to_string(j);
      throw ScalerError("standardize: column '" + name + "' is constant on the training split",
                        name);
    }
    sc.feature_mean[j] = m;
    sc.feature_std[j] = s;
  }
  const auto [ym, ys] = detail::column_moments(train.targets);
  if (!(ys > 0.0)) {
    throw ScalerError("standardize: target '" + train.target_name + "' is constant",
                      train.target_name);
  }
  sc.target_mean = ym;
  sc.target_std = ys;

  const auto apply = [&](const Dataset& in) {
    Dataset out = in;
    for (std::size_t i = 0; i < out.size(); ++i) {
      sc.features_forward(out.features.row(i));
      out.targets[i] = sc.target_forward(out.targets[i]);
    }
    out.scaler = sc;
    return out;
  };
  return {apply(train), apply(test), sc};
}

}  // namespace asbnn

#endif  // ASBNN_DATA_DATASET_HPP
