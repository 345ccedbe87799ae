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

#ifndef ASBNN_EXPERIMENT_COMMANDS_HPP
#define ASBNN_EXPERIMENT_COMMANDS_HPP

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "asbnn/error.hpp"
#include "asbnn/experiment/config.hpp"
#include "asbnn/experiment/pipeline.hpp"
#include "asbnn/experiment/results.hpp"
#include "asbnn/inference/bma.hpp"

namespace asbnn {

inline std::string output_dir(const ExperimentConfig& c, const RunOptions& opts) {
  return opts.out.empty() ? c.output : opts.out;
}

/// Runs every trial and writes `results.json` plus per-trial artifacts
/// under the output directory. Returns the written document.
inline Json cmd_run(const std::string& config_path, const RunOptions& opts = {}) {
  const ExperimentConfig c = load_config(config_path);
  const std::string out = output_dir(c, opts);
  std::filesystem::create_directories(out);
  const auto trials = run_trials(c, out, opts.from, opts.threads);
  Json doc = results_json(c, trials);
  write_text((std::filesystem::path(out) / "results.json").string(), dump_json17(doc));
  return doc;
}

struct GridSpec {
  double a = 0.0, b = 1.0, step = 0.005;

  std::size_t count() const {
    return static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  }
  double at(std::size_t i) const { return a + static_cast<double>(i) * step; }
};

/// "a:b:step" with a <= b and step > 0.
inline GridSpec parse_grid(const std::string& s) {
  const auto p1 = s.find(':');
  const auto p2 = p1 == std::string::npos ? p1 : s.find(':', p1 + 1);
  if (p2 == std::string::npos || s.find(':', p2 + 1) != std::string::npos) {
    throw InvalidInput("grid '" + s + "' is not of the form a:b:step");
  }
  GridSpec g;
  g.a = detail::ConfigReader::parse<double>(s.substr(0, p1), "grid");
  g.b = detail::ConfigReader::parse<double>(s.substr(p1 + 1, p2 - p1 - 1), "grid");
  g.step = detail::ConfigReader::parse<double>(s.substr(p2 + 1), "grid");
  if (!(g.step > 0.0) || !(g.a <= g.b) || !std::isfinite(g.b)) {
    throw InvalidInput("grid '" + s + "' needs a <= b and step > 0");
  }
  return g;
}

/// Predictive bands and per-draw functions of one trial on a 1-D grid,
/// in original units.
struct PlotData {
  Vector x, mean, lower, upper;
  std::vector<Vector> curves;  // one per posterior draw, each over the grid
};

inline PlotData plot_data(const ExperimentConfig& c, const FittedTrial& ft, const GridSpec& g,
                          std::size_t threads = 1) {
  if (c.network.input_dim != 1) throw InvalidInput("plotdata: needs one input feature");
  const std::size_t n = g.count();
  DenseMatrix xs(n, 1);
  PlotData pd;
  for (std::size_t i = 0; i < n; ++i) {
    pd.x.push_back(g.at(i));
    xs(i, 0) = g.at(i);
    ft.data.scaler.features_forward(xs.row(i));
  }
  const BmaPredictor bma(ft.model, c.network, ft.noise, ft.samples);
  const auto mix = bma.predict_all(xs, threads);
  pd.curves.assign(bma.components(), Vector(n));
  for (std::size_t i = 0; i < n; ++i) {
    const PredictiveMixture m = mix[i].destandardized(ft.data.scaler);
    const double mu = m.mean(), sd = std::sqrt(m.variance());
    pd.mean.push_back(mu);
    pd.lower.push_back(mu - 2.0 * sd);
    pd.upper.push_back(mu + 2.0 * sd);
    for (std::size_t j = 0; j < m.components(); ++j) pd.curves[j][i] = m.means[j];
  }
  return pd;
}

/// Writes `bands.csv` and `curves.csv` from the artifacts of a completed
/// run. Missing artifacts raise IoError.
inline PlotData cmd_plotdata(const std::string& config_path, const GridSpec& grid,
                             const RunOptions& opts = {}, std::size_t trial = 0) {
  const ExperimentConfig c = load_config(config_path);
  if (trial >= c.trials) throw InvalidInput("plotdata: trial index out of range");
  const std::string out = output_dir(c, opts);
  const TrialPaths paths = trial_paths(out, trial);
  for (const auto& p : {paths.checkpoint(), paths.samples()}) {
    if (c.method == Method::Sgd && p == paths.samples()) continue;
    if (!std::filesystem::is_regular_file(p)) {
      throw IoError("plotdata: missing artifact '" + p + "'; run the experiment first");
    }
  }
  const FittedTrial ft = fit_trial(c, trial, paths, Stage::Eval, opts.threads);
  const PlotData pd = plot_data(c, ft, grid, opts.threads);

  std::string bands = "x,mean,lower,upper\n";
  for (std::size_t i = 0; i < pd.x.size(); ++i) {
    bands += format_g17(pd.x[i]) + "," + format_g17(pd.mean[i]) + "," +
             format_g17(pd.lower[i]) + "," + format_g17(pd.upper[i]) + "\n";
  }
  std::string curves = "x";
  for (std::size_t j = 0; j < pd.curves.size(); ++j) curves += ",f_" + std::to_string(j + 1);
  curves += "\n";
  for (std::size_t i = 0; i < pd.x.size(); ++i) {
    curves += format_g17(pd.x[i]);
    for (const auto& f : pd.curves) curves += "," + format_g17(f[i]);
    curves += "\n";
  }
  write_text((std::filesystem::path(out) / "bands.csv").string(), bands);
  write_text((std::filesystem::path(out) / "curves.csv").string(), curves);
  return pd;
}

/// Reads result files, writes `comparison.csv` into `out` when non-empty and
/// returns the aligned text tables.
inline std::string cmd_compare(const std::vector<std::string>& files,
                               const std::string& out = {}) {
  std::vector<Json> docs;
  for (const auto& f : files) docs.push_back(read_json(f));
  const auto tables = compare_results(docs);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    write_text((std::filesystem::path(out) / "comparison.csv").string(), compare_csv(tables));
  }
  return compare_text(tables);
}

}  // namespace asbnn

#endif  // ASBNN_EXPERIMENT_COMMANDS_HPP
