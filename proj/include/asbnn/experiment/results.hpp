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

#ifndef ASBNN_EXPERIMENT_RESULTS_HPP
#define ASBNN_EXPERIMENT_RESULTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "asbnn/error.hpp"
#include "asbnn/experiment/config.hpp"
#include "asbnn/experiment/pipeline.hpp"
#include "asbnn/inference/sample_io.hpp"
#include "json.hpp"

namespace asbnn {

using Json = nlohmann::ordered_json;

/// Sample mean and standard deviation (n - 1 denominator; 0 for one value).
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) throw InvalidInput("mean_std: no values");
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() == 1) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline Json results_json(const ExperimentConfig& c, const std::vector<TrialResult>& trials) {
  Json j;
  j["config_hash"] = config_hash(c);
  j["input_hash"] = input_hash(c);
  j["name"] = c.name;
  j["method"] = to_string(c.method);
  j["dataset"] = c.dataset_name();
  Json meta;
  meta["algorithm"] = c.method == Method::Sgd ? "none"
                      : c.algorithm == Algorithm::Hmc ? "hmc"
                                                      : "vi";
  meta["k"] = c.method == Method::Full ? param_count(c.network)
              : c.method == Method::Sgd ? 0
                                        : c.k;
  meta["m"] = c.m;
  meta["j"] = c.method == Method::Sgd ? 1 : c.j;
  meta["n_params"] = param_count(c.network);
  meta["network"] = describe(c.network);
  meta["prior_std"] = c.prior_std;
  meta["sigma0"] = c.sigma0 < 0.0 ? Json("0.1*rms(anchor)") : Json(c.sigma0);
  meta["pretrain_epochs"] = c.pretrain.epochs;
  meta["pretrain_batch_size"] = c.pretrain.batch_size;
  meta["pretrain_learning_rate"] = c.pretrain.learning_rate;
  meta["pretrain_momentum"] = c.pretrain.momentum;
  meta["pretrain_swa_start"] = c.pretrain.swa_start;
  meta["log_likelihood_units"] = "original";
  j["metadata"] = meta;

  Json arr = Json::array();
  std::vector<double> rmse, ll, cov;
  for (const auto& t : trials) {
    Json tj;
    tj["seed"] = t.seed;
    tj["rmse"] = t.report.rmse;
    tj["avg_log_lik"] = t.report.avg_log_lik;
    tj["coverage95"] = t.report.coverage95;
    tj["n_test"] = t.report.n_test;
    tj["times"] = {{"pretrain", t.times.pretrain},
                   {"subspace", t.times.subspace},
                   {"inference", t.times.inference},
                   {"eval", t.times.eval}};
    arr.push_back(std::move(tj));
    rmse.push_back(t.report.rmse);
    ll.push_back(t.report.avg_log_lik);
    cov.push_back(t.report.coverage95);
  }
  j["trials"] = std::move(arr);
  const auto pair = [](std::pair<double, double> p) { return Json::array({p.first, p.second}); };
  j["aggregate"] = {{"rmse", pair(mean_std(rmse))},
                    {"avg_log_lik", pair(mean_std(ll))},
                    {"coverage95", pair(mean_std(cov))}};
  return j;
}

namespace detail {

inline void emit_json(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, val] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(key).dump() + ": ";
        emit_json(val, out, indent, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      const bool nested = std::any_of(j.begin(), j.end(), [](const Json& e) {
        return e.is_structured();
      });
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += i ? (nested ? ",\n" + pad : ", ") : (nested ? "\n" + pad : "");
        emit_json(j[i], out, indent, depth + 1);
      }
      out += nested ? "\n" + close + "]" : "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_g17(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Pretty-printed JSON with every float written to 17 significant digits.
inline std::string dump_json17(const Json& j) {
  std::string out;
  detail::emit_json(j, out, 2, 0);
  out += '\n';
  return out;
}

inline void write_text(const std::string& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << body;
  if (!os) throw IoError("write failed for '" + path + "'");
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return Json::parse(std::string(std::istreambuf_iterator<char>(in), {}));
  } catch (const Json::parse_error& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

/// Copy of a results document without wall-clock fields.
inline Json strip_times(Json j) {
  if (j.contains("trials")) {
    for (auto& t : j["trials"]) t.erase("times");
  }
  return j;
}

// ---------------------------------------------------------------------------
// Comparison tables

struct CompareCell {
  double mean = 0.0, std = 0.0;
  bool best = false;
};

struct CompareTable {
  std::string metric;
  std::vector<std::string> datasets;  // rows
  std::vector<std::string> methods;   // columns
  std::vector<std::vector<CompareCell>> cells;
};

namespace detail {

/// Larger is better for log-likelihood, smaller for RMSE, and closer to 0.95
/// for coverage.
inline double badness(const std::string& metric, double mean) {
  if (metric == "avg_log_lik") return -mean;
  if (metric == "rmse") return mean;
  return std::abs(mean - 0.95);
}

inline std::string cell_text(const CompareCell& c) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f±%.2f%s", c.mean, c.std, c.best ? " *" : "");
  return buf;
}

}  // namespace detail

/// One table per metric: a row per dataset, a column per input method.
/// Every method must report every dataset. All cells sharing the best value
/// of a row are flagged, so exact ties flag each of them.
inline std::vector<CompareTable> compare_results(const std::vector<Json>& docs) {
  if (docs.size() < 2) throw InvalidInput("compare: need at least two result files");
  struct Entry {
    std::string method, dataset;
    const Json* agg;
  };
  std::vector<Entry> entries;
  std::vector<std::string> methods, datasets;
  for (const auto& d : docs) {
    if (!d.contains("method") || !d.contains("dataset") || !d.contains("aggregate")) {
      throw InvalidInput("compare: result document lacks method/dataset/aggregate");
    }
    Entry e{d["method"].get<std::string>(), d["dataset"].get<std::string>(), &d["aggregate"]};
    if (std::find(datasets.begin(), datasets.end(), e.dataset) == datasets.end()) {
      datasets.push_back(e.dataset);
    }
    entries.push_back(std::move(e));
  }
  // Column labels: one per method, a repeated (method, dataset) pair opens a
  // new column suffixed with its occurrence number.
  std::vector<std::size_t> column(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    std::size_t occurrence = 1;
    for (std::size_t p = 0; p < i; ++p) {
      occurrence += entries[p].method == entries[i].method &&
                    entries[p].dataset == entries[i].dataset;
    }
    const std::string label =
        occurrence == 1 ? entries[i].method
                        : entries[i].method + "#" + std::to_string(occurrence);
    const auto it = std::find(methods.begin(), methods.end(), label);
    column[i] = static_cast<std::size_t>(it - methods.begin());
    if (it == methods.end()) methods.push_back(label);
  }
  std::vector<std::vector<int>> owner(datasets.size(), std::vector<int>(methods.size(), -1));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto r = static_cast<std::size_t>(
        std::find(datasets.begin(), datasets.end(), entries[i].dataset) - datasets.begin());
    owner[r][column[i]] = static_cast<int>(i);
  }
  for (std::size_t r = 0; r < datasets.size(); ++r) {
    for (std::size_t c = 0; c < methods.size(); ++c) {
      if (owner[r][c] < 0) {
        throw InvalidInput("compare: method " + methods[c] + " has no result for dataset '" +
                           datasets[r] + "'");
      }
    }
  }

  std::vector<CompareTable> tables;
  for (const std::string metric : {"avg_log_lik", "rmse", "coverage95"}) {
    CompareTable t{metric, datasets, methods, {}};
    for (std::size_t r = 0; r < datasets.size(); ++r) {
      std::vector<CompareCell> row;
      for (std::size_t c = 0; c < methods.size(); ++c) {
        const Json& a = (*entries[static_cast<std::size_t>(owner[r][c])].agg)[metric];
        row.push_back({a.at(0).get<double>(), a.at(1).get<double>(), false});
      }
      double best = row.front().mean;
      for (const auto& cell : row) {
        if (detail::badness(metric, cell.mean) < detail::badness(metric, best)) best = cell.mean;
      }
      for (auto& cell : row) {
        cell.best = detail::badness(metric, cell.mean) == detail::badness(metric, best);
      }
      t.cells.push_back(std::move(row));
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

/// metric,dataset,method,mean,std,best
inline std::string compare_csv(const std::vector<CompareTable>& tables) {
  std::string out = "metric,dataset,method,mean,std,best\n";
  for (const auto& t : tables) {
    for (std::size_t r = 0; r < t.datasets.size(); ++r) {
      for (std::size_t c = 0; c < t.methods.size(); ++c) {
        const auto& cell = t.cells[r][c];
        out += t.metric + "," + t.datasets[r] + "," + t.methods[c] + "," +
               format_g17(cell.mean) + "," + format_g17(cell.std) + "," +
               (cell.best ? "1" : "0") + "\n";
      }
    }
  }
  return out;
}

/// Aligned text tables; `*` marks the best cell of a row.
inline std::string compare_text(const std::vector<CompareTable>& tables) {
  // Display width counts the two-byte "±" once.
  const auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::ostringstream os;
  for (const auto& t : tables) {
    std::vector<std::vector<std::string>> grid;
    grid.push_back({"dataset"});
    for (const auto& m : t.methods) grid.back().push_back(m);
    for (std::size_t r = 0; r < t.datasets.size(); ++r) {
      grid.push_back({t.datasets[r]});
      for (const auto& cell : t.cells[r]) grid.back().push_back(detail::cell_text(cell));
    }
    std::vector<std::size_t> w(grid.front().size(), 0);
    for (const auto& row : grid)
      for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], width(row[c]));
    os << t.metric << '\n';
    for (const auto& row : grid) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        os << (c ? "  " : "") << row[c] << std::string(w[c] - width(row[c]), ' ');
      }
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace asbnn

#endif  // ASBNN_EXPERIMENT_RESULTS_HPP
