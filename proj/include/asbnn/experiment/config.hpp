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

#ifndef ASBNN_EXPERIMENT_CONFIG_HPP
#define ASBNN_EXPERIMENT_CONFIG_HPP

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/uuid/detail/sha1.hpp>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "asbnn/error.hpp"
#include "asbnn/inference/hmc.hpp"
#include "asbnn/inference/posterior.hpp"
#include "asbnn/inference/sample_io.hpp"
#include "asbnn/inference/vi.hpp"
#include "asbnn/network/checkpoint.hpp"
#include "asbnn/network/mlp.hpp"
#include "asbnn/numerics/binary_io.hpp"
#include "asbnn/pretrain/swa.hpp"

namespace asbnn {

/// Subspace construction. Sgd skips inference and predicts with the
/// averaged weights alone.
enum class Method { AS, LIS, PCA, Full, Sgd };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::AS: return "AS";
    case Method::LIS: return "LIS";
    case Method::PCA: return "PCA";
    case Method::Full: return "FULL";
    case Method::Sgd: return "SGD";
  }
  return "?";
}

enum class Algorithm { Hmc, Vi };

struct DataSpec {
  enum class Source { Sine, Csv };
  Source source = Source::Sine;
  std::size_t n = 100;       // sine training points
  std::size_t n_test = 200;  // sine test points
  double noise = 0.4;
  std::string csv;           // resolved path
  std::string target;
  double test_fraction = 0.1;
  bool standardize = false;
};

struct NoiseSpec {
  enum class Kind { Auto, Head, Global, Fixed };
  Kind kind = Kind::Auto;
  double variance = 1.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::string output = "out";

  DataSpec data;
  MlpConfig network;
  TrainHyper pretrain;

  Method method = Method::AS;
  std::size_t k = 20;
  std::size_t m = 100;
  double sigma0 = -1.0;  // < 0: 0.1 x RMS of the anchor

  Algorithm algorithm = Algorithm::Hmc;
  double prior_std = 1.0;
  NoiseSpec noise;
  HmcOptions hmc;
  ViOptions vi;
  std::size_t j = 30;

  NoiseModel noise_model() const {
    switch (noise.kind) {
      case NoiseSpec::Kind::Head: return NoiseModel::head();
      case NoiseSpec::Kind::Global: return NoiseModel::global();
      case NoiseSpec::Kind::Fixed: return NoiseModel::fixed(noise.variance);
      case NoiseSpec::Kind::Auto: break;
    }
    return NoiseModel::for_head(network.head);
  }

  std::string dataset_name() const {
    if (data.source == DataSpec::Source::Sine) return "sine";
    return std::filesystem::path(data.csv).stem().string();
  }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"experiment", {"name", "trials", "seed", "output"}},
      {"data", {"source", "n", "n_test", "noise", "csv", "target", "test_fraction",
                "standardize"}},
      {"network", {"hidden", "activation", "head"}},
      {"pretrain", {"epochs", "batch_size", "learning_rate", "momentum", "swa_start",
                    "snapshot_every"}},
      {"subspace", {"method", "k", "m", "sigma0"}},
      {"inference", {"algorithm", "prior_std", "noise", "noise_variance", "j",
                     "hmc_leapfrog", "hmc_warmup", "hmc_samples", "hmc_target_accept",
                     "hmc_step_size", "hmc_step_jitter", "vi_steps", "vi_learning_rate",
                     "vi_final_lr_fraction", "vi_init_log_std"}},
  };
  return schema;
}

class ConfigReader {
 public:
  explicit ConfigReader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  std::string str(const std::string& sec, const std::string& key, std::string def) const {
    const auto v = tree_.get_optional<std::string>(sec + "." + key);
    return v ? trim(*v) : def;
  }
  bool has(const std::string& sec, const std::string& key) const {
    return static_cast<bool>(tree_.get_optional<std::string>(sec + "." + key));
  }

  template <class T>
  T num(const std::string& sec, const std::string& key, T def) const {
    if (!has(sec, key)) return def;
    return parse<T>(str(sec, key, ""), sec + "." + key);
  }

  template <class T>
  static T parse(const std::string& text, const std::string& where) {
    T v{};
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
      throw ParseError("config: " + where + " = '" + text + "' is not a valid number");
    }
    return v;
  }

 private:
  const boost::property_tree::ptree& tree_;
};

inline bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("config: " + where + " = '" + v + "' is not a boolean");
}

inline Method parse_method(const std::string& v) {
  if (v == "AS") return Method::AS;
  if (v == "LIS") return Method::LIS;
  if (v == "PCA") return Method::PCA;
  if (v == "FULL") return Method::Full;
  if (v == "SGD") return Method::Sgd;
  throw ParseError("config: subspace.method '" + v + "' (expected AS|LIS|PCA|FULL|SGD)");
}

inline std::vector<std::size_t> parse_hidden(const std::string& v) {
  std::vector<std::size_t> out;
  if (v.empty() || v == "none") return out;
  for (const auto& cell : split_commas(v)) {
    const auto w = ConfigReader::parse<std::size_t>(trim(cell), "network.hidden");
    if (w == 0) throw InvalidInput("config: network.hidden widths must be >= 1");
    out.push_back(w);
  }
  return out;
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  if (c.trials < 1) throw InvalidInput("config: experiment.trials must be >= 1");
  if (c.method != Method::Full && c.method != Method::Sgd && c.k < 1) {
    throw InvalidInput("config: subspace.k must be >= 1");
  }
  if (c.m < 1) throw InvalidInput("config: subspace.m must be >= 1");
  if (c.j < 1) throw InvalidInput("config: inference.j must be >= 1");
  if (!(c.prior_std > 0.0)) throw InvalidInput("config: inference.prior_std must be > 0");
  if (c.data.source == DataSpec::Source::Sine) {
    if (c.data.n < 1 || c.data.n_test < 1) throw InvalidInput("config: data.n must be >= 1");
    if (!(c.data.noise >= 0.0)) throw InvalidInput("config: data.noise must be >= 0");
  } else {
    if (c.data.target.empty()) throw InvalidInput("config: data.target is required for csv");
    if (!std::filesystem::is_regular_file(c.data.csv)) {
      throw IoError("config: data.csv '" + c.data.csv + "' does not exist");
    }
    if (!(c.data.test_fraction > 0.0 && c.data.test_fraction < 1.0)) {
      throw InvalidInput("config: data.test_fraction must be in (0, 1)");
    }
  }
  if (c.noise.kind == NoiseSpec::Kind::Head && c.network.head != OutputHead::MeanVariance) {
    throw InvalidInput("config: inference.noise = head needs network.head = mean_variance");
  }
  if (c.noise.kind == NoiseSpec::Kind::Fixed && !(c.noise.variance > 0.0)) {
    throw InvalidInput("config: inference.noise_variance must be > 0");
  }
  if (c.algorithm == Algorithm::Hmc && c.method != Method::Sgd && c.hmc.samples < c.j) {
    throw InvalidInput("config: inference.hmc_samples must be >= j");
  }
  c.pretrain.validate();
}

/// Parses an INI file with sections [experiment], [data], [network],
/// [pretrain], [subspace] and [inference]. Unknown sections and keys are
/// errors. Relative paths resolve against the config file's directory.
inline ExperimentConfig load_config(const std::string& path) {
  namespace pt = boost::property_tree;
  if (!std::filesystem::is_regular_file(path)) {
    throw IoError("config: cannot open '" + path + "'");
  }
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  const auto& schema = detail::config_schema();
  for (const auto& [sec, body] : tree) {
    const auto it = schema.find(sec);
    if (it == schema.end()) throw ParseError("config: unknown section [" + sec + "]");
    if (body.empty() && !body.data().empty()) {
      throw ParseError("config: key '" + sec + "' outside a section");
    }
    for (const auto& kv : body) {
      if (!it->second.contains(kv.first)) {
        throw ParseError("config: unknown key '" + kv.first + "' in [" + sec + "]");
      }
    }
  }

  const detail::ConfigReader r(tree);
  const auto base = std::filesystem::absolute(path).parent_path();
  const auto resolve = [&](const std::string& p) {
    return std::filesystem::path(p).is_absolute() ? p : (base / p).lexically_normal().string();
  };

  ExperimentConfig c;
  c.name = r.str("experiment", "name", c.name);
  c.trials = r.num("experiment", "trials", c.trials);
  c.seed = r.num("experiment", "seed", c.seed);
  c.output = resolve(r.str("experiment", "output", c.output));

  const std::string source = r.str("data", "source", "sine");
  if (source == "sine") {
    c.data.source = DataSpec::Source::Sine;
  } else if (source == "csv") {
    c.data.source = DataSpec::Source::Csv;
    c.data.standardize = true;
    c.data.csv = resolve(r.str("data", "csv", ""));
  } else {
    throw ParseError("config: data.source '" + source + "' (expected sine|csv)");
  }
  c.data.n = r.num("data", "n", c.data.n);
  c.data.n_test = r.num("data", "n_test", c.data.n_test);
  c.data.noise = r.num("data", "noise", c.data.noise);
  c.data.target = r.str("data", "target", c.data.target);
  c.data.test_fraction = r.num("data", "test_fraction", c.data.test_fraction);
  if (r.has("data", "standardize")) {
    c.data.standardize = detail::parse_bool(r.str("data", "standardize", ""), "data.standardize");
  }

  c.network.hidden = detail::parse_hidden(r.str("network", "hidden", "32,32,32"));
  const std::string act = r.str("network", "activation", "tanh");
  if (act == "tanh") {
    c.network.activation = Activation::Tanh;
  } else if (act == "relu") {
    c.network.activation = Activation::Relu;
  } else {
    throw ParseError("config: network.activation '" + act + "' (expected tanh|relu)");
  }
  const std::string head = r.str("network", "head", "scalar");
  if (head == "scalar") {
    c.network.head = OutputHead::ScalarMean;
  } else if (head == "mean_variance") {
    c.network.head = OutputHead::MeanVariance;
  } else {
    throw ParseError("config: network.head '" + head + "' (expected scalar|mean_variance)");
  }

  c.pretrain.epochs = r.num("pretrain", "epochs", c.pretrain.epochs);
  c.pretrain.batch_size = r.num("pretrain", "batch_size", c.pretrain.batch_size);
  c.pretrain.learning_rate = r.num("pretrain", "learning_rate", c.pretrain.learning_rate);
  c.pretrain.momentum = r.num("pretrain", "momentum", c.pretrain.momentum);
  c.pretrain.swa_start = r.num("pretrain", "swa_start", c.pretrain.swa_start);
  c.pretrain.snapshot_every = r.num("pretrain", "snapshot_every", c.pretrain.snapshot_every);

  c.method = detail::parse_method(r.str("subspace", "method", "AS"));
  c.k = r.num("subspace", "k", c.k);
  c.m = r.num("subspace", "m", c.m);
  if (const auto s = r.str("subspace", "sigma0", "auto"); s != "auto") {
    c.sigma0 = detail::ConfigReader::parse<double>(s, "subspace.sigma0");
    if (!(c.sigma0 >= 0.0)) throw InvalidInput("config: subspace.sigma0 must be >= 0");
  }

  const std::string alg = r.str("inference", "algorithm", "hmc");
  if (alg == "hmc") {
    c.algorithm = Algorithm::Hmc;
  } else if (alg == "vi") {
    c.algorithm = Algorithm::Vi;
  } else {
    throw ParseError("config: inference.algorithm '" + alg + "' (expected hmc|vi)");
  }
  c.prior_std = r.num("inference", "prior_std", c.prior_std);
  const std::string noise = r.str("inference", "noise", "auto");
  if (noise == "auto") {
    c.noise.kind = NoiseSpec::Kind::Auto;
  } else if (noise == "head") {
    c.noise.kind = NoiseSpec::Kind::Head;
  } else if (noise == "global") {
    c.noise.kind = NoiseSpec::Kind::Global;
  } else if (noise == "fixed") {
    c.noise.kind = NoiseSpec::Kind::Fixed;
  } else {
    throw ParseError("config: inference.noise '" + noise + "' (expected auto|head|global|fixed)");
  }
  c.noise.variance = r.num("inference", "noise_variance", c.noise.variance);
  c.j = r.num("inference", "j", c.j);
  c.hmc.leapfrog_steps = r.num("inference", "hmc_leapfrog", c.hmc.leapfrog_steps);
  c.hmc.warmup = r.num("inference", "hmc_warmup", c.hmc.warmup);
  c.hmc.samples = r.num("inference", "hmc_samples", c.hmc.samples);
  c.hmc.target_accept = r.num("inference", "hmc_target_accept", c.hmc.target_accept);
  c.hmc.step_jitter = r.num("inference", "hmc_step_jitter", c.hmc.step_jitter);
  if (r.has("inference", "hmc_step_size")) {
    c.hmc.step_size = r.num("inference", "hmc_step_size", 0.0);
    c.hmc.adapt = false;
  }
  c.vi.steps = r.num("inference", "vi_steps", c.vi.steps);
  c.vi.learning_rate = r.num("inference", "vi_learning_rate", c.vi.learning_rate);
  c.vi.final_lr_fraction = r.num("inference", "vi_final_lr_fraction", c.vi.final_lr_fraction);
  c.vi.init_log_std = r.num("inference", "vi_init_log_std", c.vi.init_log_std);

  validate(c);
  if (c.data.source == DataSpec::Source::Csv) {
    std::ifstream in(c.data.csv);
    std::string header;
    if (!std::getline(in, header)) throw IoError("config: '" + c.data.csv + "' is empty");
    const auto cols = detail::split_commas(header);
    bool found = false;
    for (const auto& col : cols) found |= detail::trim(col) == c.data.target;
    if (!found) {
      throw InvalidInput("config: target column '" + c.data.target + "' not in '" +
                         c.data.csv + "'");
    }
    c.network.input_dim = cols.size() - 1;
  }
  return c;
}

/// Effective settings, one `section.key=value` per line, defaults included.
/// The output directory is left out so relocated runs hash the same.
inline std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream os;
  const auto f = [](double v) { return format_g17(v); };
  os << "experiment.name=" << c.name << '\n'
     << "experiment.trials=" << c.trials << '\n'
     << "experiment.seed=" << c.seed << '\n';
  if (c.data.source == DataSpec::Source::Sine) {
    os << "data.source=sine\ndata.n=" << c.data.n << "\ndata.n_test=" << c.data.n_test
       << "\ndata.noise=" << f(c.data.noise) << '\n';
  } else {
    os << "data.source=csv\ndata.csv=" << std::filesystem::path(c.data.csv).filename().string()
       << "\ndata.target=" << c.data.target << "\ndata.test_fraction="
       << f(c.data.test_fraction) << '\n';
  }
  os << "data.standardize=" << c.data.standardize << '\n'
     << "network=" << describe(c.network) << '\n'
     << "pretrain.epochs=" << c.pretrain.epochs << '\n'
     << "pretrain.batch_size=" << c.pretrain.batch_size << '\n'
     << "pretrain.learning_rate=" << f(c.pretrain.learning_rate) << '\n'
     << "pretrain.momentum=" << f(c.pretrain.momentum) << '\n'
     << "pretrain.swa_start=" << f(c.pretrain.swa_start) << '\n'
     << "pretrain.snapshot_every=" << c.pretrain.snapshot_every << '\n'
     << "subspace.method=" << to_string(c.method) << '\n'
     << "subspace.k=" << c.k << '\n'
     << "subspace.m=" << c.m << '\n'
     << "subspace.sigma0=" << (c.sigma0 < 0.0 ? std::string("auto") : f(c.sigma0)) << '\n'
     << "inference.algorithm=" << (c.algorithm == Algorithm::Hmc ? "hmc" : "vi") << '\n'
     << "inference.prior_std=" << f(c.prior_std) << '\n'
     << "inference.noise=" << static_cast<int>(c.noise_model().kind) << '\n'
     << "inference.noise_variance=" << f(c.noise.variance) << '\n'
     << "inference.j=" << c.j << '\n'
     << "inference.hmc=" << c.hmc.leapfrog_steps << ',' << c.hmc.warmup << ','
     << c.hmc.samples << ',' << f(c.hmc.target_accept) << ','
     << (c.hmc.step_size ? f(*c.hmc.step_size) : std::string("adapt")) << ','
     << f(c.hmc.step_jitter) << '\n'
     << "inference.vi=" << c.vi.steps << ',' << f(c.vi.learning_rate) << ','
     << f(c.vi.final_lr_fraction) << ',' << f(c.vi.init_log_std) << '\n';
  return os.str();
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

inline std::string config_hash(const ExperimentConfig& c) {
  return hex64(io::fnv1a(canonical_text(c)));
}

/// SHA-1 of "blob <size>\0<content>", the identifier git gives a file.
inline std::string git_blob_hash(const std::string& content) {
  boost::uuids::detail::sha1 sha;
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  sha.process_bytes(header.data(), header.size());
  sha.process_bytes(content.data(), content.size());
  boost::uuids::detail::sha1::digest_type d;
  sha.get_digest(d);
  std::string out;
  static constexpr char digits[] = "0123456789abcdef";
  for (unsigned word : d) {
    for (int s = 28; s >= 0; s -= 4) out += digits[(word >> s) & 0xf];
  }
  return out;
}

/// Content hash of the inputs: the csv file for csv data, the generator
/// settings for synthetic data.
inline std::string input_hash(const ExperimentConfig& c) {
  if (c.data.source == DataSpec::Source::Sine) {
    return git_blob_hash("sine n=" + std::to_string(c.data.n) + " n_test=" +
                         std::to_string(c.data.n_test) + " noise=" + format_g17(c.data.noise));
  }
  std::ifstream in(c.data.csv, std::ios::binary);
  if (!in) throw IoError("input_hash: cannot open '" + c.data.csv + "'");
  return git_blob_hash(std::string(std::istreambuf_iterator<char>(in), {}));
}

}  // namespace asbnn

#endif  // ASBNN_EXPERIMENT_CONFIG_HPP
