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

#ifndef ASBNN_EXPERIMENT_PIPELINE_HPP
#define ASBNN_EXPERIMENT_PIPELINE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "asbnn/data/dataset.hpp"
#include "asbnn/error.hpp"
#include "asbnn/experiment/config.hpp"
#include "asbnn/inference/bma.hpp"
#include "asbnn/inference/hmc.hpp"
#include "asbnn/inference/posterior.hpp"
#include "asbnn/inference/sample_io.hpp"
#include "asbnn/inference/vi.hpp"
#include "asbnn/metrics/metrics.hpp"
#include "asbnn/network/checkpoint.hpp"
#include "asbnn/numerics/binary_io.hpp"
#include "asbnn/numerics/parallel.hpp"
#include "asbnn/pretrain/swa.hpp"
#include "asbnn/subspace/projection.hpp"
#include "asbnn/subspace/projection_io.hpp"

namespace asbnn {

enum class Stage { Pretrain = 0, Subspace = 1, Inference = 2, Eval = 3 };

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::Pretrain: return "pretrain";
    case Stage::Subspace: return "subspace";
    case Stage::Inference: return "inference";
    case Stage::Eval: return "eval";
  }
  return "?";
}

inline Stage parse_stage(const std::string& s) {
  for (Stage st : {Stage::Pretrain, Stage::Subspace, Stage::Inference, Stage::Eval}) {
    if (to_string(st) == s) return st;
  }
  throw InvalidInput("unknown stage '" + s + "' (expected pretrain|subspace|inference|eval)");
}

/// Failure inside one pipeline stage of one trial.
class StageError : public Error {
 public:
  StageError(Stage stage, std::size_t trial, const std::string& what)
      : Error("stage " + to_string(stage) + ", trial " + std::to_string(trial) + ": " + what),
        stage_(stage),
        trial_(trial) {}
  Stage stage() const noexcept { return stage_; }
  std::size_t trial() const noexcept { return trial_; }

 private:
  Stage stage_;
  std::size_t trial_;
};

struct RunOptions {
  std::string out;  // empty: the config's output directory
  Stage from = Stage::Pretrain;
  std::size_t threads = 1;
};

/// Training and test data of one trial. Training data (and test features)
/// are standardized when the config asks for it; `test_y` stays in original
/// units.
struct TrialData {
  Dataset train;
  Dataset test;
  Vector test_y;
  Scaler scaler;
};

inline std::uint64_t trial_seed(const ExperimentConfig& c, std::size_t trial) {
  return c.seed + trial;
}

inline TrialData prepare_data(const ExperimentConfig& c, std::uint64_t seed) {
  Dataset train, test;
  if (c.data.source == DataSpec::Source::Sine) {
    RngStream train_rng(seed, 1), test_rng(seed, 2);
    train = gen_sine(c.data.n, c.data.noise, train_rng);
    test = gen_sine(c.data.n_test, c.data.noise, test_rng);
  } else {
    const Dataset full = load_csv(c.data.csv, c.data.target);
    RngStream split_rng(seed, 1);
    std::tie(train, test) = split(full, c.data.test_fraction, split_rng);
  }
  TrialData td;
  td.test_y = test.targets;
  if (c.data.standardize) {
    auto st = standardize(train, test);
    td.train = std::move(st.train);
    td.test = std::move(st.test);
    td.scaler = st.scaler;
  } else {
    td.train = std::move(train);
    td.test = std::move(test);
    td.scaler = Scaler::identity(td.train.dim());
  }
  return td;
}

namespace detail {

inline constexpr std::string_view kDeviationsMagic = "ASBNDEVS";

inline void save_matrix(const std::string& path, const DenseMatrix& m) {
  auto os = io::open_out(path);
  io::put_magic(os, kDeviationsMagic);
  io::put_u32(os, 1);
  io::put_u64(os, m.rows());
  io::put_u64(os, m.cols());
  io::put_f64s(os, m.data());
  if (!os) throw IoError("save_matrix: write failed for '" + path + "'");
}

inline DenseMatrix load_matrix(const std::string& path) {
  auto is = io::open_in(path);
  io::expect_magic(is, kDeviationsMagic);
  if (io::get_u32(is) != 1) throw IoError("load_matrix: unsupported version");
  const std::uint64_t r = io::get_u64(is), c = io::get_u64(is);
  return DenseMatrix(r, c, io::get_f64s(is, r * c));
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// log of the training RMSE at theta, used to start the global noise
/// coordinate.
inline double log_rms_residual(const MlpConfig& config, std::span<const double> theta,
                               const Dataset& data) {
  double ss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data.y(i) - forward(config, theta, data.x(i)).mean;
    ss += r * r;
  }
  return 0.5 * std::log(std::max(ss / static_cast<double>(data.size()), 1e-12));
}

struct TrialPaths {
  std::filesystem::path dir;
  std::string checkpoint() const { return (dir / "checkpoint.bin").string(); }
  std::string deviations() const { return (dir / "deviations.bin").string(); }
  std::string projection() const { return (dir / "projection.bin").string(); }
  std::string samples() const { return (dir / "samples.csv").string(); }
};

inline TrialPaths trial_paths(const std::string& out, std::size_t trial) {
  char name[32];
  std::snprintf(name, sizeof(name), "trial_%03zu", trial);
  return {std::filesystem::path(out) / name};
}

struct StageTimes {
  double pretrain = 0.0, subspace = 0.0, inference = 0.0, eval = 0.0;
};

struct TrialResult {
  std::uint64_t seed = 0;
  EvalReport report;
  StageTimes times;
};

/// Fitted state needed for prediction: subspace model, draws, noise.
struct FittedTrial {
  TrialData data;
  SubspaceModel model;
  PosteriorSamples samples;
  NoiseModel noise;
};

/// Runs (or resumes from `from`) the stages of one trial up to the posterior
/// draws. Stages before `from` load their artifacts from `paths`.
inline FittedTrial fit_trial(const ExperimentConfig& c, std::size_t trial,
                             const TrialPaths& paths, Stage from, std::size_t threads,
                             StageTimes* times = nullptr) {
  const std::uint64_t seed = trial_seed(c, trial);
  const MlpConfig& net = c.network;
  StageTimes local;
  StageTimes& t = times ? *times : local;
  Stage stage = Stage::Pretrain;
  try {
    FittedTrial ft;
    ft.data = prepare_data(c, seed);
    ft.noise = c.noise_model();
    const Dataset& train = ft.data.train;

    auto t0 = std::chrono::steady_clock::now();
    ParamVector anchor;
    DenseMatrix deviations;
    if (from <= Stage::Pretrain) {
      TrainHyper h = c.pretrain;
      h.seed = seed;
      const Trajectory traj = train_map(net, train, h);
      anchor = traj.swa_mean;
      std::filesystem::create_directories(paths.dir);
      save_checkpoint(paths.checkpoint(), net, anchor);
      if (c.method == Method::PCA) {
        if (traj.snapshots.size() < c.m) {
          throw InvalidInput("PCA needs " + std::to_string(c.m) + " snapshots, training kept " +
                             std::to_string(traj.snapshots.size()) +
                             "; lower pretrain.snapshot_every or raise pretrain.epochs");
        }
        deviations = iterate_deviations(traj, c.m);
        detail::save_matrix(paths.deviations(), deviations);
      }
    } else {
      anchor = load_checkpoint(paths.checkpoint(), net);
      if (c.method == Method::PCA && from <= Stage::Subspace) {
        deviations = detail::load_matrix(paths.deviations());
      }
    }
    t.pretrain = detail::seconds_since(t0);

    stage = Stage::Subspace;
    t0 = std::chrono::steady_clock::now();
    const std::size_t n = anchor.size();
    if (c.method == Method::Full) {
      ft.model = SubspaceModel::full(n, c.prior_std);
    } else if (c.method == Method::Sgd) {
      ft.model = {anchor, Projection(DenseMatrix(n, 0), Vector{}, ProjectionMethod::PCA),
                  c.prior_std};
    } else {
      Projection proj;
      if (from <= Stage::Subspace) {
        if (c.method == Method::PCA) {
          proj = pca_projection_from_deviations(deviations, c.k);
        } else {
          const auto kind = c.method == Method::AS ? ProjectionMethod::AS : ProjectionMethod::LIS;
          GradientSampling gs;
          gs.samples = c.m;
          gs.sigma0 = c.sigma0;
          gs.threads = threads;
          const auto g = sample_gradient_matrix(kind, net, anchor, train, gs, RngStream(seed, 3));
          proj = projection_from_gradients(g, c.k);
        }
        save_projection(paths.projection(), proj);
      } else {
        proj = load_projection(paths.projection());
        if (proj.dim() != n || proj.rank() != c.k) {
          throw IoError("'" + paths.projection() + "' does not match the config");
        }
      }
      ft.model = {anchor, std::move(proj), c.prior_std};
    }
    t.subspace = detail::seconds_since(t0);

    stage = Stage::Inference;
    t0 = std::chrono::steady_clock::now();
    const std::size_t k = ft.model.k();
    const std::size_t dim = k + ft.noise.extra_dims();
    Vector z0(dim, 0.0);
    if (c.method == Method::Full) std::copy(anchor.begin(), anchor.end(), z0.begin());
    if (ft.noise.extra_dims()) z0[k] = log_rms_residual(net, anchor, train);

    if (c.method == Method::Sgd) {
      ft.samples.draws = DenseMatrix(1, dim, z0);
    } else if (from <= Stage::Inference) {
      const SubspacePosterior post(ft.model, net, train, ft.noise);
      if (c.algorithm == Algorithm::Hmc) {
        RngStream rng(seed, 4);
        ft.samples = draw_posterior(hmc_run(post.target(), z0, c.hmc, rng), c.j);
      } else {
        ViOptions opts = c.vi;
        opts.init_mean = z0;
        RngStream rng(seed, 4), draw_rng(seed, 5);
        const ViResult fit = fit_vi(VariationalTarget::from_posterior(post), opts, rng);
        ft.samples = draw_posterior(fit.params, c.j, draw_rng);
      }
      save_samples_csv(paths.samples(), ft.samples, k);
    } else {
      ft.samples = load_samples_csv(paths.samples());
      if (ft.samples.dim() != dim) {
        throw IoError("'" + paths.samples() + "' does not match the config");
      }
    }
    t.inference = detail::seconds_since(t0);
    return ft;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, trial, e.what());
  }
}

inline TrialResult run_trial(const ExperimentConfig& c, std::size_t trial,
                             const TrialPaths& paths, Stage from, std::size_t threads) {
  TrialResult res;
  res.seed = trial_seed(c, trial);
  const FittedTrial ft = fit_trial(c, trial, paths, from, threads, &res.times);
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const BmaPredictor bma(ft.model, c.network, ft.noise, ft.samples);
    const auto mix = bma.predict_all(ft.data.test.features, threads);
    res.report = evaluate(mix, ft.data.test_y, ft.data.scaler);
    res.times.eval = detail::seconds_since(t0);
  } catch (const std::exception& e) {
    throw StageError(Stage::Eval, trial, e.what());
  }
  return res;
}

/// Trials run concurrently when there are several and threads allow it;
/// a single trial gets the threads for gradient collection and prediction.
/// Results do not depend on the thread count.
inline std::vector<TrialResult> run_trials(const ExperimentConfig& c, const std::string& out,
                                           Stage from, std::size_t threads) {
  std::vector<TrialResult> results(c.trials);
  const std::size_t inner = c.trials == 1 ? threads : 1;
  parallel_for(c.trials, threads, [&](std::size_t t) {
    results[t] = run_trial(c, t, trial_paths(out, t), from, inner);
  });
  return results;
}

}  // namespace asbnn

#endif  // ASBNN_EXPERIMENT_PIPELINE_HPP
