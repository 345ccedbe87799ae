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

#ifndef ASBNN_PRETRAIN_SWA_HPP
#define ASBNN_PRETRAIN_SWA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "asbnn/data/dataset.hpp"
#include "asbnn/error.hpp"
#include "asbnn/network/mlp.hpp"
#include "asbnn/numerics/dense_matrix.hpp"
#include "asbnn/numerics/rng.hpp"

namespace asbnn {

struct TrainHyper {
  std::size_t epochs = 1000;
  std::size_t batch_size = 10;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double swa_start = 0.75;  // fraction of total steps before snapshots begin
  std::size_t snapshot_every = 0;  // in steps; 0 = once per epoch
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw InvalidInput("TrainHyper: epochs must be >= 1");
    if (batch_size < 1) throw InvalidInput("TrainHyper: batch size must be >= 1");
    if (!(swa_start > 0.0 && swa_start < 1.0)) {
      throw InvalidInput("TrainHyper: swa start fraction must be in (0, 1)");
    }
    if (!(learning_rate > 0.0)) throw InvalidInput("TrainHyper: learning rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw InvalidInput("TrainHyper: momentum must be in [0, 1)");
    }
  }
};

struct Trajectory {
  std::vector<ParamVector> snapshots;
  ParamVector final;
  ParamVector swa_mean;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Loss minimized during pretraining: squared error for a scalar head,
/// Gaussian negative log-likelihood for a mean-and-variance head.
inline GradTarget training_target(const MlpConfig& config) {
  return config.head == OutputHead::MeanVariance ? GradTarget::GaussianNll
                                                 : GradTarget::MseLoss;
}

inline double mean_training_loss(const MlpConfig& config, std::span<const double> theta,
                                 const Dataset& data) {
  const GradTarget target = training_target(config);
  MlpWorkspace ws(config);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += target_adjoint(target, ws.forward(theta, data.x(i)), data.y(i)).value;
  }
  return total / static_cast<double>(data.size());
}

/// Minibatch SGD with momentum (v <- mu v + g; theta <- theta - lr v) from
/// init_params(config, RngStream(seed, 0)). Batches come from a per-epoch
/// shuffle drawn on RngStream(seed, 1). Snapshots are taken every
/// `snapshot_every` steps once swa_start of all steps have run.
inline Trajectory train_map(const MlpConfig& config, const Dataset& data,
                            const TrainHyper& hyper) {
  hyper.validate();
  if (data.empty()) throw InvalidInput("train_map: empty dataset");
  RngStream init_rng(hyper.seed, 0);
  RngStream batch_rng(hyper.seed, 1);
  ParamVector theta = init_params(config, init_rng);
  const std::size_t n = theta.size();
  const GradTarget target = training_target(config);

  const std::size_t steps_per_epoch =
      (data.size() + hyper.batch_size - 1) / hyper.batch_size;
  const std::size_t total_steps = steps_per_epoch * hyper.epochs;
  const std::size_t start_step =
      static_cast<std::size_t>(std::floor(hyper.swa_start * static_cast<double>(total_steps)));
  const std::size_t interval = hyper.snapshot_every ? hyper.snapshot_every : steps_per_epoch;

  Trajectory traj;
  traj.initial_loss = mean_training_loss(config, theta, data);

  MlpWorkspace ws(config);
  Vector grad(n), velocity(n, 0.0);
  ParamVector last_finite = theta;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), batch_rng.engine());
    for (std::size_t b = 0; b < data.size(); b += hyper.batch_size) {
      const std::size_t e = std::min(data.size(), b + hyper.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t i = order[k];
        const NetOutput out = ws.forward(theta, data.x(i));
        const OutputAdjoint adj = target_adjoint(target, out, data.y(i));
        loss += adj.value;
        ws.backward(theta, adj.d_mean, adj.d_variance, grad);
      }
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("train_map: loss became non-finite at step " +
                                   std::to_string(step),
                               last_finite);
      }
      last_finite = theta;
      const double scale = 1.0 / static_cast<double>(e - b);
      for (std::size_t j = 0; j < n; ++j) {
        velocity[j] = hyper.momentum * velocity[j] + scale * grad[j];
        theta[j] -= hyper.learning_rate * velocity[j];
      }
      ++step;
      if (step > start_step && (step - start_step) % interval == 0) {
        traj.snapshots.push_back(theta);
      }
    }
  }
  if (!std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); })) {
    throw TrainingDiverged("train_map: parameters became non-finite", last_finite);
  }
  if (traj.snapshots.empty()) traj.snapshots.push_back(theta);
  traj.final = theta;
  traj.final_loss = mean_training_loss(config, theta, data);

  traj.swa_mean.assign(n, 0.0);
  for (const auto& s : traj.snapshots) axpy(1.0, s, traj.swa_mean);
  const double count = static_cast<double>(traj.snapshots.size());
  for (double& v : traj.swa_mean) v /= count;
  return traj;
}

/// Rows are (snapshot_t - swa mean) for the last `count` snapshots.
inline DenseMatrix iterate_deviations(const Trajectory& traj, std::size_t count) {
  if (count == 0 || count > traj.snapshots.size()) {
    throw InvalidInput("iterate_deviations: requested " + std::to_string(count) +
                       " deviations, trajectory has " +
                       std::to_string(traj.snapshots.size()) + " snapshots");
  }
  const std::size_t n = traj.swa_mean.size();
  DenseMatrix d(count, n);
  const std::size_t first = traj.snapshots.size() - count;
  for (std::size_t r = 0; r < count; ++r) {
    const auto& s = traj.snapshots[first + r];
    for (std::size_t j = 0; j < n; ++j) d(r, j) = s[j] - traj.swa_mean[j];
  }
  return d;
}

}  // namespace asbnn

#endif  // ASBNN_PRETRAIN_SWA_HPP
