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


// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "asbnn/experiment/commands.hpp"
#include "asbnn/numerics/linalg.hpp"
#include "test_util.hpp"

#ifndef ASBNN_CONFIG_DIR
#define ASBNN_CONFIG_DIR "tools/configs"
#endif

namespace fs = std::filesystem;
using namespace asbnn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run_criterion(int id, const std::string& name, double limit_s,
                   const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0.0 && secs >= limit_s) {
    o.pass = false;
    o.detail += "; runtime over limit";
  }
  char timing[64];
  if (limit_s > 0.0) {
    std::snprintf(timing, sizeof(timing), "%.1f s (limit %.0f s)", secs, limit_s);
  } else {
    std::snprintf(timing, sizeof(timing), "%.1f s", secs);
  }
  std::printf("%s  %2d  %-34s %s; %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), timing);
  std::fflush(stdout);
  failures += !o.pass;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

constexpr double kLog2Pi = 1.8378770664093454836;

double log_normal(double y, double m, double v) {
  return -0.5 * kLog2Pi - 0.5 * std::log(v) - 0.5 * (y - m) * (y - m) / v;
}

// ----------------------------------------------------------------- 1

Outcome gradient_oracle() {
  double worst = 0.0;
  const GradTarget targets[] = {GradTarget::OutputMean, GradTarget::MseLoss,
                                GradTarget::GaussianNll, GradTarget::StandardizedSqResidual};
  for (GradTarget target : targets) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RngStream rng(7000 + seed);
      MlpConfig c;
      c.input_dim = 1 + rng.index(4);
      c.hidden.resize(1 + rng.index(3));
      for (auto& w : c.hidden) w = 2 + rng.index(10);
      c.head = needs_variance(target) || seed % 2 ? OutputHead::MeanVariance
                                                  : OutputHead::ScalarMean;
      c.activation = seed % 3 == 0 ? Activation::Relu : Activation::Tanh;
      auto theta = init_params(c, rng);
      for (double& t : theta) t += 0.1 * rng.normal();
      std::vector<double> x(c.input_dim);
      for (double& v : x) v = rng.normal();
      const std::optional<double> y =
          needs_label(target) ? std::optional<double>(rng.normal()) : std::nullopt;
      const auto g = backprop_param_grad(c, theta, x, y, target);
      const auto fd = testing::target_fd(c, theta, x, y, target);
      worst = std::max(worst, testing::max_rel_error(g, fd));
    }
  }
  return {worst <= 1e-5, fmt("max rel err %.2e (limit 1e-5) over 40 cases", worst)};
}

// ----------------------------------------------------------------- 2

Outcome eigen_svd() {
  const DenseMatrix s = testing::random_symmetric(50, 2);
  const auto eig = sym_eig_desc(s);
  DenseMatrix vl = eig.vectors;
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = 0; j < 50; ++j) vl(i, j) *= eig.values[j];
  DenseMatrix recon = matmul(vl, eig.vectors.transposed());
  for (std::size_t i = 0; i < recon.data().size(); ++i) recon.data()[i] -= s.data()[i];
  const double rel = frobenius_norm(recon) / frobenius_norm(s);
  const DenseMatrix vtv = matmul(eig.vectors.transposed(), eig.vectors);
  double ortho = 0.0;
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = 0; j < 50; ++j)
      ortho = std::max(ortho, std::abs(vtv(i, j) - (i == j ? 1.0 : 0.0)));

  GradientMatrix g;
  g.g = testing::random_matrix(40, 200, 3);
  const auto gram = projection_from_gradients(g, 40, EigenRoute::Gram);
  const auto direct = projection_from_gradients(g, 40, EigenRoute::Direct);
  double route = 0.0;
  for (std::size_t k = 0; k < 40; ++k) {
    double plus = 0.0, minus = 0.0;
    for (std::size_t i = 0; i < 200; ++i) {
      const double a = gram.stored_basis()(i, k), b = direct.stored_basis()(i, k);
      plus = std::max(plus, std::abs(a - b));
      minus = std::max(minus, std::abs(a + b));
    }
    route = std::max(route, std::min(plus, minus));
  }
  const bool pass = rel <= 1e-8 && ortho <= 1e-8 && route <= 1e-8;
  return {pass, fmt("recon %.1e, ortho %.1e, Gram vs direct %.1e (limits 1e-8)", rel, ortho,
                    route)};
}

// ----------------------------------------------------------------- 3

Outcome subspace_contract() {
  MlpConfig c;
  c.input_dim = 1;
  c.hidden = {16, 16};
  RngStream data_rng(31);
  const Dataset d = gen_sine(100, 0.4, data_rng);
  TrainHyper h;
  h.epochs = 200;
  h.snapshot_every = 1;
  const Trajectory traj = train_map(c, d, h);
  const ParamVector& anchor = traj.swa_mean;

  std::vector<std::pair<std::string, Projection>> projs;
  GradientSampling gs;
  gs.samples = 100;
  projs.emplace_back("AS", projection_from_gradients(
                               sample_gradient_matrix(ProjectionMethod::AS, c, anchor, d, gs,
                                                      RngStream(32)),
                               20));
  projs.emplace_back("LIS", projection_from_gradients(
                                sample_gradient_matrix(ProjectionMethod::LIS, c, anchor, d, gs,
                                                       RngStream(33)),
                                20));
  projs.emplace_back("PCA", pca_projection_from_deviations(iterate_deviations(traj, 100), 20));

  double ortho = 0.0, iso = 0.0, embed0 = 0.0;
  bool monotone = true;
  RngStream zrng(34);
  for (const auto& [name, p] : projs) {
    const DenseMatrix b = p.basis();
    const DenseMatrix ptp = matmul(b.transposed(), b);
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 20; ++j)
        ortho = std::max(ortho, std::abs(ptp(i, j) - (i == j ? 1.0 : 0.0)));
    for (std::size_t k = 1; k < 20; ++k) monotone &= p.spectrum()[k] <= p.spectrum()[k - 1];
    const SubspaceModel m{anchor, p, 1.0};
    const ParamVector at0 = embed(m, Vector(20, 0.0));
    for (std::size_t i = 0; i < at0.size(); ++i) embed0 = std::max(embed0, std::abs(at0[i] - anchor[i]));
    for (int t = 0; t < 20; ++t) {
      const Vector z = gaussian_vector(20, 0.0, 1.0, zrng);
      const ParamVector theta = embed(m, z);
      double pz2 = 0.0;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        pz2 += (theta[i] - anchor[i]) * (theta[i] - anchor[i]);
      }
      iso = std::max(iso, std::abs(std::sqrt(pz2) - norm2(z)));
    }
  }
  const bool pass = ortho <= 1e-8 && monotone && embed0 == 0.0 && iso <= 1e-10;
  return {pass, fmt("|P'P-I| %.1e, embed(0) err %.1e, isometry %.1e, ", ortho, embed0, iso) +
                    (monotone ? "spectra non-increasing" : "spectrum increases")};
}

// ----------------------------------------------------------------- 4

Outcome hmc_sanity() {
  const TargetDensity target{5, [](std::span<const double> x, std::span<double> g) {
                               double lp = 0.0;
                               for (std::size_t j = 0; j < x.size(); ++j) {
                                 lp -= 0.5 * x[j] * x[j];
                                 g[j] = -x[j];
                               }
                               return lp;
                             }};
  HmcOptions o;
  o.warmup = 1000;
  o.samples = 5000;
  RngStream rng(41);
  const auto s = hmc_run(target, Vector(5, 0.0), o, rng);
  double worst_mean = 0.0, vmin = 1e300, vmax = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    double m = 0.0, v = 0.0;
    for (std::size_t r = 0; r < s.count(); ++r) m += s.draws(r, k);
    m /= static_cast<double>(s.count());
    for (std::size_t r = 0; r < s.count(); ++r) v += (s.draws(r, k) - m) * (s.draws(r, k) - m);
    v /= static_cast<double>(s.count());
    worst_mean = std::max(worst_mean, std::abs(m));
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const bool pass = worst_mean <= 0.1 && vmin >= 0.85 && vmax <= 1.15 &&
                    s.acceptance_rate >= 0.6 && s.acceptance_rate <= 0.95;
  return {pass, fmt("max |mean| %.3f, var in [%.3f, %.3f], accept %.3f", worst_mean, vmin, vmax,
                    s.acceptance_rate)};
}

// ----------------------------------------------------------------- 5

Outcome vi_sanity() {
  // y = 8/3 with noise variance 1/3 and prior N(0, 1): posterior N(2, 0.25).
  constexpr double y = 8.0 / 3.0, lv = 1.0 / 3.0;
  VariationalTarget t;
  t.log_likelihood = {1, [](std::span<const double> z, std::span<double> g) {
                        g[0] = (y - z[0]) / lv;
                        return log_normal(y, z[0], lv);
                      }};
  t.prior = DiagGaussianPrior::isotropic(1, 1.0);
  RngStream rng(51), erng(52);
  const auto res = fit_vi(t, ViOptions{}, rng);
  const double mean = res.params.mean[0], sd = res.params.std(0);
  const double evidence = log_normal(y, 0.0, lv + 1.0);
  const double elbo = elbo_estimate(res.params, t, 100000, erng);
  const bool pass = std::abs(mean - 2.0) <= 0.05 && std::abs(sd - 0.5) <= 0.05 &&
                    std::abs(elbo - evidence) <= 0.05;
  return {pass, fmt("mean %.4f, std %.4f, ELBO - log evidence %.4f nats", mean, sd,
                    elbo - evidence)};
}

// ----------------------------------------------------------------- 6

Outcome full_rank_equivalence() {
  MlpConfig c;
  c.input_dim = 1;
  c.hidden = {3, 2};
  const std::size_t n = param_count(c);
  RngStream data_rng(61);
  const Dataset d = gen_sine(15, 0.3, data_rng);
  RngStream init(62);
  const ParamVector anchor = init_params(c, init);
  GradientMatrix g;
  g.g = testing::random_matrix(n, n, 63);
  const SubspaceModel m{anchor, projection_from_gradients(g, n), 1.5};
  const double noise = 0.2;
  const SubspacePosterior post(m, c, d, NoiseModel::fixed(noise));
  const DenseMatrix v = m.proj.basis();
  RngStream zrng(64);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Vector z = gaussian_vector(n, 0.0, 1.0, zrng);
    ParamVector theta = anchor;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) theta[i] += v(i, k) * z[k];
    double full = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      full += log_normal(d.y(i), forward(c, theta, d.x(i)).mean, noise);
    }
    for (std::size_t j = 0; j < n; ++j) full += log_normal(theta[j], anchor[j], 1.5 * 1.5);
    worst = std::max(worst, std::abs(post.log_posterior(z) - full));
  }
  return {worst <= 1e-10 && n <= 20,
          fmt("n = %.0f, max |subspace - full| %.2e (limit 1e-10) over 100 z",
              static_cast<double>(n), worst)};
}

// ----------------------------------------------------------------- 7, 9, 10

const fs::path kConfigs = ASBNN_CONFIG_DIR;
const fs::path kWork = fs::temp_directory_path() / "asbnn_acceptance";

std::string sine_config(const std::string& m) {
  return (kConfigs / ("sine_" + m + ".ini")).string();
}

RunOptions sine_out(const std::string& m, const std::string& tag = "") {
  RunOptions o;
  o.out = (kWork / ("sine_" + m + tag)).string();
  return o;
}

Outcome band_ordering() {
  const GridSpec grid = parse_grid("0:1:0.005");
  std::vector<double> widths;
  for (const std::string m : {"as", "lis", "pca", "full"}) {
    cmd_run(sine_config(m), sine_out(m));
    const PlotData pd = cmd_plotdata(sine_config(m), grid, sine_out(m));
    if (pd.x.size() != 201) return {false, "grid does not have 201 points"};
    double w = 0.0;
    for (std::size_t i = 0; i < pd.x.size(); ++i) w += 0.5 * (pd.upper[i] - pd.mean[i]);
    widths.push_back(w / static_cast<double>(pd.x.size()));
  }
  const double as = widths[0], lis = widths[1], pca = widths[2], full = widths[3];
  const double rel = std::abs(as - full) / full;
  const bool pass = as > pca && lis > pca && rel < 0.5;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "mean std AS %.4f, LIS %.4f, PCA %.4f, FULL %.4f; AS>PCA %s, LIS>PCA %s, "
                "|AS-FULL|/FULL %.3f (limit 0.5)",
                as, lis, pca, full, as > pca ? "yes" : "no", lis > pca ? "yes" : "no", rel);
  const std::string detail = buf;
  return {pass, detail};
}

Outcome self_consistency() {
  const ExperimentConfig c = load_config(sine_config("as"));
  const RunOptions o = sine_out("as");
  const FittedTrial ft = fit_trial(c, 0, trial_paths(o.out, 0), Stage::Eval, 1);
  const BmaPredictor bma(ft.model, c.network, ft.noise, ft.samples);
  RngStream rng(91);
  std::vector<PredictiveMixture> mixes;
  std::vector<double> ys;
  for (int i = 0; i < 2000; ++i) {
    Vector x{rng.uniform()};
    ft.data.scaler.features_forward(x);
    PredictiveMixture m = bma.predict(x).destandardized(ft.data.scaler);
    const std::size_t j = rng.index(m.components());
    ys.push_back(m.means[j] + std::sqrt(m.variances[j]) * rng.normal());
    mixes.push_back(std::move(m));
  }
  const double cov = coverage95(mixes, ys);
  return {cov >= 0.92 && cov <= 0.98, fmt("coverage95 %.4f on 2000 draws (band [0.92, 0.98])", cov)};
}

Outcome determinism() {
  const Json first = read_json((fs::path(sine_out("as").out) / "results.json").string());
  const Json second = cmd_run(sine_config("as"), sine_out("as", "_rerun"));
  const bool same = dump_json17(strip_times(first)) == dump_json17(strip_times(second));
  return {same, same ? "results.json identical apart from timing fields"
                     : "results.json differs between invocations"};
}

// ----------------------------------------------------------------- 8

Outcome uci_boston() {
  RunOptions o;
  o.out = (kWork / "boston_as").string();
  const Json j = cmd_run((kConfigs / "boston_as.ini").string(), o);
  const auto& agg = j["aggregate"];
  const double ll = agg["avg_log_lik"][0].get<double>();
  const double rmse = agg["rmse"][0].get<double>();
  const double cov = agg["coverage95"][0].get<double>();
  const bool pass = j["trials"].size() == 20 && std::abs(ll - (-2.76)) <= 0.45 &&
                    std::abs(rmse - 3.54) <= 1.0 && cov >= 0.93 && cov <= 1.0;
  return {pass, fmt("20 trials: log-lik %.3f (-2.76+-0.45), RMSE %.3f (3.54+-1.0), "
                    "coverage %.3f ([0.93, 1])",
                    ll, rmse, cov)};
}

}  // namespace

int main() {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  run_criterion(1, "gradient oracle", 5, gradient_oracle);
  run_criterion(2, "eigen / SVD correctness", 5, eigen_svd);
  run_criterion(3, "subspace contract", 0, subspace_contract);
  run_criterion(4, "HMC sanity", 30, hmc_sanity);
  run_criterion(5, "VI sanity", 30, vi_sanity);
  run_criterion(6, "full-rank equivalence", 0, full_rank_equivalence);
  run_criterion(7, "synthetic band ordering", 600, band_ordering);
  run_criterion(8, "UCI Boston reproduction", 1200, uci_boston);
  run_criterion(9, "self-consistency calibration", 0, self_consistency);
  run_criterion(10, "determinism", 0, determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
