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


#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "asbnn/experiment/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian MLP inference over active subspaces"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out, from = "pretrain";
  std::size_t threads = 1;
  app.add_option("--out", out, "Output directory (overrides the config)");
  app.add_option("--from", from, "First stage to execute: pretrain|subspace|inference|eval")
      ->check(CLI::IsMember({"pretrain", "subspace", "inference", "eval"}));
  app.add_option("--threads", threads, "Worker threads (0: hardware concurrency)");

  std::string config;
  auto* run = app.add_subcommand("run", "Run all trials of an experiment");
  run->add_option("config", config, "Experiment config file")->required();

  std::string grid = "0:1:0.005";
  std::size_t trial = 0;
  auto* plot = app.add_subcommand("plotdata", "Emit bands.csv and curves.csv for a finished run");
  plot->add_option("config", config, "Experiment config file")->required();
  plot->add_option("--grid", grid, "Input grid a:b:step");
  plot->add_option("--trial", trial, "Trial whose draws are plotted");

  std::vector<std::string> files;
  auto* cmp = app.add_subcommand("compare", "Tabulate several results.json files");
  cmp->add_option("files", files, "results.json files")->required()->expected(2, -1);

  CLI11_PARSE(app, argc, argv);

  asbnn::RunOptions opts;
  opts.out = out;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  opts.threads = threads;
  try {
    opts.from = asbnn::parse_stage(from);
    if (*run) {
      const auto doc = asbnn::cmd_run(config, opts);
      const auto& agg = doc["aggregate"];
      std::printf("%s %s on %s, %zu trial(s)\n", doc["name"].get<std::string>().c_str(),
                  doc["method"].get<std::string>().c_str(),
                  doc["dataset"].get<std::string>().c_str(), doc["trials"].size());
      for (const char* m : {"rmse", "avg_log_lik", "coverage95"}) {
        std::printf("  %-12s %.4f +- %.4f\n", m, agg[m][0].get<double>(),
                    agg[m][1].get<double>());
      }
    } else if (*plot) {
      const auto pd = asbnn::cmd_plotdata(config, asbnn::parse_grid(grid), opts, trial);
      std::printf("wrote bands.csv (%zu rows) and curves.csv (%zu curves)\n", pd.x.size(),
                  pd.curves.size());
    } else if (*cmp) {
      std::cout << asbnn::cmd_compare(files, out);
    }
  } catch (const asbnn::StageError& e) {
    std::cerr << "asbnn: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "asbnn: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
