// Copyright 2026 The pbmvfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// pbmvfl: run vertical federated training experiments, query the privacy
// accountant, or generate synthetic datasets.
//
//   pbmvfl run <spec> [--mode pbm|npq|ldp]
//   pbmvfl account --T 100 --B 100 --P 16 --b 16 --beta 0.1 --M 4 --N 50000 --alpha 2 4
//   pbmvfl gen <spec>

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pbmvfl/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"PBM-VFL simulator: private vertical federated learning with quantized secure aggregation"};
  app.require_subcommand(1);

  std::string run_spec;
  std::string run_mode;
  auto* run = app.add_subcommand("run", "Train according to an experiment spec file");
  run->add_option("spec", run_spec, "Experiment spec file")->required();
  run->add_option("--mode", run_mode, "Override the spec's mode")->check(CLI::IsMember({"pbm", "npq", "ldp"}));

  pbmvfl::AccountQuery query;
  auto* account = app.add_subcommand("account", "Print RDP budgets (C0 units) for a training configuration");
  account->add_option("--T", query.t, "Iterations")->required()->check(CLI::NonNegativeNumber);
  account->add_option("--B", query.batch, "Batch size")->required()->check(CLI::PositiveNumber);
  account->add_option("--P", query.p_dim, "Embedding dimension")->required()->check(CLI::PositiveNumber);
  account->add_option("--b", query.b, "PBM trial count")->required()->check(CLI::PositiveNumber);
  account->add_option("--beta", query.beta, "PBM privacy scale in [0, 1/4]")->required();
  account->add_option("--M", query.m, "Number of parties")->required()->check(CLI::PositiveNumber);
  account->add_option("--N", query.n, "Number of training samples")->required()->check(CLI::PositiveNumber);
  account->add_option("--alpha", query.alphas, "Renyi orders (> 1)")->required()->expected(1, -1);

  std::string gen_spec;
  auto* gen = app.add_subcommand("gen", "Write the spec's synthetic dataset as CSV");
  gen->add_option("spec", gen_spec, "Experiment spec file")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    std::optional<pbmvfl::Mode> mode;
    if (!run_mode.empty()) mode = pbmvfl::parse_mode(run_mode);
    return pbmvfl::cmd_run(run_spec, std::cout, std::cerr, mode);
  }
  if (*account) return pbmvfl::cmd_account(query, std::cout, std::cerr);
  return pbmvfl::cmd_gen(gen_spec, std::cout, std::cerr);
}
