/*
 Copyright 2026 The SGOPT Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Command-line front end: sgopt {validate | scale | swingup} [options]

#include <iostream>

#include "CLI11.hpp"
#include "sgopt/experiments.hpp"

namespace app = sgopt::app;

int main(int argc, char** argv) {
  CLI::App cli{"Factor-graph optimal control for chains of cart-poles"};
  cli.require_subcommand(1);

  std::string config_path, out_dir = ".", ordering;
  long seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--ordering", ordering, "elimination ordering")
        ->check(CLI::IsMember({"structured", "mindegree", "minfill"}));
    sub->add_option("--seed", seed, "seed recorded for reproducibility (runs are deterministic)");
  };

  auto* validate = cli.add_subcommand("validate", "compare the graph solver with Riccati on the linear model");
  add_common(validate);

  auto* scale = cli.add_subcommand("scale", "runtime and cost sweeps over N or the actuation ratio");
  add_common(scale);
  app::ScaleOptions scale_opts;
  std::string mode = "n";
  scale->add_option("--mode", mode, "sweep variable")->check(CLI::IsMember({"n", "rho"}))->required();
  scale->add_option("--range", scale_opts.range, "a:b:step or comma list")->required();
  scale->add_option("--fixed", scale_opts.fixed, "rho for mode n (0.25), N for mode rho (30)");
  scale->add_option("--horizon", scale_opts.horizon, "time steps per problem")->check(CLI::PositiveNumber);
  scale->add_flag("--svg", scale_opts.svg, "write cost and runtime charts");

  auto* swingup = cli.add_subcommand("swingup", "nonlinear swing-up with the Levenberg-Marquardt loop");
  add_common(swingup);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : app::kExitUsage;
  }

  app::CommonOptions common;
  if (!config_path.empty()) common.config = config_path;
  common.out_dir = out_dir;
  if (!ordering.empty()) common.ordering = app::parse_ordering(ordering);
  if (seed != 0) common.seed = seed;

  try {
    std::filesystem::create_directories(common.out_dir);
    if (*validate) return app::cmd_validate(common, std::cout, std::cerr);
    if (*scale) {
      scale_opts.mode = mode == "n" ? app::ScaleMode::N : app::ScaleMode::Rho;
      return app::cmd_scale(common, scale_opts, std::cout, std::cerr);
    }
    if (*swingup) return app::cmd_swingup(common, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return app::kExitUsage;
  }
  return app::kExitUsage;
}
