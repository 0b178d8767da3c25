// Copyright 2026 The ipmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ipmpc run     [--config f.json] [--set k=v]... [--out dir] [--seeds 1,2]
//               [--kind name]
// ipmpc compare a.csv b.csv [--out summary.json]
// ipmpc config  [--config f.json] [--set k=v]...   (prints effective config)

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipmpc/experiment/config.hpp"
#include "ipmpc/experiment/runner.hpp"

namespace {

using ipmpc::experiment::Json;

Json effective_tree(const std::string& config_path,
                    const std::vector<std::string>& overrides) {
  namespace ex = ipmpc::experiment;
  Json tree = ex::default_config();
  if (!config_path.empty()) {
    ex::merge_config(tree, ex::load_config_file(config_path));
  }
  for (const auto& o : overrides) ex::apply_override(tree, o);
  return tree;
}

}  // namespace

int main(int argc, char** argv) {
  namespace ex = ipmpc::experiment;
  CLI::App app{"Interior-point MPC policies learned by policy gradient"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string seeds;
  std::string kind;

  auto* run = app.add_subcommand("run", "Run one experiment kind");
  run->add_option("--config", config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  run->add_option("--set", overrides, "Override, dotted.key=value")
      ->take_all();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seeds", seeds, "Comma-separated seed list");
  run->add_option("--kind", kind,
                  "dp-baseline | learn-fixed-tau | learn-homotopy | "
                  "smoothing-profile | gradient-density");

  auto* show = app.add_subcommand("config", "Print the effective config");
  show->add_option("--config", config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  show->add_option("--set", overrides, "Override, dotted.key=value")
      ->take_all();

  std::string trace_a;
  std::string trace_b;
  std::string summary_path;
  auto* cmp = app.add_subcommand("compare", "Compare two learning traces");
  cmp->add_option("trace_a", trace_a)->required()->check(CLI::ExistingFile);
  cmp->add_option("trace_b", trace_b)->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", summary_path, "Write the JSON summary here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmp) {
      const Json summary = ex::compare_traces(ex::read_trace_csv(trace_a),
                                              ex::read_trace_csv(trace_b));
      if (summary_path.empty()) {
        std::cout << summary.dump(2) << '\n';
      } else {
        std::ofstream(summary_path) << summary.dump(2) << '\n';
      }
      return 0;
    }

    Json tree = effective_tree(config_path, overrides);
    if (!kind.empty()) tree["kind"] = kind;
    if (!out_dir.empty()) tree["out"] = out_dir;
    if (!seeds.empty()) {
      Json list = Json::array();
      for (auto s : ex::parse_seed_list(seeds)) list.push_back(s);
      tree["seeds"] = list;
    }
    const ex::ExperimentConfig config = ex::from_json(tree);

    if (*show) {
      std::cout << ex::to_json(config).dump(2) << '\n';
      return 0;
    }

    const ex::RunManifest manifest = ex::run_experiment(config);
    std::cout << ex::kind_name(config.kind) << ": " << manifest.files.size()
              << " files in " << config.out << " ("
              << manifest.wall_clock_seconds << " s, config "
              << manifest.config_hash << ")\n";
    for (const auto& e : manifest.errors) std::cerr << "error: " << e << '\n';
    return manifest.ok() ? 0 : 1;
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ex::TraceSchemaError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
