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

// Experiment configuration: a JSON tree with a default for every key.
// Overrides use dotted paths, e.g. "learner.learning_rate=0.1".

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ipmpc/dp/value_iteration.hpp"
#include "ipmpc/env/battery.hpp"
#include "ipmpc/ipm/kernel.hpp"
#include "ipmpc/mpc/battery_mpc.hpp"
#include "ipmpc/rl/dpg.hpp"

namespace ipmpc::experiment {

using Json = nlohmann::ordered_json;

enum class Kind {
  kDpBaseline,
  kLearnFixedTau,
  kLearnHomotopy,
  kSmoothingProfile,
  kGradientDensity,
};

std::string_view kind_name(Kind kind);
// Throws ConfigError for unknown names.
Kind parse_kind(std::string_view name);

// Invalid configuration. `field` is the dotted path of the offending key,
// or "<input>:line" for parse errors.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct DpSettings {
  dp::DpGrid grid;
  double tolerance = 1e-6;
  int rollouts = 64;
  int horizon = 6200;
};

struct SmoothingSettings {
  mpc::PolicyParams theta{5.0, 5.0};
  double s_lo = 0.0;
  double s_hi = 1.0;
  int n_points = 201;
  std::vector<double> taus{1e-2, 1e-3, 1e-4};
};

struct DensitySettings {
  mpc::PolicyParams theta{5.0, 5.0};
  int steps = 1000;
  double initial_state = 0.5;
  double threshold = 0.01;
  std::vector<double> taus{1e-4, 1e-2};
};

struct ExperimentConfig {
  Kind kind = Kind::kLearnHomotopy;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out = "out";
  env::EnvParams env;
  mpc::MpcConfig mpc;
  ipm::SolveOptions solver;
  DpSettings dp;
  rl::LearnerConfig learner;
  SmoothingSettings smoothing;
  DensitySettings density;
};

// The full default tree.
Json default_config();

// Reads a JSON file. Parse errors carry the line number.
Json load_config_file(const std::string& path);

// Merges `overlay` into `base` key by key. Unknown keys are an error.
void merge_config(Json& base, const Json& overlay, const std::string& prefix = "");

// Applies one "dotted.key=value" override. The value is parsed as JSON and
// falls back to a plain string.
void apply_override(Json& tree, std::string_view assignment);

// Converts and validates. Throws ConfigError naming the field.
ExperimentConfig from_json(const Json& tree);
Json to_json(const ExperimentConfig& config);

// 64-bit FNV-1a over the compact serialization.
std::uint64_t fnv1a(std::string_view bytes);
std::string config_hash(const Json& tree);

// Parses "1,2,3".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace ipmpc::experiment
