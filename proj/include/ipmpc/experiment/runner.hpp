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

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipmpc/experiment/config.hpp"

namespace ipmpc::experiment {

struct ArtifactFile {
  std::string name;
  std::size_t rows = 0;  // data rows, header excluded
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string config_hash;
  Json config;
  std::vector<ArtifactFile> files;
  Json versions;
  double wall_clock_seconds = 0.0;
  Json metrics = Json::object();  // keyed by seed
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

Json manifest_json(const RunManifest& manifest);
Json version_info();

// Runs `config.kind` for every seed (seeds in parallel) and writes the CSVs
// and manifest.json into config.out. A failing seed keeps its partial output
// and is listed in `errors`; the other seeds still run.
RunManifest run_experiment(const ExperimentConfig& config);

// Learner settings for the two learning kinds: the fixed run pins tau at the
// floor.
rl::LearnerConfig learner_for(const ExperimentConfig& config, Kind kind);

// Per-sample gradient terms along one exploratory closed-loop trajectory with
// a critic fitted on that trajectory, normalized by the largest absolute
// component over the trace.
struct DensityRow {
  int k = 0;
  double s = 0.0;
  double a = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double g1_normalized = 0.0;
  double g2_normalized = 0.0;
  double magnitude = 0.0;  // max(|g1_normalized|, |g2_normalized|)
};

struct DensityTrace {
  double tau = 0.0;
  std::vector<DensityRow> rows;

  double fraction_below(double threshold) const;
};

DensityTrace gradient_density(const mpc::MpcPolicy& policy,
                              const env::Battery& battery,
                              const mpc::PolicyParams& theta, double tau,
                              const DensitySettings& settings,
                              const rl::LearnerConfig& learner,
                              std::uint64_t seed);

class TraceSchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads a learning trace CSV. Missing or misplaced columns raise
// TraceSchemaError naming the column.
std::vector<rl::TraceRow> read_trace_csv(const std::filesystem::path& path);

// Trapezoidal area under J over the logged steps.
double j_curve_area(const std::vector<rl::TraceRow>& rows);

// Per-step J difference (a - b) over the common steps, plus convergence
// step and J area for each trace.
Json compare_traces(const std::vector<rl::TraceRow>& a,
                    const std::vector<rl::TraceRow>& b);

}  // namespace ipmpc::experiment
