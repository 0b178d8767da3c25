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

#include "ipmpc/experiment/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <Eigen/Core>

#include "ipmpc/dp/performance.hpp"
#include "ipmpc/dp/value_iteration.hpp"

#ifndef IPMPC_VERSION
#define IPMPC_VERSION "unknown"
#endif

namespace ipmpc::experiment {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDensityNoiseStream = 10;
constexpr std::uint64_t kDensityExplorationStream = 11;

const char* const kTraceColumns[] = {"step", "theta1",    "theta2",
                                     "tau",  "J",         "J_se",
                                     "grad_norm", "critic_residual"};

// Writes through a string so a file is either complete or absent.
ArtifactFile write_artifact(const fs::path& dir, const std::string& name,
                            const std::string& contents) {
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  out.close();
  ArtifactFile f;
  f.name = name;
  f.rows = static_cast<std::size_t>(
      std::max<std::ptrdiff_t>(0, std::count(contents.begin(), contents.end(), '\n') - 1));
  f.bytes = contents.size();
  return f;
}

std::ostringstream csv_stream() {
  std::ostringstream os;
  os << std::setprecision(17);
  return os;
}

std::string seed_file(Kind kind, std::uint64_t seed) {
  return std::string(kind_name(kind)) + "_" + std::to_string(seed) + ".csv";
}

bool trace_finite(const rl::LearningTrace& t) {
  for (const auto& r : t.rows) {
    for (double v : {r.theta1, r.theta2, r.tau, r.j, r.j_se, r.grad_norm,
                     r.critic_residual}) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

Json learning_metrics(const rl::LearningTrace& t) {
  const auto& last = t.rows.back();
  return Json{{"final_theta", Json::array({last.theta1, last.theta2})},
              {"final_tau", last.tau},
              {"final_J", last.j},
              {"final_J_se", last.j_se},
              {"steps_to_convergence", rl::steps_to_convergence(t.rows)},
              {"J_area", j_curve_area(t.rows)},
              {"skipped_samples", t.skipped_samples},
              {"critic_failures", t.critic_failures}};
}

struct SeedResult {
  std::vector<ArtifactFile> files;
  Json metrics = Json::object();
  std::string error;
};

SeedResult run_learning_seed(const ExperimentConfig& c, std::uint64_t seed,
                             const fs::path& dir) {
  SeedResult out;
  const mpc::MpcPolicy policy(c.mpc, c.solver);
  const env::Battery battery(c.env);
  const rl::LearnerConfig learner = learner_for(c, c.kind);
  rl::LearningTrace trace;
  try {
    trace = rl::run_learning(learner, policy, battery, seed);
  } catch (const rl::LearningAborted& e) {
    trace = e.partial();
    out.error = e.what();
  }
  std::ostringstream os = csv_stream();
  rl::write_trace_csv(trace, os);
  out.files.push_back(write_artifact(dir, seed_file(c.kind, seed), os.str()));
  if (!trace.rows.empty()) out.metrics = learning_metrics(trace);
  if (!trace_finite(trace) && out.error.empty()) {
    out.error = "non-finite value in learning trace";
  }
  return out;
}

SeedResult run_smoothing_seed(const ExperimentConfig& c, std::uint64_t seed,
                              const fs::path& dir) {
  SeedResult out;
  const mpc::MpcPolicy policy(c.mpc, c.solver);
  const auto& sm = c.smoothing;
  std::vector<double> grid(sm.n_points);
  for (int i = 0; i < sm.n_points; ++i) {
    grid[i] = sm.s_lo + (sm.s_hi - sm.s_lo) * i / (sm.n_points - 1);
  }
  std::ostringstream os = csv_stream();
  os << "tau,s,action,dpi_dtheta1,dpi_dtheta2,ok\n";
  int failures = 0;
  for (double tau : sm.taus) {
    double max_norm = 0.0;
    for (const auto& p : mpc::smoothness_profile(policy, sm.theta, tau, grid)) {
      os << tau << ',' << p.s << ',' << p.action << ',' << p.gradient[0] << ','
         << p.gradient[1] << ',' << (p.ok ? 1 : 0) << '\n';
      if (p.ok) max_norm = std::max(max_norm, p.gradient.norm());
      if (!p.ok) ++failures;
    }
    std::ostringstream key;
    key << std::setprecision(6) << tau;
    out.metrics["max_gradient_norm"][key.str()] = max_norm;
  }
  out.metrics["failed_points"] = failures;
  out.files.push_back(write_artifact(dir, seed_file(c.kind, seed), os.str()));
  if (failures > 0) {
    out.error = std::to_string(failures) + " grid points failed to solve";
  }
  return out;
}

SeedResult run_density_seed(const ExperimentConfig& c, std::uint64_t seed,
                            const fs::path& dir) {
  SeedResult out;
  const mpc::MpcPolicy policy(c.mpc, c.solver);
  const env::Battery battery(c.env);
  std::ostringstream os = csv_stream();
  os << "tau,k,s,a,g1,g2,g1_norm,g2_norm,magnitude\n";
  try {
    for (double tau : c.density.taus) {
      const DensityTrace t = gradient_density(
          policy, battery, c.density.theta, tau, c.density, c.learner, seed);
      for (const auto& r : t.rows) {
        os << tau << ',' << r.k << ',' << r.s << ',' << r.a << ',' << r.g1
           << ',' << r.g2 << ',' << r.g1_normalized << ',' << r.g2_normalized
           << ',' << r.magnitude << '\n';
      }
      std::ostringstream key;
      key << std::setprecision(6) << tau;
      out.metrics["fraction_below_threshold"][key.str()] =
          t.fraction_below(c.density.threshold);
    }
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.files.push_back(write_artifact(dir, seed_file(c.kind, seed), os.str()));
  return out;
}

SeedResult run_dp_seed(const ExperimentConfig& c, const dp::DpSolution& sol,
                       std::uint64_t seed, const fs::path& dir) {
  SeedResult out;
  const env::Battery battery(c.env);
  dp::RolloutSettings rs;
  rs.discount = c.dp.grid.discount;
  rs.n_rollouts = c.dp.rollouts;
  rs.horizon = c.dp.horizon;
  rs.seed = seed;
  rs.parallel = false;  // seeds already run in parallel
  const auto best = dp::policy_performance(
      [&] { return [&](double s) { return dp::optimal_action(sol, s).action; }; },
      battery, rs);
  const auto idle = dp::policy_performance(
      [] { return [](double) { return 0.0; }; }, battery, rs);
  std::ostringstream os = csv_stream();
  os << "policy,J,J_se,rollouts\n";
  os << "dp," << best.mean << ',' << best.standard_error << ',' << best.rollouts
     << '\n';
  os << "zero," << idle.mean << ',' << idle.standard_error << ','
     << idle.rollouts << '\n';
  out.files.push_back(write_artifact(dir, seed_file(c.kind, seed), os.str()));
  out.metrics = Json{{"J_dp", best.mean},
                     {"J_dp_se", best.standard_error},
                     {"J_zero", idle.mean},
                     {"J_zero_se", idle.standard_error}};
  return out;
}

}  // namespace

rl::LearnerConfig learner_for(const ExperimentConfig& config, Kind kind) {
  rl::LearnerConfig l = config.learner;
  if (kind == Kind::kLearnFixedTau) {
    l.tau.initial = l.tau.floor;
    l.tau.step = 0.0;
  }
  return l;
}

double DensityTrace::fraction_below(double threshold) const {
  if (rows.empty()) return 0.0;
  const auto n = std::count_if(rows.begin(), rows.end(), [&](const DensityRow& r) {
    return r.magnitude < threshold;
  });
  return static_cast<double>(n) / static_cast<double>(rows.size());
}

DensityTrace gradient_density(const mpc::MpcPolicy& policy,
                              const env::Battery& battery,
                              const mpc::PolicyParams& theta, double tau,
                              const DensitySettings& settings,
                              const rl::LearnerConfig& learner,
                              std::uint64_t seed) {
  const auto& p = battery.params();
  env::NoiseStream noise = env::NoiseStream::derived(
      seed, kDensityNoiseStream, p.noise_mean, p.noise_stddev());
  env::NoiseStream exploration =
      env::NoiseStream::derived(seed, kDensityExplorationStream, 0.0, 1.0);
  double s = settings.initial_state;
  std::optional<ipm::PrimalDualPoint> warm;
  int skipped = 0;
  const rl::Batch batch = rl::collect_batch(
      policy, battery, theta, tau, learner.exploration_stddev, settings.steps,
      s, warm, noise, exploration, &skipped);
  if (skipped > 0) {
    throw mpc::PolicyEvaluationError("gradient density: " +
                                     std::to_string(skipped) +
                                     " policy evaluations failed");
  }
  const rl::CriticParams critic =
      rl::lstd_fit(batch, learner.discount, learner.ridge);
  const Eigen::MatrixX2d g = rl::per_sample_gradients(batch, critic.w);
  const double scale = g.size() > 0 ? g.cwiseAbs().maxCoeff() : 0.0;

  DensityTrace out;
  out.tau = tau;
  out.rows.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    DensityRow r;
    r.k = static_cast<int>(k);
    r.s = batch[k].transition.s;
    r.a = batch[k].transition.a;
    r.g1 = g(static_cast<Eigen::Index>(k), 0);
    r.g2 = g(static_cast<Eigen::Index>(k), 1);
    if (scale > 0.0) {
      r.g1_normalized = r.g1 / scale;
      r.g2_normalized = r.g2 / scale;
    }
    r.magnitude = std::max(std::abs(r.g1_normalized), std::abs(r.g2_normalized));
    out.rows.push_back(r);
  }
  return out;
}

Json version_info() {
  std::ostringstream eigen;
  eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
        << EIGEN_MINOR_VERSION;
  std::ostringstream json;
  json << NLOHMANN_JSON_VERSION_MAJOR << '.' << NLOHMANN_JSON_VERSION_MINOR
       << '.' << NLOHMANN_JSON_VERSION_PATCH;
  Json v{{"ipmpc", IPMPC_VERSION},
         {"eigen", eigen.str()},
         {"nlohmann_json", json.str()},
         {"compiler", __VERSION__}};
#ifdef _OPENMP
  v["openmp"] = _OPENMP;
#endif
  return v;
}

Json manifest_json(const RunManifest& m) {
  Json files = Json::array();
  for (const auto& f : m.files) {
    files.push_back({{"name", f.name}, {"rows", f.rows}, {"bytes", f.bytes}});
  }
  return Json{{"config_hash", m.config_hash},
              {"config", m.config},
              {"files", files},
              {"versions", m.versions},
              {"wall_clock_seconds", m.wall_clock_seconds},
              {"metrics", m.metrics},
              {"errors", m.errors}};
}

RunManifest run_experiment(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.config = to_json(config);
  manifest.config_hash = config_hash(manifest.config);
  manifest.versions = version_info();

  const fs::path dir(config.out);
  fs::create_directories(dir);

  std::optional<dp::DpSolution> dp_solution;
  if (config.kind == Kind::kDpBaseline) {
    try {
      dp_solution = dp::value_iteration(config.env, config.dp.grid,
                                        config.dp.tolerance);
      std::ostringstream os = csv_stream();
      dp::write_csv(*dp_solution, os);
      manifest.files.push_back(write_artifact(dir, "dp_policy.csv", os.str()));
      manifest.metrics["dp"] = {{"sweeps", dp_solution->sweeps},
                                {"residual", dp_solution->residual}};
    } catch (const std::exception& e) {
      manifest.errors.push_back(std::string("dp: ") + e.what());
    }
  }

  const int n = static_cast<int>(config.seeds.size());
  std::vector<SeedResult> results(n);
  if (config.kind != Kind::kDpBaseline || dp_solution) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      const std::uint64_t seed = config.seeds[i];
      try {
        switch (config.kind) {
          case Kind::kDpBaseline:
            results[i] = run_dp_seed(config, *dp_solution, seed, dir);
            break;
          case Kind::kLearnFixedTau:
          case Kind::kLearnHomotopy:
            results[i] = run_learning_seed(config, seed, dir);
            break;
          case Kind::kSmoothingProfile:
            results[i] = run_smoothing_seed(config, seed, dir);
            break;
          case Kind::kGradientDensity:
            results[i] = run_density_seed(config, seed, dir);
            break;
        }
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    const std::string key = std::to_string(config.seeds[i]);
    for (auto& f : results[i].files) manifest.files.push_back(f);
    manifest.metrics[key] = results[i].metrics;
    if (!results[i].error.empty()) {
      manifest.errors.push_back("seed " + key + ": " + results[i].error);
    }
  }

  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::ofstream out(dir / "manifest.json");
  out << manifest_json(manifest).dump(2) << '\n';
  return manifest;
}

std::vector<rl::TraceRow> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceSchemaError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw TraceSchemaError(path.string() + ": empty file, expected header");
  }
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) header.push_back(col);
  }
  constexpr std::size_t kColumns = std::size(kTraceColumns);
  for (std::size_t i = 0; i < kColumns; ++i) {
    if (i >= header.size() || header[i] != kTraceColumns[i]) {
      throw TraceSchemaError(path.string() + ": expected column '" +
                             kTraceColumns[i] + "' at position " +
                             std::to_string(i + 1));
    }
  }
  if (header.size() != kColumns) {
    throw TraceSchemaError(path.string() + ": unexpected column '" +
                           header[kColumns] + "'");
  }

  std::vector<rl::TraceRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw TraceSchemaError(path.string() + ":" + std::to_string(line_no) +
                               ": bad value in column '" +
                               kTraceColumns[std::min(v.size(), kColumns - 1)] +
                               "'");
      }
    }
    if (v.size() != kColumns) {
      throw TraceSchemaError(path.string() + ":" + std::to_string(line_no) +
                             ": expected " + std::to_string(kColumns) +
                             " fields");
    }
    rl::TraceRow r;
    r.step = static_cast<int>(v[0]);
    r.theta1 = v[1];
    r.theta2 = v[2];
    r.tau = v[3];
    r.j = v[4];
    r.j_se = v[5];
    r.grad_norm = v[6];
    r.critic_residual = v[7];
    rows.push_back(r);
  }
  return rows;
}

double j_curve_area(const std::vector<rl::TraceRow>& rows) {
  double area = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    area += 0.5 * (rows[i].j + rows[i - 1].j) * (rows[i].step - rows[i - 1].step);
  }
  return area;
}

Json compare_traces(const std::vector<rl::TraceRow>& a,
                    const std::vector<rl::TraceRow>& b) {
  std::map<int, double> jb;
  for (const auto& r : b) jb[r.step] = r.j;
  Json diff = Json::array();
  double max_abs = 0.0;
  for (const auto& r : a) {
    const auto it = jb.find(r.step);
    if (it == jb.end()) continue;
    const double d = r.j - it->second;
    max_abs = std::max(max_abs, std::abs(d));
    diff.push_back({{"step", r.step}, {"J_difference", d}});
  }
  auto summary = [](const std::vector<rl::TraceRow>& t) {
    return Json{{"steps_to_convergence", rl::steps_to_convergence(t)},
                {"J_area", j_curve_area(t)},
                {"rows", t.size()}};
  };
  return Json{{"a", summary(a)},
              {"b", summary(b)},
              {"max_abs_J_difference", max_abs},
              {"J_difference", diff}};
}

}  // namespace ipmpc::experiment
