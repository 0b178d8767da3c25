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

// Deterministic policy gradient with a compatible LSTD critic
//
//   Q_w(s, a) = (a - pi(s)) grad_theta pi(s)' w + Phi(s)' v
//
// and a barrier parameter that shrinks linearly during learning.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ipmpc/dp/performance.hpp"
#include "ipmpc/env/battery.hpp"
#include "ipmpc/mpc/policy.hpp"

namespace ipmpc::rl {

using Features = Eigen::Vector3d;

// [(s - 0.5)^2, s, 1].
Features features(double s);

// grad_theta pi(s) * (a - pi(s)).
Eigen::Vector2d compatible_features(double a, double policy_action,
                                    const Eigen::Vector2d& policy_gradient);

struct CriticParams {
  Eigen::Vector2d w = Eigen::Vector2d::Zero();  // advantage weights
  Eigen::Vector3d v = Eigen::Vector3d::Zero();  // value weights
};

// A closed-loop transition together with the policy output at its state.
struct Sample {
  env::Transition transition;
  double policy_action = 0.0;
  Eigen::Vector2d policy_gradient = Eigen::Vector2d::Zero();
};

using Batch = std::vector<Sample>;

class CriticFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stacked critic features phi = [psi; Phi(s)] and successor features
// phi' = [0; Phi(s')] (the on-policy next action has psi = 0).
Eigen::Matrix<double, 5, 1> critic_features(const Sample& sample);
Eigen::Matrix<double, 5, 1> successor_features(const Sample& sample);

struct LstdSystem {
  Eigen::Matrix<double, 5, 5> a;
  Eigen::Matrix<double, 5, 1> b;
};

// A = sum phi (phi - gamma phi')' + ridge I,  b = sum phi L~.
LstdSystem lstd_system(const Batch& batch, double discount, double ridge);

// Solves the LSTD system. Throws CriticFitError when the batch is shorter
// than the feature dimension or the system is singular.
CriticParams lstd_fit(const Batch& batch, double discount, double ridge);

// Root mean square TD error of the fitted critic over the batch.
double td_rms(const Batch& batch, const CriticParams& critic, double discount);

// (1/M) sum grad pi grad pi' w.
Eigen::Vector2d policy_gradient_estimate(const Batch& batch,
                                         const Eigen::Vector2d& w);

// Per-sample terms grad pi (grad pi' w), one row per sample.
Eigen::MatrixX2d per_sample_gradients(const Batch& batch,
                                      const Eigen::Vector2d& w);

struct TauSchedule {
  double initial = 1e-2;
  double step = 5e-5;
  double floor = 1e-4;

  // Throws std::invalid_argument.
  void validate() const;
};

// max(tau - step, floor).
double tau_step(double tau, const TauSchedule& schedule);
// Barrier at step k, max(initial - k step, floor), computed without
// accumulating rounding so the floor is reached exactly on schedule.
double tau_at(int k, const TauSchedule& schedule);

struct LearnerState {
  mpc::PolicyParams theta;
  CriticParams critic;
  double tau = 1e-2;
  int step = 0;
  double learning_rate = 5e-3;
  double gradient_clip = 10.0;
  double exploration_stddev = 0.1;
  std::uint64_t seed = 1;
};

// theta <- theta - lr * g, with g rescaled to norm gradient_clip if longer.
LearnerState actor_step(const LearnerState& state,
                        const Eigen::Vector2d& gradient);

struct LearnerConfig {
  mpc::PolicyParams initial_theta{5.0, 5.0};
  double initial_state = 0.5;
  double discount = 0.9985;
  double learning_rate = 0.05;
  double gradient_clip = 10.0;
  double exploration_stddev = 0.1;
  double ridge = 1e-8;
  int batch_size = 200;
  int steps = 300;
  int max_failures = 50;  // skipped samples before aborting
  TauSchedule tau;

  // Closed-loop performance logging.
  int eval_every = 10;
  int eval_rollouts = 64;
  int eval_horizon = 6200;
  // Grid spacing of the tabulated policy used for J; 0 means solve the MPC
  // at every rollout step.
  double eval_table_spacing = 1e-3;
  double eval_table_lo = -0.3;
  double eval_table_hi = 1.3;

  // Throws std::invalid_argument.
  void validate() const;
};

struct TraceRow {
  int step = 0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double tau = 0.0;
  double j = 0.0;     // latest performance estimate (carried between evals)
  double j_se = 0.0;
  double grad_norm = 0.0;
  double critic_residual = 0.0;  // td_rms of the step's critic
  bool j_fresh = false;          // J evaluated at this step
};

struct LearningTrace {
  std::vector<TraceRow> rows;
  int skipped_samples = 0;
  int critic_failures = 0;
  std::vector<std::string> diagnostics;
};

class LearningAborted : public std::runtime_error {
 public:
  LearningAborted(const std::string& what, LearningTrace partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const LearningTrace& partial() const { return partial_; }

 private:
  LearningTrace partial_;
};

// Collects `count` exploratory transitions starting at `s`, advancing `s`
// and the warm-start chain. Failed policy evaluations act with the bare
// exploration offset and are not recorded; the count is returned through
// `skipped`.
Batch collect_batch(const mpc::MpcPolicy& policy, const env::Battery& battery,
                    const mpc::PolicyParams& theta, double tau,
                    double exploration_stddev, int count, double& s,
                    std::optional<ipm::PrimalDualPoint>& warm,
                    env::NoiseStream& noise, env::NoiseStream& exploration,
                    int* skipped);

// Rollout settings of the performance estimate for run `seed`. Runs with the
// same seed share the noise, so their J values are paired.
dp::RolloutSettings evaluation_settings(const LearnerConfig& config,
                                        std::uint64_t seed);

// J of the exploration-free policy at (theta, tau).
dp::PerformanceEstimate evaluate_performance(const mpc::MpcPolicy& policy,
                                             const env::Battery& battery,
                                             const mpc::PolicyParams& theta,
                                             double tau,
                                             const LearnerConfig& config,
                                             std::uint64_t seed);

using StepCallback = std::function<void(const TraceRow&)>;

// The full learning loop. Row k holds the theta and tau used during step k;
// a last row (step = steps) carries the final theta with a fresh J.
LearningTrace run_learning(const LearnerConfig& config,
                           const mpc::MpcPolicy& policy,
                           const env::Battery& battery, std::uint64_t seed,
                           const StepCallback& on_step = {});

// CSV with header step,theta1,theta2,tau,J,J_se,grad_norm,critic_residual.
void write_trace_csv(const LearningTrace& trace, std::ostream& os);

// First step k such that ||theta_{j+1} - theta_j|| < tol for all
// j in [k, k + window). Returns -1 if none.
int steps_to_convergence(const std::vector<TraceRow>& rows, double tol = 1e-3,
                         int window = 20);

}  // namespace ipmpc::rl
