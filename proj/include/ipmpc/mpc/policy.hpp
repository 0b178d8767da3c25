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

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ipmpc/ipm/kernel.hpp"
#include "ipmpc/mpc/battery_mpc.hpp"

namespace ipmpc::mpc {

// Curvature parameters; squared inside the MPC cost, so any sign is valid.
struct PolicyParams {
  double theta1 = 0.0;  // stage tracking
  double theta2 = 0.0;  // terminal tracking

  ipm::Vector vector() const;
  static PolicyParams from_vector(const Eigen::Ref<const ipm::Vector>& v);
  bool operator==(const PolicyParams&) const = default;
};

struct PolicyEval {
  double action = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();  // d action / d theta
  ipm::PrimalDualPoint solution;                       // warm start for later
  ipm::SolveReport report;
  bool cold_retry = false;
};

class PolicyEvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// pi_theta(s) = u_0 of the MPC solved at barrier tau.
class MpcPolicy {
 public:
  explicit MpcPolicy(MpcConfig cfg, ipm::SolveOptions solver = {});

  const BatteryMpcNlp& nlp() const { return nlp_; }
  const ipm::SolveOptions& solver_options() const { return solver_; }

  // A warm start that fails is retried once from a cold start; a second
  // failure raises PolicyEvaluationError. Without `with_gradient` the
  // sensitivity solve is skipped and gradient stays zero.
  PolicyEval evaluate(double s, const PolicyParams& theta, double tau,
                      const std::optional<ipm::PrimalDualPoint>& warm =
                          std::nullopt,
                      bool with_gradient = true) const;

 private:
  MpcConfig cfg_;
  BatteryMpcNlp nlp_;
  ipm::SolveOptions solver_;
};

struct ProfilePoint {
  double s = 0.0;
  double action = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
  bool ok = false;
  std::string error;  // set when !ok
};

// Evaluates the policy over a sorted state grid, chaining warm starts.
// A failing grid point is recorded and the sweep continues cold.
std::vector<ProfilePoint> smoothness_profile(const MpcPolicy& policy,
                                             const PolicyParams& theta,
                                             double tau,
                                             const std::vector<double>& grid);

// The policy solved on a uniform state grid and linearly interpolated,
// constant beyond the ends. Used where many closed-loop steps are needed
// with one fixed (theta, tau), e.g. Monte-Carlo performance estimates.
class PolicyTable {
 public:
  PolicyTable(const MpcPolicy& policy, const PolicyParams& theta, double tau,
              double s_lo, double s_hi, double spacing);

  double operator()(double s) const;

  const std::vector<double>& actions() const { return actions_; }
  double s_lo() const { return s_lo_; }
  double spacing() const { return spacing_; }

 private:
  double s_lo_;
  double spacing_;
  std::vector<double> actions_;
};

}  // namespace ipmpc::mpc
