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

// Ground-truth policy of the battery MDP by value iteration on a state grid.
//
// Two sweep kernels are provided: an OpenMP one parallel over state nodes and
// a plain serial one kept as the reference in tests. Both perform Jacobi
// sweeps, so they agree bit for bit.

#pragma once

#include <ostream>
#include <vector>

#include "ipmpc/env/battery.hpp"

namespace ipmpc::dp {

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

// Gauss-Hermite rule for N(mean, stddev^2) with n nodes (Golub-Welsch).
Quadrature gauss_hermite(int n, double mean, double stddev);

struct DpGrid {
  double s_lo = -0.25;
  double s_hi = 1.25;
  int n_states = 401;
  int n_actions = 41;
  int n_quadrature = 11;
  double discount = 0.9985;
  int max_sweeps = 100000;

  std::vector<double> states() const;
  // Ordered by tie-break priority: a = 0 first, then increasing |a| with the
  // negative action ahead of the positive one.
  std::vector<double> actions(double max_power) const;

  // Throws std::invalid_argument (including discount >= 1).
  void validate() const;
};

struct DpSolution {
  std::vector<double> states;
  std::vector<double> value;
  std::vector<double> policy;
  double residual = 0.0;  // sup-norm of the last update
  int sweeps = 0;
};

enum class SweepKernel { kParallel, kSerial };

DpSolution value_iteration(const env::EnvParams& env, const DpGrid& grid,
                           double tol,
                           SweepKernel kernel = SweepKernel::kParallel);

// Piecewise-linear value with linear extrapolation past the end nodes.
double interpolate(const std::vector<double>& states,
                   const std::vector<double>& values, double s);

struct ActionLookup {
  double action = 0.0;
  bool clamped = false;  // s was outside the grid
};

// Nearest-node lookup of the tabulated policy.
ActionLookup optimal_action(const DpSolution& dp, double s);

// CSV with header "s,V,pi".
void write_csv(const DpSolution& dp, std::ostream& os);

}  // namespace ipmpc::dp
