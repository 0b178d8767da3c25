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

#include "ipmpc/dp/value_iteration.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace ipmpc::dp {

Quadrature gauss_hermite(int n, double mean, double stddev) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  // Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    q.nodes[k] = mean + stddev * eig.eigenvalues()[k];
    const double v0 = eig.eigenvectors()(0, k);
    q.weights[k] = v0 * v0;
  }
  return q;
}

std::vector<double> DpGrid::states() const {
  std::vector<double> s(n_states);
  const double h = (s_hi - s_lo) / (n_states - 1);
  for (int i = 0; i < n_states; ++i) s[i] = s_lo + h * i;
  s.back() = s_hi;
  return s;
}

std::vector<double> DpGrid::actions(double max_power) const {
  std::vector<double> a(n_actions);
  // Integer numerator keeps the grid exactly symmetric, with an exact 0.
  const int m = n_actions - 1;
  for (int i = 0; i < n_actions; ++i) {
    a[i] = max_power * static_cast<double>(2 * i - m) / static_cast<double>(m);
  }
  std::stable_sort(a.begin(), a.end(), [](double x, double y) {
    if (std::abs(x) != std::abs(y)) return std::abs(x) < std::abs(y);
    return x < y;
  });
  return a;
}

void DpGrid::validate() const {
  if (!(s_lo < 0.0 && s_hi > 1.0)) {
    throw std::invalid_argument("dp grid must strictly contain [0, 1]");
  }
  if (n_states < 3 || n_actions < 2 || n_quadrature < 1) {
    throw std::invalid_argument("dp grid sizes too small");
  }
  if (!(discount > 0.0 && discount < 1.0)) {
    throw std::invalid_argument(
        "dp discount must be in (0, 1) for value iteration to contract");
  }
  if (max_sweeps < 1) throw std::invalid_argument("dp.max_sweeps must be >= 1");
}

double interpolate(const std::vector<double>& states,
                   const std::vector<double>& values, double s) {
  const auto n = states.size();
  const double lo = states.front();
  const double h = (states.back() - lo) / static_cast<double>(n - 1);
  std::size_t k;
  if (s <= lo) {
    k = 0;
  } else if (s >= states.back()) {
    k = n - 2;
  } else {
    k = std::min(static_cast<std::size_t>((s - lo) / h), n - 2);
  }
  const double t = (s - states[k]) / (states[k + 1] - states[k]);
  return values[k] + t * (values[k + 1] - values[k]);
}

namespace {

struct Backup {
  double value;
  double action;
};

// Bellman backup at one node; ties keep the earlier (higher-priority) action.
Backup backup(const env::Battery& battery, const std::vector<double>& states,
              const std::vector<double>& value,
              const std::vector<double>& actions, const Quadrature& quad,
              double discount, double s) {
  const double alpha = battery.params().alpha;
  Backup best{std::numeric_limits<double>::infinity(), 0.0};
  for (double a : actions) {
    double expected = 0.0;
    for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
      expected += quad.weights[q] *
                  interpolate(states, value, s + alpha * (quad.nodes[q] + a));
    }
    const double qval = battery.rl_stage_cost(s, a) + discount * expected;
    if (!std::isfinite(best.value) ||
        qval < best.value - 1e-12 * std::max(1.0, std::abs(best.value))) {
      best = {qval, a};
    }
  }
  return best;
}

}  // namespace

DpSolution value_iteration(const env::EnvParams& env, const DpGrid& grid,
                           double tol, SweepKernel kernel) {
  grid.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be > 0");
  const env::Battery battery(env);
  const Quadrature quad = gauss_hermite(grid.n_quadrature, env.noise_mean,
                                        env.noise_stddev());
  const std::vector<double> actions = grid.actions(env.max_power);

  DpSolution sol;
  sol.states = grid.states();
  const int n = grid.n_states;
  sol.value.assign(n, 0.0);
  sol.policy.assign(n, 0.0);
  std::vector<double> next(n, 0.0);

  for (int sweep = 1; sweep <= grid.max_sweeps; ++sweep) {
    double diff = 0.0;
    if (kernel == SweepKernel::kParallel) {
#pragma omp parallel for schedule(static) reduction(max : diff)
      for (int i = 0; i < n; ++i) {
        const Backup b = backup(battery, sol.states, sol.value, actions, quad,
                                grid.discount, sol.states[i]);
        next[i] = b.value;
        sol.policy[i] = b.action;
        diff = std::max(diff, std::abs(b.value - sol.value[i]));
      }
    } else {
      for (int i = 0; i < n; ++i) {
        const Backup b = backup(battery, sol.states, sol.value, actions, quad,
                                grid.discount, sol.states[i]);
        next[i] = b.value;
        sol.policy[i] = b.action;
        diff = std::max(diff, std::abs(b.value - sol.value[i]));
      }
    }
    sol.value.swap(next);
    sol.residual = diff;
    sol.sweeps = sweep;
    if (diff <= tol) return sol;
  }
  throw std::runtime_error("value_iteration: no convergence within max_sweeps");
}

ActionLookup optimal_action(const DpSolution& dp, double s) {
  ActionLookup out;
  const double lo = dp.states.front();
  const double hi = dp.states.back();
  if (s < lo || s > hi) {
    out.clamped = true;
    s = std::clamp(s, lo, hi);
  }
  const double h = (hi - lo) / static_cast<double>(dp.states.size() - 1);
  const auto k = static_cast<std::size_t>(std::lround((s - lo) / h));
  out.action = dp.policy[std::min(k, dp.policy.size() - 1)];
  return out;
}

void write_csv(const DpSolution& dp, std::ostream& os) {
  os << "s,V,pi\n" << std::setprecision(17);
  for (std::size_t i = 0; i < dp.states.size(); ++i) {
    os << dp.states[i] << ',' << dp.value[i] << ',' << dp.policy[i] << '\n';
  }
}

}  // namespace ipmpc::dp
