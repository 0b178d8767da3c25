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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "ipmpc/dp/performance.hpp"
#include "ipmpc/dp/value_iteration.hpp"
#include "ipmpc/env/battery.hpp"
#include "ipmpc/mpc/policy.hpp"

using namespace ipmpc;

namespace {

constexpr double kTol = 1e-6;

const dp::DpSolution& default_solution() {
  static const dp::DpSolution sol =
      dp::value_iteration(env::EnvParams{}, dp::DpGrid{}, kTol);
  return sol;
}

env::EnvParams zero_cost_env() {
  env::EnvParams p;
  p.noise_variance = 0.0;
  p.buy_price = 0.0;
  p.sell_price = 0.0;
  p.penalty = 0.0;
  return p;
}

dp::DpGrid small_grid(int n_states) {
  dp::DpGrid g;
  g.n_states = n_states;
  g.n_actions = 21;
  g.n_quadrature = 7;
  return g;
}

// Maximal run of nodes carrying `value`, returned as [first s, last s].
std::pair<double, double> run_containing(const dp::DpSolution& sol, double s,
                                         double value) {
  const auto& x = sol.states;
  std::size_t i = std::lower_bound(x.begin(), x.end(), s) - x.begin();
  if (i > 0 && s - x[i - 1] < x[i] - s) --i;
  if (sol.policy[i] != value) return {1.0, 0.0};
  std::size_t lo = i;
  std::size_t hi = i;
  while (lo > 0 && sol.policy[lo - 1] == value) --lo;
  while (hi + 1 < x.size() && sol.policy[hi + 1] == value) ++hi;
  return {x[lo], x[hi]};
}

template <typename F>
dp::PerformanceEstimate performance_of(F f, const env::Battery& b,
                                       dp::RolloutSettings rs) {
  return dp::policy_performance([&] { return f; }, b, rs);
}

}  // namespace

TEST_SUITE("quadrature") {
  TEST_CASE("Gauss-Hermite weights sum to one") {
    for (int n : {1, 2, 5, 11, 21}) {
      const auto q = dp::gauss_hermite(n, 0.0, 1.0);
      double sum = 0.0;
      for (double w : q.weights) sum += w;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("Gauss-Hermite reproduces Gaussian moments") {
    const double mu = 0.3;
    const double sd = std::sqrt(0.05);
    const auto q = dp::gauss_hermite(11, mu, sd);
    double m1 = 0.0, m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const double d = q.nodes[i] - mu;
      m1 += q.weights[i] * q.nodes[i];
      m2 += q.weights[i] * d * d;
      m4 += q.weights[i] * d * d * d * d;
    }
    CHECK(m1 == doctest::Approx(mu).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(sd * sd).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0 * std::pow(sd, 4)).epsilon(1e-11));
  }

  TEST_CASE("degenerate distribution collapses onto the mean") {
    const auto q = dp::gauss_hermite(5, 0.1, 0.0);
    for (double x : q.nodes) CHECK(x == doctest::Approx(0.1));
  }
}

TEST_SUITE("dp grid") {
  TEST_CASE("action grid is symmetric with an exact zero first") {
    const auto a = dp::DpGrid{}.actions(1.0);
    REQUIRE(a.size() == 41);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == -0.05);
    CHECK(a[2] == 0.05);
    CHECK(a[39] == -1.0);
    CHECK(a[40] == 1.0);
  }

  TEST_CASE("validation") {
    dp::DpGrid g;
    g.discount = 1.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = dp::DpGrid{};
    g.s_lo = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    CHECK_THROWS_AS(dp::value_iteration(env::EnvParams{}, dp::DpGrid{}, 0.0),
                    std::invalid_argument);
  }
}

TEST_SUITE("value iteration") {
  TEST_CASE("zero-cost MDP has zero value and a zero policy") {
    const auto sol = dp::value_iteration(zero_cost_env(), small_grid(51), kTol);
    for (double v : sol.value) CHECK(v == 0.0);
    for (double a : sol.policy) CHECK(a == 0.0);
  }

  TEST_CASE("serial and parallel sweeps are bitwise identical") {
    const auto g = small_grid(101);
    const auto a = dp::value_iteration(env::EnvParams{}, g, kTol, dp::SweepKernel::kParallel);
    const auto b = dp::value_iteration(env::EnvParams{}, g, kTol, dp::SweepKernel::kSerial);
    CHECK(a.sweeps == b.sweeps);
    CHECK(a.value == b.value);
    CHECK(a.policy == b.policy);
  }

  TEST_CASE("converged residual is within tolerance and actions are admissible") {
    const auto& sol = default_solution();
    CHECK(sol.residual <= kTol);
    for (double a : sol.policy) {
      CHECK(a >= -1.0);
      CHECK(a <= 1.0);
    }
  }

  TEST_CASE("policy has the buy, idle, sell structure") {
    const auto& sol = default_solution();
    const auto buy = run_containing(sol, -0.1, 1.0);
    const auto idle = run_containing(sol, 0.3, 0.0);
    const auto sell = run_containing(sol, 0.8, -1.0);
    CHECK(buy.first == sol.states.front());
    CHECK(idle.first <= 0.15);
    CHECK(idle.second >= 0.45);
    CHECK(sell.first <= 0.65);
    CHECK(sell.second >= 0.95);
    CHECK(std::abs(buy.second - 0.05) <= 0.1);
    CHECK(std::abs(idle.second - 0.5) <= 0.1);
    CHECK(std::abs(sell.first - 0.55) <= 0.1);
  }

  TEST_CASE("full buying at s = 0.01" * doctest::should_fail()) {
    // The buy ramp ends at the lower idle edge, about 0.054, so full power
    // is only optimal below edge - alpha; at 0.01 the action is about 0.55.
    const auto& sol = default_solution();
    MESSAGE("pi(0.01) = " << dp::optimal_action(sol, 0.01).action);
    const auto buy = run_containing(sol, 0.01, 1.0);
    CHECK(buy.first <= 0.01);
    CHECK(buy.second >= 0.01);
  }

  TEST_CASE("policy is nonincreasing in the state") {
    const auto& sol = default_solution();
    for (std::size_t i = 1; i < sol.policy.size(); ++i) {
      CHECK(sol.policy[i] <= sol.policy[i - 1]);
    }
  }

  // Between the extreme and idle plateaus the optimal action steers the
  // state to a fixed level in one step, a = (s_target - s) / alpha. Those
  // ramps are genuine and span up to alpha * U per transition.
  TEST_CASE("intermediate actions are confined to one-step ramps") {
    const auto& sol = default_solution();
    const env::EnvParams p;
    const double h = sol.states[1] - sol.states[0];
    std::vector<std::pair<double, double>> ramps;
    for (std::size_t i = 0; i < sol.states.size(); ++i) {
      const double a = sol.policy[i];
      if (a == 0.0 || std::abs(a) == p.max_power) continue;
      if (!ramps.empty() && sol.policy[i - 1] != 0.0 &&
          std::abs(sol.policy[i - 1]) != p.max_power) {
        ramps.back().second = sol.states[i];
      } else {
        ramps.emplace_back(sol.states[i], sol.states[i]);
      }
    }
    CHECK(ramps.size() <= 2);
    for (const auto& [lo, hi] : ramps) {
      CHECK(hi - lo <= p.alpha * p.max_power + h);
    }
  }

  TEST_CASE("extreme or idle action at 95% of nodes in [0, 1]" *
            doctest::should_fail()) {
    // Fails by construction: the ramps above cover about 13% of [0, 1].
    const auto& sol = default_solution();
    int total = 0;
    int extreme = 0;
    for (std::size_t i = 0; i < sol.states.size(); ++i) {
      if (sol.states[i] < 0.0 || sol.states[i] > 1.0) continue;
      ++total;
      const double a = std::abs(sol.policy[i]);
      if (a == 0.0 || a == 1.0) ++extreme;
    }
    MESSAGE("fraction " << static_cast<double>(extreme) / total);
    CHECK(static_cast<double>(extreme) / total >= 0.95);
  }

  // Self-convergence in the grid spacing. The spatial error is far above the
  // sweep tolerance, so successive halvings shrink the change instead of
  // bringing it under 2 tol.
  TEST_CASE("halving the grid spacing converges") {
    const env::EnvParams env;
    std::vector<dp::DpSolution> sols;
    for (int n : {101, 201, 401}) {
      dp::DpGrid g;
      g.n_states = n;
      sols.push_back(dp::value_iteration(env, g, kTol));
    }
    auto gap = [](const dp::DpSolution& coarse, const dp::DpSolution& fine) {
      double d = 0.0;
      for (std::size_t i = 0; i < coarse.states.size(); ++i) {
        const double s = coarse.states[i];
        if (s < 0.0 || s > 1.0) continue;
        d = std::max(d, std::abs(coarse.value[i] - fine.value[2 * i]));
      }
      return d;
    };
    const double d1 = gap(sols[0], sols[1]);
    const double d2 = gap(sols[1], sols[2]);
    MESSAGE("sup-norm changes " << d1 << " then " << d2);
    CHECK(d2 <= 0.8 * d1);
  }

  TEST_CASE("grid halving changes V by at most 2 tol" * doctest::should_fail()) {
    // Literal bound; fails because the discretization error dominates tol.
    const auto& fine = default_solution();
    dp::DpGrid g;
    g.n_states = 201;
    const auto coarse = dp::value_iteration(env::EnvParams{}, g, kTol);
    double d = 0.0;
    for (std::size_t i = 0; i < coarse.states.size(); ++i) {
      if (coarse.states[i] < 0.0 || coarse.states[i] > 1.0) continue;
      d = std::max(d, std::abs(coarse.value[i] - fine.value[2 * i]));
    }
    MESSAGE("sup-norm change " << d);
    CHECK(d <= 2.0 * kTol);
  }
}

TEST_SUITE("optimal action lookup") {
  TEST_CASE("examples") {
    const auto& sol = default_solution();
    CHECK(dp::optimal_action(sol, -0.1).action == 1.0);
    CHECK(dp::optimal_action(sol, 0.01).action > 0.0);
    CHECK(dp::optimal_action(sol, 0.3).action == 0.0);
    CHECK(dp::optimal_action(sol, 0.8).action == -1.0);
    CHECK_FALSE(dp::optimal_action(sol, 0.8).clamped);
  }

  TEST_CASE("out-of-range state is clamped and flagged") {
    const auto& sol = default_solution();
    const auto lo = dp::optimal_action(sol, -2.0);
    const auto hi = dp::optimal_action(sol, 3.0);
    CHECK(lo.clamped);
    CHECK(hi.clamped);
    CHECK(lo.action == sol.policy.front());
    CHECK(hi.action == sol.policy.back());
  }

  TEST_CASE("interpolation extrapolates linearly") {
    const std::vector<double> s{0.0, 1.0, 2.0};
    const std::vector<double> v{0.0, 1.0, 4.0};
    CHECK(dp::interpolate(s, v, 0.5) == doctest::Approx(0.5));
    CHECK(dp::interpolate(s, v, 3.0) == doctest::Approx(7.0));
    CHECK(dp::interpolate(s, v, -1.0) == doctest::Approx(-1.0));
  }

  TEST_CASE("CSV export") {
    const auto sol = dp::value_iteration(env::EnvParams{}, small_grid(11), 1e-3);
    std::ostringstream os;
    dp::write_csv(sol, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "s,V,pi");
    int rows = 0;
    while (std::getline(is, line)) {
      CHECK(std::count(line.begin(), line.end(), ',') == 2);
      ++rows;
    }
    CHECK(rows == 11);
  }
}

TEST_SUITE("policy performance") {
  TEST_CASE("zero-cost MDP has zero cost with zero spread") {
    const env::Battery b(zero_cost_env());
    const auto est = performance_of([](double) { return 0.3; }, b, {});
    CHECK(est.mean == 0.0);
    CHECK(est.standard_error == 0.0);
    CHECK(est.rollouts == 64);
  }

  TEST_CASE("DP policy beats doing nothing by three standard errors") {
    const auto& sol = default_solution();
    const env::Battery b(env::EnvParams{});
    const auto star = performance_of(
        [&](double s) { return dp::optimal_action(sol, s).action; }, b, {});
    const auto zero = performance_of([](double) { return 0.0; }, b, {});
    MESSAGE("J* " << star.mean << " +- " << star.standard_error << ", J0 "
                  << zero.mean << " +- " << zero.standard_error);
    CHECK(star.mean <= zero.mean - 3.0 * zero.standard_error);
  }

  TEST_CASE("DP policy is not beaten by constant or MPC policies") {
    const auto& sol = default_solution();
    const env::Battery b(env::EnvParams{});
    const auto star = performance_of(
        [&](double s) { return dp::optimal_action(sol, s).action; }, b, {});
    for (double c : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      const auto est = performance_of([c](double) { return c; }, b, {});
      CHECK(star.mean <= est.mean + 3.0 * est.standard_error);
    }
    const mpc::MpcPolicy policy{mpc::MpcConfig{}};
    for (auto th : {mpc::PolicyParams{2.0, 2.0}, mpc::PolicyParams{7.0, 2.0},
                    mpc::PolicyParams{5.0, 5.0}}) {
      const mpc::PolicyTable table(policy, th, 1e-2, -0.3, 1.3, 1e-3);
      const auto est = performance_of([&](double s) { return table(s); }, b, {});
      CHECK(star.mean <= est.mean + 3.0 * est.standard_error);
    }
  }

  TEST_CASE("doubling the rollouts shrinks the standard error by sqrt 2") {
    const env::Battery b(env::EnvParams{});
    dp::RolloutSettings rs;
    rs.n_rollouts = 400;
    const auto a = performance_of([](double) { return 0.0; }, b, rs);
    rs.n_rollouts = 800;
    const auto c = performance_of([](double) { return 0.0; }, b, rs);
    const double ratio = c.standard_error / a.standard_error;
    MESSAGE("ratio " << ratio);
    CHECK(ratio >= 0.8 / std::sqrt(2.0));
    CHECK(ratio <= 1.2 / std::sqrt(2.0));
  }

  TEST_CASE("serial and parallel rollouts agree exactly") {
    const env::Battery b(env::EnvParams{});
    dp::RolloutSettings rs;
    rs.n_rollouts = 16;
    rs.parallel = true;
    const auto a = performance_of([](double s) { return s < 0.5 ? 0.5 : -0.5; }, b, rs);
    rs.parallel = false;
    const auto c = performance_of([](double s) { return s < 0.5 ? 0.5 : -0.5; }, b, rs);
    CHECK(a.mean == c.mean);
    CHECK(a.standard_error == c.standard_error);
  }

  TEST_CASE("truncation bound is enforced") {
    dp::RolloutSettings rs;
    rs.horizon = 100;
    CHECK_THROWS_AS(rs.validate(), std::invalid_argument);
  }

  TEST_CASE("exceptions from the policy propagate out of the parallel loop") {
    const env::Battery b(env::EnvParams{});
    auto bad = [](double) -> double { throw std::runtime_error("boom"); };
    CHECK_THROWS_AS(performance_of(bad, b, {}), std::runtime_error);
  }
}
