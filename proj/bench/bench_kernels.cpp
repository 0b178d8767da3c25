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

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "ipmpc/dp/performance.hpp"
#include "ipmpc/dp/value_iteration.hpp"
#include "ipmpc/env/battery.hpp"
#include "ipmpc/mpc/policy.hpp"

namespace {

using namespace ipmpc;

void BM_ValueIteration(benchmark::State& state) {
  const auto kernel = state.range(0) ? dp::SweepKernel::kParallel : dp::SweepKernel::kSerial;
  dp::DpGrid grid;
  grid.n_states = static_cast<int>(state.range(1));
  grid.discount = 0.99;
  for (auto _ : state) {
    auto sol = dp::value_iteration(env::EnvParams{}, grid, 1e-6, kernel);
    benchmark::DoNotOptimize(sol.value.data());
    state.counters["sweeps"] = sol.sweeps;
  }
  state.counters["threads"] = state.range(0) ? omp_get_max_threads() : 1;
}
BENCHMARK(BM_ValueIteration)
    ->ArgsProduct({{0, 1}, {201, 401}})
    ->ArgNames({"parallel", "states"})
    ->Unit(benchmark::kMillisecond);

void BM_Rollouts(benchmark::State& state) {
  const env::Battery battery(env::EnvParams{});
  const mpc::MpcPolicy policy{mpc::MpcConfig{}};
  const mpc::PolicyTable table(policy, {5.0, 5.0}, 1e-2, -0.3, 1.3, 1e-3);
  dp::RolloutSettings rs;
  rs.parallel = state.range(0) != 0;
  rs.n_rollouts = 64;
  for (auto _ : state) {
    auto est = dp::policy_performance([&table] { return std::cref(table); }, battery, rs);
    benchmark::DoNotOptimize(est.mean);
  }
  state.counters["threads"] = rs.parallel ? omp_get_max_threads() : 1;
}
BENCHMARK(BM_Rollouts)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_PolicySolve(benchmark::State& state) {
  const mpc::MpcPolicy policy{mpc::MpcConfig{}};
  const double tau = state.range(0) ? 1e-2 : 1e-4;
  for (auto _ : state) {
    auto ev = policy.evaluate(0.3, {5.0, 5.0}, tau);
    benchmark::DoNotOptimize(ev.action);
  }
}
BENCHMARK(BM_PolicySolve)->Arg(0)->Arg(1)->ArgName("smooth")->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
