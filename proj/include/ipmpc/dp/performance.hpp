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

// Monte-Carlo estimate of the discounted closed-loop cost
//
//   J = E[ sum_k gamma^k L~(s_k, pi(s_k)) ],  s_0 ~ U[0, 1].

#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ipmpc/env/battery.hpp"

namespace ipmpc::dp {

struct PerformanceEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  int rollouts = 0;
};

struct RolloutSettings {
  double discount = 0.9985;
  int n_rollouts = 64;
  int horizon = 6200;
  std::uint64_t seed = 1;
  bool parallel = true;

  // Throws std::invalid_argument, including when discount^horizon > 1e-4.
  void validate() const;
};

PerformanceEstimate summarize(const std::vector<double>& returns);

// Discounted return of every rollout, in rollout order.
//
// `make_policy()` is called once per rollout and must return a callable
// double(double); rollouts may run concurrently, so each gets its own
// instance (and with it any warm-start state). Rollout r draws from
// NoiseStream::derived(seed, r), which makes the returns independent of
// thread count and lets two policies be compared on common noise.
template <typename PolicyFactory>
std::vector<double> rollout_returns(PolicyFactory&& make_policy,
                                    const env::Battery& battery,
                                    const RolloutSettings& settings) {
  settings.validate();
  const auto& p = battery.params();
  std::vector<double> returns(settings.n_rollouts, 0.0);

  auto rollout = [&](int r) {
    auto policy = make_policy();
    env::NoiseStream stream = env::NoiseStream::derived(
        settings.seed, static_cast<std::uint64_t>(r), p.noise_mean,
        p.noise_stddev());
    double s = stream.uniform(0.0, 1.0);
    double weight = 1.0;
    double total = 0.0;
    for (int k = 0; k < settings.horizon; ++k) {
      const double a = battery.clamp_action(policy(s));
      total += weight * battery.rl_stage_cost(s, a);
      s = battery.step(s, a, stream.next());
      weight *= settings.discount;
    }
    returns[r] = total;
  };

  // Exceptions may not leave an OpenMP region; keep the first and rethrow.
  std::exception_ptr error;
  auto guarded = [&](int r) {
    try {
      rollout(r);
    } catch (...) {
#pragma omp critical(ipmpc_rollout_error)
      if (!error) error = std::current_exception();
    }
  };
  if (settings.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < settings.n_rollouts; ++r) guarded(r);
  } else {
    for (int r = 0; r < settings.n_rollouts; ++r) guarded(r);
  }
  if (error) std::rethrow_exception(error);
  return returns;
}

template <typename PolicyFactory>
PerformanceEstimate policy_performance(PolicyFactory&& make_policy,
                                       const env::Battery& battery,
                                       const RolloutSettings& settings) {
  return summarize(rollout_returns(std::forward<PolicyFactory>(make_policy),
                                   battery, settings));
}

}  // namespace ipmpc::dp
