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

// Stochastic battery storage: s' = s + alpha (delta + a), with a linear
// buy/sell cost and a penalty on leaving the [0, 1] state-of-charge window.

#pragma once

#include <cstdint>
#include <random>

namespace ipmpc::env {

struct EnvParams {
  double alpha = 1.0 / 12.0;  // SOC per unit power
  double buy_price = 5.0;
  double sell_price = 2.5;
  double max_power = 1.0;     // |a| <= max_power
  double noise_mean = 0.0;
  double noise_variance = 0.05;
  double penalty = 1000.0;
  // When false, noise_variance is read as a standard deviation instead.
  bool noise_scale_is_variance = true;

  double noise_stddev() const;
  // Throws std::invalid_argument.
  void validate() const;
};

// One closed-loop sample.
struct Transition {
  double s = 0.0;
  double a = 0.0;
  double noise = 0.0;
  double cost = 0.0;          // penalized stage cost at (s, a)
  double s_next = 0.0;
  double exploration = 0.0;   // a = clamp(policy(s) + exploration)
};

// Seeded Gaussian draws for the net production term.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, double mean, double stddev);
  // Independent stream for sub-task `index` of `seed` (rollouts, workers).
  static NoiseStream derived(std::uint64_t seed, std::uint64_t index,
                             double mean, double stddev);

  double next();
  // Uniform draw on [lo, hi), same engine.
  double uniform(double lo, double hi);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double mean_;
  double stddev_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

class Battery {
 public:
  explicit Battery(EnvParams params);

  const EnvParams& params() const { return params_; }

  // s + alpha (noise + a). Not clipped to [0, 1].
  double step(double s, double a, double noise) const;

  double stage_cost(double s, double a) const;
  // stage_cost + penalty * (max(s - 1, 0) + max(-s, 0)).
  double rl_stage_cost(double s, double a) const;

  double clamp_action(double a) const;
  NoiseStream noise_stream(std::uint64_t seed) const;

 private:
  EnvParams params_;
};

}  // namespace ipmpc::env
