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

#include "ipmpc/env/battery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ipmpc::env {

double EnvParams::noise_stddev() const {
  return noise_scale_is_variance ? std::sqrt(noise_variance) : noise_variance;
}

void EnvParams::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("env.alpha must be > 0");
  if (!(sell_price >= 0.0)) {
    throw std::invalid_argument("env.sell_price must be >= 0");
  }
  if (!(buy_price >= sell_price)) {
    throw std::invalid_argument("env.buy_price must be >= env.sell_price");
  }
  if (!(max_power > 0.0)) {
    throw std::invalid_argument("env.max_power must be > 0");
  }
  if (!(noise_variance >= 0.0)) {
    throw std::invalid_argument("env.noise_variance must be >= 0");
  }
  if (!std::isfinite(noise_mean)) {
    throw std::invalid_argument("env.noise_mean must be finite");
  }
  if (!(penalty >= 0.0)) {
    throw std::invalid_argument("env.penalty must be >= 0");
  }
}

NoiseStream::NoiseStream(std::uint64_t seed, double mean, double stddev)
    : seed_(seed), mean_(mean), stddev_(stddev), engine_(seed) {}

NoiseStream NoiseStream::derived(std::uint64_t seed, std::uint64_t index,
                                 double mean, double stddev) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint64_t mixed = 0;
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  mixed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return NoiseStream(mixed, mean, stddev);
}

double NoiseStream::next() {
  ++counter_;
  if (stddev_ == 0.0) return mean_;
  return mean_ + stddev_ * normal_(engine_);
}

double NoiseStream::uniform(double lo, double hi) {
  ++counter_;
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

Battery::Battery(EnvParams params) : params_(params) { params_.validate(); }

double Battery::step(double s, double a, double noise) const {
  if (!std::isfinite(s) || !std::isfinite(a) || !std::isfinite(noise)) {
    throw std::invalid_argument("Battery::step: non-finite input");
  }
  if (std::abs(a) > params_.max_power * (1.0 + 1e-12)) {
    throw std::invalid_argument("Battery::step: |a| exceeds max_power");
  }
  return s + params_.alpha * (noise + a);
}

double Battery::stage_cost(double /*s*/, double a) const {
  return a >= 0.0 ? params_.buy_price * a : params_.sell_price * a;
}

double Battery::rl_stage_cost(double s, double a) const {
  return stage_cost(s, a) + params_.penalty * std::max(s - 1.0, 0.0) +
         params_.penalty * std::max(-s, 0.0);
}

double Battery::clamp_action(double a) const {
  return std::clamp(a, -params_.max_power, params_.max_power);
}

NoiseStream Battery::noise_stream(std::uint64_t seed) const {
  return NoiseStream(seed, params_.noise_mean, params_.noise_stddev());
}

}  // namespace ipmpc::env
