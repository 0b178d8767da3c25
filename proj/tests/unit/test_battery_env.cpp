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

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "ipmpc/env/battery.hpp"

using ipmpc::env::Battery;
using ipmpc::env::EnvParams;
using ipmpc::env::NoiseStream;

TEST_SUITE("battery") {
  TEST_CASE("step examples") {
    const Battery b(EnvParams{});
    CHECK(b.step(0.5, 0.2, 0.1) == doctest::Approx(0.525).epsilon(1e-14));
    CHECK(b.step(0.5, 0.0, 0.0) == 0.5);
    CHECK(b.step(0.0, 1.0, 0.0) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  }

  TEST_CASE("step does not clip the state") {
    const Battery b(EnvParams{});
    CHECK(b.step(0.99, 1.0, 1.0) > 1.0);
    CHECK(b.step(0.01, -1.0, -1.0) < 0.0);
  }

  TEST_CASE("step rejects bad input") {
    const Battery b(EnvParams{});
    CHECK_THROWS_AS(b.step(0.5, 1.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(b.step(std::nan(""), 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(b.step(0.5, 0.0, std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
  }

  TEST_CASE("stage cost examples") {
    const Battery b(EnvParams{});
    CHECK(b.stage_cost(0.3, 0.4) == doctest::Approx(2.0));
    CHECK(b.stage_cost(0.3, -0.4) == doctest::Approx(-1.0));
    CHECK(b.stage_cost(0.3, 0.0) == 0.0);
  }

  TEST_CASE("penalized cost examples") {
    const Battery b(EnvParams{});
    CHECK(b.rl_stage_cost(1.2, 0.0) == doctest::Approx(200.0));
    CHECK(b.rl_stage_cost(-0.05, 0.0) == doctest::Approx(50.0));
    CHECK(b.rl_stage_cost(0.5, 0.0) == 0.0);
  }

  TEST_CASE("parameter validation") {
    EnvParams p;
    p.buy_price = 1.0;
    p.sell_price = 2.0;
    CHECK_THROWS_AS(Battery{p}, std::invalid_argument);
    p = EnvParams{};
    p.alpha = 0.0;
    CHECK_THROWS_AS(Battery{p}, std::invalid_argument);
    p = EnvParams{};
    p.noise_variance = -1.0;
    CHECK_THROWS_AS(Battery{p}, std::invalid_argument);
    p = EnvParams{};
    p.max_power = 0.0;
    CHECK_THROWS_AS(Battery{p}, std::invalid_argument);
  }

  TEST_CASE("noise scale reading") {
    EnvParams p;
    CHECK(p.noise_stddev() == doctest::Approx(std::sqrt(0.05)));
    p.noise_scale_is_variance = false;
    CHECK(p.noise_stddev() == doctest::Approx(0.05));
  }
}

TEST_SUITE("battery properties") {
  TEST_CASE("stage cost is bounded below by the sell line and monotone") {
    const Battery b(EnvParams{});
    const double phi_s = b.params().sell_price;
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = -100; i <= 100; ++i) {
      const double a = i / 100.0;
      const double c = b.stage_cost(0.5, a);
      CHECK(c >= phi_s * a - 1e-15);
      CHECK(c >= prev);
      prev = c;
    }
  }

  TEST_CASE("penalty vanishes inside the window") {
    const Battery b(EnvParams{});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> us(0.0, 1.0);
    std::uniform_real_distribution<double> ua(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
      const double s = us(rng);
      const double a = ua(rng);
      CHECK(b.rl_stage_cost(s, a) == b.stage_cost(s, a));
    }
    CHECK(b.rl_stage_cost(1.0, 0.3) == b.stage_cost(1.0, 0.3));
    CHECK(b.rl_stage_cost(0.0, 0.3) == b.stage_cost(0.0, 0.3));
  }

  TEST_CASE("step is affine in the action") {
    const Battery b(EnvParams{});
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
      const double s = 0.5 + u(rng);
      const double a = u(rng);
      const double d = u(rng);
      CHECK(b.step(s, a, d) - b.step(s, 0.0, d) ==
            doctest::Approx(b.params().alpha * a).epsilon(1e-12));
    }
  }
}

TEST_SUITE("noise") {
  TEST_CASE("degenerate distribution draws the mean") {
    NoiseStream stream(3, 0.0, 0.0);
    for (int i = 0; i < 10; ++i) CHECK(stream.next() == 0.0);
    CHECK(stream.counter() == 10);
  }

  TEST_CASE("moments over a million draws") {
    const Battery b(EnvParams{});
    NoiseStream stream = b.noise_stream(42);
    const int n = 1'000'000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = stream.next();
      sum += x;
      sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01 * std::sqrt(0.05));
    CHECK(var >= 0.0495);
    CHECK(var <= 0.0505);
  }

  TEST_CASE("same seed reproduces the stream") {
    NoiseStream a(123, 0.0, 1.0);
    NoiseStream b(123, 0.0, 1.0);
    for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  }

  TEST_CASE("derived streams are reproducible and distinct") {
    NoiseStream a = NoiseStream::derived(7, 0, 0.0, 1.0);
    NoiseStream b = NoiseStream::derived(7, 0, 0.0, 1.0);
    NoiseStream c = NoiseStream::derived(7, 1, 0.0, 1.0);
    NoiseStream d = NoiseStream::derived(8, 0, 0.0, 1.0);
    const double x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
    CHECK(x != d.next());
  }

  TEST_CASE("uniform draws stay in range") {
    NoiseStream s(1, 0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
      const double u = s.uniform(0.0, 1.0);
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
  }
}
