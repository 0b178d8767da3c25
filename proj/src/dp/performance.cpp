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

#include "ipmpc/dp/performance.hpp"

namespace ipmpc::dp {

void RolloutSettings::validate() const {
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw std::invalid_argument("rollout discount must be in (0, 1]");
  }
  if (n_rollouts < 1 || horizon < 1) {
    throw std::invalid_argument("rollout counts must be >= 1");
  }
  if (discount < 1.0 && std::pow(discount, horizon) > 1e-4) {
    throw std::invalid_argument(
        "rollout horizon too short: discount^horizon must be <= 1e-4");
  }
}

PerformanceEstimate summarize(const std::vector<double>& returns) {
  PerformanceEstimate est;
  est.rollouts = static_cast<int>(returns.size());
  if (returns.empty()) return est;
  double sum = 0.0;
  for (double r : returns) sum += r;
  est.mean = sum / static_cast<double>(returns.size());
  if (returns.size() > 1) {
    double ss = 0.0;
    for (double r : returns) ss += (r - est.mean) * (r - est.mean);
    const double var = ss / static_cast<double>(returns.size() - 1);
    est.standard_error = std::sqrt(var / static_cast<double>(returns.size()));
  }
  return est;
}

}  // namespace ipmpc::dp
