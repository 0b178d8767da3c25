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

// The battery MPC written as a parametric NLP.
//
//   min   theta2^2 (x_N - x_ref)^2 + w_f sigma_N
//       + sum_{i<N} gamma^i ( b u+_i - c u-_i
//                             + c_stage theta1^2 (x_i - x_ref)^2
//                             + w sigma_i )
//   s.t.  x_0 = s,  x_{i+1} = x_i + alpha u_i,  u_i = u+_i - u-_i
//         x_i - 1 <= sigma_i,  -x_i <= sigma_i,  sigma_i >= 0
//         -U <= u_i <= U,  u+_i >= 0,  u-_i >= 0
//
// The buy/sell split turns the kinked economic cost into a smooth linear one;
// with b > c it is exact since buying and selling at once never pays.
//
// z = [x_0..x_N, u_0..u_{N-1}, u+_0.., u-_0.., sigma_0..sigma_N].

#pragma once

#include <vector>

#include "ipmpc/ipm/nlp.hpp"

namespace ipmpc::mpc {

struct MpcConfig {
  int horizon = 10;
  double discount = 0.99;
  double state_reference = 0.5;
  double stage_weight = 0.1;
  double slack_weight = 10.0;
  double terminal_slack_weight = 10.0;
  double max_power = 1.0;
  double model_gain = 1.0 / 12.0;
  double buy_price = 5.0;
  double sell_price = 2.5;

  // Throws std::invalid_argument.
  void validate() const;
};

class BatteryMpcNlp final : public ipm::Nlp {
 public:
  explicit BatteryMpcNlp(MpcConfig cfg);

  const MpcConfig& config() const { return cfg_; }

  int x(int i) const { return i; }
  int u(int i) const { return n_ + 1 + i; }
  int u_buy(int i) const { return 2 * n_ + 1 + i; }
  int u_sell(int i) const { return 3 * n_ + 1 + i; }
  int sigma(int i) const { return 4 * n_ + 1 + i; }

  ipm::NlpDims dims() const override { return dims_; }

  double cost(const ipm::Vector& z, const ipm::Vector& theta) const override;
  ipm::Vector cost_gradient(const ipm::Vector& z,
                            const ipm::Vector& theta) const override;
  ipm::SparseMatrix lagrangian_hessian(const ipm::PrimalDualPoint& y,
                                       const ipm::Vector& s,
                                       const ipm::Vector& theta) const override;

  ipm::Vector equalities(const ipm::Vector& z, const ipm::Vector& s,
                         const ipm::Vector& theta) const override;
  ipm::SparseMatrix equality_jacobian(const ipm::Vector& z,
                                      const ipm::Vector& s,
                                      const ipm::Vector& theta) const override;

  ipm::Vector inequalities(const ipm::Vector& z,
                           const ipm::Vector& theta) const override;
  ipm::SparseMatrix inequality_jacobian(
      const ipm::Vector& z, const ipm::Vector& theta) const override;

  ipm::Matrix lagrangian_gradient_theta(
      const ipm::PrimalDualPoint& y, const ipm::Vector& s,
      const ipm::Vector& theta) const override;
  ipm::Matrix equality_theta(const ipm::Vector& z, const ipm::Vector& s,
                             const ipm::Vector& theta) const override;
  ipm::Matrix inequality_theta(const ipm::Vector& z,
                               const ipm::Vector& theta) const override;

  ipm::Matrix lagrangian_gradient_state(
      const ipm::PrimalDualPoint& y, const ipm::Vector& s,
      const ipm::Vector& theta) const override;
  ipm::Matrix equality_state(const ipm::Vector& z, const ipm::Vector& s,
                             const ipm::Vector& theta) const override;

  // Flat state trajectory at s, zero net input, unit-ish interior margins.
  ipm::Vector initial_primal(const ipm::Vector& s,
                             const ipm::Vector& theta) const override;

 private:
  double stage_factor(int i) const { return discount_pow_[i]; }

  MpcConfig cfg_;
  int n_;
  ipm::NlpDims dims_;
  std::vector<double> discount_pow_;
  ipm::SparseMatrix jac_g_;
  ipm::SparseMatrix jac_h_;
};

}  // namespace ipmpc::mpc
