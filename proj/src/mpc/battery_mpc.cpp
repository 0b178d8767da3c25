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

#include "ipmpc/mpc/battery_mpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ipmpc::mpc {

using ipm::Matrix;
using ipm::SparseMatrix;
using ipm::Vector;

namespace {
using Triplet = Eigen::Triplet<double>;

// Margin used for the cold-start slacks and input split.
constexpr double kInteriorMargin = 0.1;
}  // namespace

void MpcConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("mpc.horizon must be >= 1");
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw std::invalid_argument("mpc.discount must be in (0, 1]");
  }
  if (!(slack_weight > 0.0) || !(terminal_slack_weight > 0.0)) {
    throw std::invalid_argument("mpc slack weights must be > 0");
  }
  if (!(max_power > 0.0)) {
    throw std::invalid_argument("mpc.max_power must be > 0");
  }
  if (!std::isfinite(model_gain) || !std::isfinite(state_reference) ||
      !std::isfinite(stage_weight)) {
    throw std::invalid_argument("mpc model terms must be finite");
  }
  // The split u = u+ - u- is only bounded when buying costs strictly more
  // than selling earns.
  if (!(sell_price >= 0.0 && buy_price > sell_price)) {
    throw std::invalid_argument(
        "mpc requires buy_price > sell_price >= 0");
  }
}

BatteryMpcNlp::BatteryMpcNlp(MpcConfig cfg) : cfg_(cfg), n_(cfg.horizon) {
  cfg_.validate();
  dims_.n_z = 5 * n_ + 2;
  dims_.n_g = 2 * n_ + 1;
  dims_.n_h = 3 * (n_ + 1) + 4 * n_;
  dims_.n_s = 1;
  dims_.n_theta = 2;

  discount_pow_.resize(n_ + 1);
  for (int i = 0; i <= n_; ++i) discount_pow_[i] = std::pow(cfg_.discount, i);

  std::vector<Triplet> tg;
  tg.emplace_back(0, x(0), 1.0);
  for (int i = 0; i < n_; ++i) {
    tg.emplace_back(1 + i, x(i + 1), 1.0);
    tg.emplace_back(1 + i, x(i), -1.0);
    tg.emplace_back(1 + i, u(i), -cfg_.model_gain);
    tg.emplace_back(n_ + 1 + i, u(i), 1.0);
    tg.emplace_back(n_ + 1 + i, u_buy(i), -1.0);
    tg.emplace_back(n_ + 1 + i, u_sell(i), 1.0);
  }
  jac_g_.resize(dims_.n_g, dims_.n_z);
  jac_g_.setFromTriplets(tg.begin(), tg.end());

  std::vector<Triplet> th;
  for (int i = 0; i <= n_; ++i) {
    th.emplace_back(3 * i, x(i), 1.0);
    th.emplace_back(3 * i, sigma(i), -1.0);
    th.emplace_back(3 * i + 1, x(i), -1.0);
    th.emplace_back(3 * i + 1, sigma(i), -1.0);
    th.emplace_back(3 * i + 2, sigma(i), -1.0);
  }
  const int base = 3 * (n_ + 1);
  for (int i = 0; i < n_; ++i) {
    th.emplace_back(base + 4 * i, u(i), 1.0);
    th.emplace_back(base + 4 * i + 1, u(i), -1.0);
    th.emplace_back(base + 4 * i + 2, u_buy(i), -1.0);
    th.emplace_back(base + 4 * i + 3, u_sell(i), -1.0);
  }
  jac_h_.resize(dims_.n_h, dims_.n_z);
  jac_h_.setFromTriplets(th.begin(), th.end());
}

double BatteryMpcNlp::cost(const Vector& z, const Vector& theta) const {
  const double t1 = theta[0] * theta[0];
  const double t2 = theta[1] * theta[1];
  const double ref = cfg_.state_reference;
  double c = t2 * (z[x(n_)] - ref) * (z[x(n_)] - ref) +
             cfg_.terminal_slack_weight * z[sigma(n_)];
  for (int i = 0; i < n_; ++i) {
    const double dx = z[x(i)] - ref;
    c += stage_factor(i) *
         (cfg_.buy_price * z[u_buy(i)] - cfg_.sell_price * z[u_sell(i)] +
          cfg_.stage_weight * t1 * dx * dx + cfg_.slack_weight * z[sigma(i)]);
  }
  return c;
}

Vector BatteryMpcNlp::cost_gradient(const Vector& z, const Vector& theta) const {
  const double t1 = theta[0] * theta[0];
  const double t2 = theta[1] * theta[1];
  const double ref = cfg_.state_reference;
  Vector g = Vector::Zero(dims_.n_z);
  for (int i = 0; i < n_; ++i) {
    const double f = stage_factor(i);
    g[x(i)] = f * 2.0 * cfg_.stage_weight * t1 * (z[x(i)] - ref);
    g[u_buy(i)] = f * cfg_.buy_price;
    g[u_sell(i)] = -f * cfg_.sell_price;
    g[sigma(i)] = f * cfg_.slack_weight;
  }
  g[x(n_)] = 2.0 * t2 * (z[x(n_)] - ref);
  g[sigma(n_)] = cfg_.terminal_slack_weight;
  return g;
}

SparseMatrix BatteryMpcNlp::lagrangian_hessian(const ipm::PrimalDualPoint& /*y*/,
                                               const Vector& /*s*/,
                                               const Vector& theta) const {
  const double t1 = theta[0] * theta[0];
  const double t2 = theta[1] * theta[1];
  std::vector<Triplet> t;
  t.reserve(n_ + 1);
  for (int i = 0; i < n_; ++i) {
    t.emplace_back(x(i), x(i), stage_factor(i) * 2.0 * cfg_.stage_weight * t1);
  }
  t.emplace_back(x(n_), x(n_), 2.0 * t2);
  SparseMatrix h(dims_.n_z, dims_.n_z);
  h.setFromTriplets(t.begin(), t.end());
  return h;
}

Vector BatteryMpcNlp::equalities(const Vector& z, const Vector& s,
                                 const Vector& /*theta*/) const {
  Vector g(dims_.n_g);
  g[0] = z[x(0)] - s[0];
  for (int i = 0; i < n_; ++i) {
    g[1 + i] = z[x(i + 1)] - z[x(i)] - cfg_.model_gain * z[u(i)];
    g[n_ + 1 + i] = z[u(i)] - z[u_buy(i)] + z[u_sell(i)];
  }
  return g;
}

SparseMatrix BatteryMpcNlp::equality_jacobian(const Vector& /*z*/,
                                              const Vector& /*s*/,
                                              const Vector& /*theta*/) const {
  return jac_g_;
}

Vector BatteryMpcNlp::inequalities(const Vector& z,
                                   const Vector& /*theta*/) const {
  Vector h(dims_.n_h);
  for (int i = 0; i <= n_; ++i) {
    h[3 * i] = z[x(i)] - 1.0 - z[sigma(i)];
    h[3 * i + 1] = -z[x(i)] - z[sigma(i)];
    h[3 * i + 2] = -z[sigma(i)];
  }
  const int base = 3 * (n_ + 1);
  for (int i = 0; i < n_; ++i) {
    h[base + 4 * i] = z[u(i)] - cfg_.max_power;
    h[base + 4 * i + 1] = -z[u(i)] - cfg_.max_power;
    h[base + 4 * i + 2] = -z[u_buy(i)];
    h[base + 4 * i + 3] = -z[u_sell(i)];
  }
  return h;
}

SparseMatrix BatteryMpcNlp::inequality_jacobian(const Vector& /*z*/,
                                                const Vector& /*theta*/) const {
  return jac_h_;
}

Matrix BatteryMpcNlp::lagrangian_gradient_theta(const ipm::PrimalDualPoint& y,
                                                const Vector& /*s*/,
                                                const Vector& theta) const {
  const double ref = cfg_.state_reference;
  Matrix m = Matrix::Zero(dims_.n_z, 2);
  for (int i = 0; i < n_; ++i) {
    m(x(i), 0) = stage_factor(i) * 4.0 * cfg_.stage_weight * theta[0] *
                 (y.z[x(i)] - ref);
  }
  m(x(n_), 1) = 4.0 * theta[1] * (y.z[x(n_)] - ref);
  return m;
}

Matrix BatteryMpcNlp::equality_theta(const Vector& /*z*/, const Vector& /*s*/,
                                     const Vector& /*theta*/) const {
  return Matrix::Zero(dims_.n_g, 2);
}

Matrix BatteryMpcNlp::inequality_theta(const Vector& /*z*/,
                                       const Vector& /*theta*/) const {
  return Matrix::Zero(dims_.n_h, 2);
}

Matrix BatteryMpcNlp::lagrangian_gradient_state(
    const ipm::PrimalDualPoint& /*y*/, const Vector& /*s*/,
    const Vector& /*theta*/) const {
  return Matrix::Zero(dims_.n_z, 1);
}

Matrix BatteryMpcNlp::equality_state(const Vector& /*z*/, const Vector& /*s*/,
                                     const Vector& /*theta*/) const {
  Matrix m = Matrix::Zero(dims_.n_g, 1);
  m(0, 0) = -1.0;
  return m;
}

Vector BatteryMpcNlp::initial_primal(const Vector& s,
                                     const Vector& /*theta*/) const {
  Vector z = Vector::Zero(dims_.n_z);
  const double slack = std::max({s[0] - 1.0, -s[0], 0.0}) + kInteriorMargin;
  for (int i = 0; i <= n_; ++i) {
    z[x(i)] = s[0];
    z[sigma(i)] = slack;
  }
  for (int i = 0; i < n_; ++i) {
    z[u_buy(i)] = kInteriorMargin;
    z[u_sell(i)] = kInteriorMargin;
  }
  return z;
}

}  // namespace ipmpc::mpc
