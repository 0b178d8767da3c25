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

// Small NLPs with closed-form barrier solutions.
//
//   P1:  min z^2        s.t. 1 - z <= 0         z_tau = (1 + sqrt(1 + 2 tau)) / 2
//   P2:  min (z - t)^2  s.t. z - 1 <= 0         2 (z - t) + tau / (1 - z) = 0
//   P3:  min 0.5 |z|^2  s.t. z0 + z1 - s = 0    (no inequalities)

#pragma once

#include <cmath>

#include "ipmpc/ipm/nlp.hpp"

namespace ipmpc::testing {

using ipm::Matrix;
using ipm::NlpDims;
using ipm::PrimalDualPoint;
using ipm::SparseMatrix;
using ipm::Vector;

inline SparseMatrix sparse(const Matrix& m) { return m.sparseView(); }

class P1 final : public ipm::Nlp {
 public:
  NlpDims dims() const override { return {1, 0, 1, 1, 1}; }
  double cost(const Vector& z, const Vector&) const override {
    return z[0] * z[0];
  }
  Vector cost_gradient(const Vector& z, const Vector&) const override {
    return Vector::Constant(1, 2.0 * z[0]);
  }
  SparseMatrix lagrangian_hessian(const PrimalDualPoint&, const Vector&,
                                  const Vector&) const override {
    return sparse(Matrix::Constant(1, 1, 2.0));
  }
  Vector equalities(const Vector&, const Vector&, const Vector&) const override {
    return Vector(0);
  }
  SparseMatrix equality_jacobian(const Vector&, const Vector&,
                                 const Vector&) const override {
    return SparseMatrix(0, 1);
  }
  Vector inequalities(const Vector& z, const Vector&) const override {
    return Vector::Constant(1, 1.0 - z[0]);
  }
  SparseMatrix inequality_jacobian(const Vector&, const Vector&) const override {
    return sparse(Matrix::Constant(1, 1, -1.0));
  }
  Matrix lagrangian_gradient_theta(const PrimalDualPoint&, const Vector&,
                                   const Vector&) const override {
    return Matrix::Zero(1, 1);
  }
  Matrix equality_theta(const Vector&, const Vector&,
                        const Vector&) const override {
    return Matrix::Zero(0, 1);
  }
  Matrix inequality_theta(const Vector&, const Vector&) const override {
    return Matrix::Zero(1, 1);
  }
  Matrix lagrangian_gradient_state(const PrimalDualPoint&, const Vector&,
                                   const Vector&) const override {
    return Matrix::Zero(1, 1);
  }
  Matrix equality_state(const Vector&, const Vector&,
                        const Vector&) const override {
    return Matrix::Zero(0, 1);
  }
  Vector initial_primal(const Vector&, const Vector&) const override {
    return Vector::Constant(1, 2.0);
  }

  static double z_tau(double tau) { return 0.5 * (1.0 + std::sqrt(1.0 + 2.0 * tau)); }
};

class P2 final : public ipm::Nlp {
 public:
  NlpDims dims() const override { return {1, 0, 1, 1, 1}; }
  double cost(const Vector& z, const Vector& t) const override {
    return (z[0] - t[0]) * (z[0] - t[0]);
  }
  Vector cost_gradient(const Vector& z, const Vector& t) const override {
    return Vector::Constant(1, 2.0 * (z[0] - t[0]));
  }
  SparseMatrix lagrangian_hessian(const PrimalDualPoint&, const Vector&,
                                  const Vector&) const override {
    return sparse(Matrix::Constant(1, 1, 2.0));
  }
  Vector equalities(const Vector&, const Vector&, const Vector&) const override {
    return Vector(0);
  }
  SparseMatrix equality_jacobian(const Vector&, const Vector&,
                                 const Vector&) const override {
    return SparseMatrix(0, 1);
  }
  Vector inequalities(const Vector& z, const Vector&) const override {
    return Vector::Constant(1, z[0] - 1.0);
  }
  SparseMatrix inequality_jacobian(const Vector&, const Vector&) const override {
    return sparse(Matrix::Constant(1, 1, 1.0));
  }
  Matrix lagrangian_gradient_theta(const PrimalDualPoint&, const Vector&,
                                   const Vector&) const override {
    return Matrix::Constant(1, 1, -2.0);
  }
  Matrix equality_theta(const Vector&, const Vector&,
                        const Vector&) const override {
    return Matrix::Zero(0, 1);
  }
  Matrix inequality_theta(const Vector&, const Vector&) const override {
    return Matrix::Zero(1, 1);
  }
  Matrix lagrangian_gradient_state(const PrimalDualPoint&, const Vector&,
                                   const Vector&) const override {
    return Matrix::Zero(1, 1);
  }
  Matrix equality_state(const Vector&, const Vector&,
                        const Vector&) const override {
    return Matrix::Zero(0, 1);
  }
  Vector initial_primal(const Vector&, const Vector&) const override {
    return Vector::Constant(1, 0.0);
  }

  // Root of 2 (z - t) (1 - z) + tau = 0 with z < 1, by bisection.
  static double z_tau(double t, double tau) {
    double lo = std::min(t, 1.0) - 10.0;
    double hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double f = 2.0 * (mid - t) + tau / (1.0 - mid);
      (f > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }
  // Implicit derivative of the stationarity condition.
  static double dz_dt(double t, double tau) {
    const double z = z_tau(t, tau);
    return 2.0 / (2.0 + tau / ((1.0 - z) * (1.0 - z)));
  }
};

class P3 final : public ipm::Nlp {
 public:
  NlpDims dims() const override { return {2, 1, 0, 1, 1}; }
  double cost(const Vector& z, const Vector&) const override {
    return 0.5 * z.squaredNorm();
  }
  Vector cost_gradient(const Vector& z, const Vector&) const override {
    return z;
  }
  SparseMatrix lagrangian_hessian(const PrimalDualPoint&, const Vector&,
                                  const Vector&) const override {
    return sparse(Matrix::Identity(2, 2));
  }
  Vector equalities(const Vector& z, const Vector& s,
                    const Vector&) const override {
    return Vector::Constant(1, z[0] + z[1] - s[0]);
  }
  SparseMatrix equality_jacobian(const Vector&, const Vector&,
                                 const Vector&) const override {
    return sparse(Matrix::Ones(1, 2));
  }
  Vector inequalities(const Vector&, const Vector&) const override {
    return Vector(0);
  }
  SparseMatrix inequality_jacobian(const Vector&, const Vector&) const override {
    return SparseMatrix(0, 2);
  }
  Matrix lagrangian_gradient_theta(const PrimalDualPoint&, const Vector&,
                                   const Vector&) const override {
    return Matrix::Zero(2, 1);
  }
  Matrix equality_theta(const Vector&, const Vector&,
                        const Vector&) const override {
    return Matrix::Zero(1, 1);
  }
  Matrix inequality_theta(const Vector&, const Vector&) const override {
    return Matrix::Zero(0, 1);
  }
  Matrix lagrangian_gradient_state(const PrimalDualPoint&, const Vector&,
                                   const Vector&) const override {
    return Matrix::Zero(2, 1);
  }
  Matrix equality_state(const Vector&, const Vector&,
                        const Vector&) const override {
    return Matrix::Constant(1, 1, -1.0);
  }
  Vector initial_primal(const Vector&, const Vector&) const override {
    return Vector::Zero(2);
  }
};

inline Vector scalar(double v) { return Vector::Constant(1, v); }

inline PrimalDualPoint point(std::initializer_list<double> z,
                             std::initializer_list<double> lambda,
                             std::initializer_list<double> mu) {
  PrimalDualPoint y;
  y.z = Eigen::Map<const Vector>(z.begin(), static_cast<Eigen::Index>(z.size()));
  y.lambda = Eigen::Map<const Vector>(lambda.begin(),
                                      static_cast<Eigen::Index>(lambda.size()));
  y.mu = Eigen::Map<const Vector>(mu.begin(), static_cast<Eigen::Index>(mu.size()));
  return y;
}

}  // namespace ipmpc::testing
