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

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace ipmpc::ipm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Sizes of a parametric NLP
//
//   min_z  Psi(z; theta)
//   s.t.   G(z, s; theta) = 0
//          H(z; theta)   <= 0
//
// where s is the exogenous state and theta the tunable parameter vector.
struct NlpDims {
  int n_z = 0;      // primal variables
  int n_g = 0;      // equality constraints
  int n_h = 0;      // inequality constraints
  int n_s = 0;      // state vector length
  int n_theta = 0;  // parameter vector length

  int n_y() const { return n_z + n_g + n_h; }
  bool operator==(const NlpDims&) const = default;
};

// Primal-dual point y = {z, lambda, mu}.
struct PrimalDualPoint {
  Vector z;
  Vector lambda;  // equality multipliers
  Vector mu;      // inequality multipliers, >= 0

  // Stacked [z; lambda; mu].
  Vector stacked() const;
  static PrimalDualPoint unstack(const Vector& y, const NlpDims& dims);
};

// Evaluators of a parametric NLP with exact first and second derivatives.
//
// Implementations must return outputs of exactly the sizes given by dims();
// the kernel checks this and raises DimensionError otherwise. Derivative
// blocks with respect to theta and s are needed for sensitivities only.
class Nlp {
 public:
  virtual ~Nlp() = default;

  virtual NlpDims dims() const = 0;

  virtual double cost(const Vector& z, const Vector& theta) const = 0;
  virtual Vector cost_gradient(const Vector& z, const Vector& theta) const = 0;

  // Hessian of the Lagrangian Psi + lambda'G + mu'H with respect to z.
  virtual SparseMatrix lagrangian_hessian(const PrimalDualPoint& y,
                                          const Vector& s,
                                          const Vector& theta) const = 0;

  virtual Vector equalities(const Vector& z, const Vector& s,
                            const Vector& theta) const = 0;
  virtual SparseMatrix equality_jacobian(const Vector& z, const Vector& s,
                                         const Vector& theta) const = 0;

  virtual Vector inequalities(const Vector& z, const Vector& theta) const = 0;
  virtual SparseMatrix inequality_jacobian(const Vector& z,
                                           const Vector& theta) const = 0;

  // d(grad_z L)/d theta, d G/d theta, d H/d theta.
  virtual Matrix lagrangian_gradient_theta(const PrimalDualPoint& y,
                                           const Vector& s,
                                           const Vector& theta) const = 0;
  virtual Matrix equality_theta(const Vector& z, const Vector& s,
                                const Vector& theta) const = 0;
  virtual Matrix inequality_theta(const Vector& z,
                                  const Vector& theta) const = 0;

  // d(grad_z L)/d s and d G/d s. H does not depend on s.
  virtual Matrix lagrangian_gradient_state(const PrimalDualPoint& y,
                                           const Vector& s,
                                           const Vector& theta) const = 0;
  virtual Matrix equality_state(const Vector& z, const Vector& s,
                                const Vector& theta) const = 0;

  // Cold-start primal guess. Must satisfy H(z) < 0 strictly.
  virtual Vector initial_primal(const Vector& s, const Vector& theta) const = 0;
};

}  // namespace ipmpc::ipm
