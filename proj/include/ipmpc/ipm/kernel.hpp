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

// Primal-dual interior-point kernel at a fixed barrier parameter.
//
// The kernel works on the relaxed KKT residual
//
//   r(y, s, theta) = [ grad_z Psi + Jg' lambda + Jh' mu ]
//                    [ G(z, s)                           ]
//                    [ diag(mu) H(z) + tau 1             ]
//
// and never drives tau to zero: the caller's tau is part of the problem
// being solved. Sensitivities follow from the implicit function theorem
// applied to r(y_tau, s, theta) = 0.

#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ipmpc/ipm/nlp.hpp"

namespace ipmpc::ipm {

class IpmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed vectors of the wrong size, or an evaluator returned them.
class DimensionError : public IpmError {
 public:
  using IpmError::IpmError;
};

// An evaluator produced NaN or Inf.
class EvaluationError : public IpmError {
 public:
  EvaluationError(std::string block, const std::string& what)
      : IpmError(what), block_(std::move(block)) {}
  const std::string& block() const { return block_; }

 private:
  std::string block_;
};

// The Newton system stayed singular at the largest regularization.
class SolverFailure : public IpmError {
 public:
  using IpmError::IpmError;
};

class SensitivityUnavailable : public IpmError {
 public:
  SensitivityUnavailable(double rcond, const std::string& what)
      : IpmError(what), rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

struct SolveOptions {
  double tau = 1e-2;                   // barrier parameter, > 0
  double tolerance = 1e-8;             // on ||r||_inf
  int max_iterations = 100;
  double fraction_to_boundary = 0.995;
  double regularization_min = 1e-9;    // first nonzero delta tried
  double regularization_max = 1e-3;
  int max_backtracks = 30;

  // Called with every accepted iterate, including the starting point.
  std::function<void(const PrimalDualPoint&)> on_iterate;

  // Throws std::invalid_argument.
  void validate() const;
};

struct SolveReport {
  bool converged = false;
  double residual_norm = 0.0;  // ||r||_inf at the returned point
  int iterations = 0;
  bool warm_start_used = false;
};

struct SolveResult {
  PrimalDualPoint point;
  SolveReport report;
};

// Nonzero pattern of the KKT Jacobian (row, col) in y ordering.
struct KktSparsity {
  int n_y = 0;
  std::vector<std::pair<int, int>> nonzeros;
};

Vector kkt_residual(const Nlp& nlp, const PrimalDualPoint& y, const Vector& s,
                    const Vector& theta, double tau);

// dr/dy, dense. tau does not enter the Jacobian but is accepted for symmetry
// with kkt_residual.
Matrix kkt_jacobian(const Nlp& nlp, const PrimalDualPoint& y, const Vector& s,
                    const Vector& theta, double tau);

// dr/dtheta and dr/ds, dense (n_y x n_theta and n_y x n_s).
Matrix kkt_theta_jacobian(const Nlp& nlp, const PrimalDualPoint& y,
                          const Vector& s, const Vector& theta);
Matrix kkt_state_jacobian(const Nlp& nlp, const PrimalDualPoint& y,
                          const Vector& s, const Vector& theta);

KktSparsity kkt_sparsity(const Nlp& nlp, const PrimalDualPoint& y,
                         const Vector& s, const Vector& theta);

// Cold start: z from the problem's initial guess, lambda = 0,
// mu = tau / (-H(z)).
PrimalDualPoint cold_start(const Nlp& nlp, const Vector& s, const Vector& theta,
                           double tau);

// Newton iteration on r(., s, theta) = 0 at opts.tau.
//
// Iterates stay strictly interior (mu > 0, H < 0) through a
// fraction-to-boundary cap followed by halving on ||r||_2. Hitting the
// iteration limit is reported through SolveReport, not thrown.
SolveResult solve(const Nlp& nlp, const Vector& s, const Vector& theta,
                  const SolveOptions& opts,
                  const std::optional<PrimalDualPoint>& warm = std::nullopt);

// dy/dtheta = -(dr/dy)^{-1} dr/dtheta at y_tau, n_y x n_theta.
Matrix sensitivity(const Nlp& nlp, const PrimalDualPoint& y_tau,
                   const Vector& s, const Vector& theta, double tau,
                   const SolveOptions& opts = {});

// dy/ds at y_tau, n_y x n_s.
Matrix state_sensitivity(const Nlp& nlp, const PrimalDualPoint& y_tau,
                         const Vector& s, const Vector& theta, double tau,
                         const SolveOptions& opts = {});

}  // namespace ipmpc::ipm
