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

#include "ipmpc/ipm/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

namespace ipmpc::ipm {

Vector PrimalDualPoint::stacked() const {
  Vector y(z.size() + lambda.size() + mu.size());
  y << z, lambda, mu;
  return y;
}

PrimalDualPoint PrimalDualPoint::unstack(const Vector& y, const NlpDims& dims) {
  if (y.size() != dims.n_y()) {
    throw DimensionError("unstack: vector length does not match n_y");
  }
  return {y.head(dims.n_z), y.segment(dims.n_z, dims.n_g), y.tail(dims.n_h)};
}

void SolveOptions::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("SolveOptions: tau must be > 0");
  if (!(tolerance > 0.0)) {
    throw std::invalid_argument("SolveOptions: tolerance must be > 0");
  }
  if (max_iterations < 1) {
    throw std::invalid_argument("SolveOptions: max_iterations must be >= 1");
  }
  if (!(fraction_to_boundary > 0.0 && fraction_to_boundary < 1.0)) {
    throw std::invalid_argument(
        "SolveOptions: fraction_to_boundary must be in (0, 1)");
  }
  if (!(regularization_min > 0.0 && regularization_max >= regularization_min)) {
    throw std::invalid_argument("SolveOptions: bad regularization range");
  }
}

namespace {

// Below this reciprocal condition estimate the factorization is treated as
// singular and the (z, z) block gets regularized.
constexpr double kSingularRcond = 1e-14;

// Armijo constant on the residual norm.
constexpr double kSufficientDecrease = 1e-4;

void check_size(Eigen::Index got, int want, const char* what) {
  if (got != want) {
    std::ostringstream os;
    os << what << ": expected length " << want << ", got " << got;
    throw DimensionError(os.str());
  }
}

void check_shape(Eigen::Index rows, Eigen::Index cols, int want_rows,
                 int want_cols, const char* what) {
  if (rows != want_rows || cols != want_cols) {
    std::ostringstream os;
    os << what << ": expected " << want_rows << "x" << want_cols << ", got "
       << rows << "x" << cols;
    throw DimensionError(os.str());
  }
}

template <typename Derived>
void check_finite(const Eigen::DenseBase<Derived>& m, const char* block) {
  if (!m.allFinite()) {
    throw EvaluationError(block, std::string("non-finite values in ") + block);
  }
}

void check_finite(const SparseMatrix& m, const char* block) {
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      if (!std::isfinite(it.value())) {
        throw EvaluationError(block,
                              std::string("non-finite values in ") + block);
      }
    }
  }
}

void check_inputs(const NlpDims& d, const PrimalDualPoint& y, const Vector& s,
                  const Vector& theta) {
  check_size(y.z.size(), d.n_z, "z");
  check_size(y.lambda.size(), d.n_g, "lambda");
  check_size(y.mu.size(), d.n_h, "mu");
  check_size(s.size(), d.n_s, "s");
  check_size(theta.size(), d.n_theta, "theta");
}

// First-order quantities at a point. The Hessian is filled lazily since
// trial points in the line search only need the residual.
struct Evaluation {
  Vector grad_lagrangian;
  Vector g;
  Vector h;
  SparseMatrix jac_g;
  SparseMatrix jac_h;
  SparseMatrix hessian;
};

Evaluation evaluate_first_order(const Nlp& nlp, const NlpDims& d,
                                const PrimalDualPoint& y, const Vector& s,
                                const Vector& theta) {
  Evaluation ev;
  Vector grad = nlp.cost_gradient(y.z, theta);
  check_size(grad.size(), d.n_z, "cost_gradient");
  check_finite(grad, "cost_gradient");

  ev.g = nlp.equalities(y.z, s, theta);
  check_size(ev.g.size(), d.n_g, "equalities");
  check_finite(ev.g, "equalities");

  ev.h = nlp.inequalities(y.z, theta);
  check_size(ev.h.size(), d.n_h, "inequalities");
  check_finite(ev.h, "inequalities");

  ev.jac_g = nlp.equality_jacobian(y.z, s, theta);
  check_shape(ev.jac_g.rows(), ev.jac_g.cols(), d.n_g, d.n_z,
              "equality_jacobian");
  check_finite(ev.jac_g, "equality_jacobian");

  ev.jac_h = nlp.inequality_jacobian(y.z, theta);
  check_shape(ev.jac_h.rows(), ev.jac_h.cols(), d.n_h, d.n_z,
              "inequality_jacobian");
  check_finite(ev.jac_h, "inequality_jacobian");

  ev.grad_lagrangian = grad;
  if (d.n_g > 0) ev.grad_lagrangian += ev.jac_g.transpose() * y.lambda;
  if (d.n_h > 0) ev.grad_lagrangian += ev.jac_h.transpose() * y.mu;
  return ev;
}

void evaluate_hessian(const Nlp& nlp, const NlpDims& d, const PrimalDualPoint& y,
                      const Vector& s, const Vector& theta, Evaluation& ev) {
  ev.hessian = nlp.lagrangian_hessian(y, s, theta);
  check_shape(ev.hessian.rows(), ev.hessian.cols(), d.n_z, d.n_z,
              "lagrangian_hessian");
  check_finite(ev.hessian, "lagrangian_hessian");
}

Vector residual_from(const Evaluation& ev, const PrimalDualPoint& y,
                     double tau) {
  Vector r(ev.grad_lagrangian.size() + ev.g.size() + ev.h.size());
  r << ev.grad_lagrangian, ev.g,
      (y.mu.array() * ev.h.array() + tau).matrix();
  return r;
}

bool strictly_interior(const Vector& h, const Vector& mu) {
  return (h.array() < 0.0).all() && (mu.array() > 0.0).all();
}

// The Newton matrix with the complementarity block eliminated:
//
//   [ W + delta I + Jh' diag(mu / -h) Jh   Jg' ] [dz     ]
//   [ Jg                                   0   ] [dlambda]
//
// Solving with it and back-substituting dmu is algebraically the same as
// solving with the full dr/dy (plus delta on the (z, z) block).
class CondensedKkt {
 public:
  CondensedKkt(const Evaluation& ev, const PrimalDualPoint& y, double delta)
      : jac_h_(ev.jac_h), h_(ev.h), mu_(y.mu), delta_(delta) {
    const auto n_z = static_cast<int>(y.z.size());
    const auto n_g = static_cast<int>(y.lambda.size());
    Matrix k = Matrix::Zero(n_z + n_g, n_z + n_g);
    k.topLeftCorner(n_z, n_z) = Matrix(ev.hessian);
    if (h_.size() > 0) {
      const Vector weight = (mu_.array() / (-h_.array())).matrix();
      const SparseMatrix weighted = weight.asDiagonal() * jac_h_;
      k.topLeftCorner(n_z, n_z) += Matrix(jac_h_.transpose() * weighted);
    }
    k.topLeftCorner(n_z, n_z).diagonal().array() += delta;
    if (n_g > 0) {
      const Matrix jg(ev.jac_g);
      k.topRightCorner(n_z, n_g) = jg.transpose();
      k.bottomLeftCorner(n_g, n_z) = jg;
    }
    // Symmetric row/column equilibration: barrier terms put diagonal entries
    // many decades apart, which would otherwise dominate rcond.
    scale_ = k.cwiseAbs().rowwise().maxCoeff().cwiseMax(1e-300).cwiseSqrt()
                 .cwiseInverse();
    lu_.compute(scale_.asDiagonal() * k * scale_.asDiagonal());
    rcond_ = lu_.rcond();
    n_z_ = n_z;
    n_g_ = n_g;
  }

  bool usable() const { return std::isfinite(rcond_) && rcond_ >= kSingularRcond; }
  double rcond() const { return rcond_; }
  double delta() const { return delta_; }

  // Solves (dr/dy) X = B for B stacked as [B_z; B_g; B_h].
  Matrix solve(const Matrix& b) const {
    const int n_h = static_cast<int>(h_.size());
    const auto b_z = b.topRows(n_z_);
    const auto b_g = b.middleRows(n_z_, n_g_);
    const auto b_h = b.bottomRows(n_h);

    Matrix rhs(n_z_ + n_g_, b.cols());
    rhs.topRows(n_z_) = b_z;
    if (n_h > 0) {
      const Matrix scaled = h_.cwiseInverse().asDiagonal() * b_h;
      rhs.topRows(n_z_) -= jac_h_.transpose() * scaled;
    }
    rhs.bottomRows(n_g_) = b_g;

    const Matrix zl =
        scale_.asDiagonal() * lu_.solve(scale_.asDiagonal() * rhs);
    Matrix x(b.rows(), b.cols());
    x.topRows(n_z_ + n_g_) = zl;
    if (n_h > 0) {
      const Matrix jdz = jac_h_ * zl.topRows(n_z_);
      x.bottomRows(n_h) = h_.cwiseInverse().asDiagonal() *
                          (b_h - mu_.asDiagonal() * jdz);
    }
    return x;
  }

 private:
  SparseMatrix jac_h_;
  Vector h_;
  Vector mu_;
  double delta_;
  double rcond_ = 0.0;
  int n_z_ = 0;
  int n_g_ = 0;
  Vector scale_;
  Eigen::PartialPivLU<Matrix> lu_;
};

// delta = 0 first, then regularization_min, x10, ... up to regularization_max.
std::optional<CondensedKkt> factorize(const Evaluation& ev,
                                      const PrimalDualPoint& y,
                                      const SolveOptions& opts,
                                      double* last_rcond) {
  double delta = 0.0;
  while (true) {
    CondensedKkt kkt(ev, y, delta);
    *last_rcond = kkt.rcond();
    if (kkt.usable()) return kkt;
    if (delta >= opts.regularization_max) return std::nullopt;
    delta = delta == 0.0 ? opts.regularization_min
                         : std::min(delta * 10.0, opts.regularization_max);
  }
}

// Largest step in (0, 1] keeping mu and -H above (1 - f) of their values,
// with H linearized along the direction.
double fraction_to_boundary(const Evaluation& ev, const PrimalDualPoint& y,
                            const Vector& dz, const Vector& dmu, double f) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < dmu.size(); ++i) {
    if (dmu[i] < 0.0) alpha = std::min(alpha, -f * y.mu[i] / dmu[i]);
  }
  if (ev.h.size() > 0) {
    const Vector dh = ev.jac_h * dz;
    for (Eigen::Index i = 0; i < dh.size(); ++i) {
      if (dh[i] > 0.0) alpha = std::min(alpha, -f * ev.h[i] / dh[i]);
    }
  }
  return alpha;
}

}  // namespace

Vector kkt_residual(const Nlp& nlp, const PrimalDualPoint& y, const Vector& s,
                    const Vector& theta, double tau) {
  const NlpDims d = nlp.dims();
  check_inputs(d, y, s, theta);
  return residual_from(evaluate_first_order(nlp, d, y, s, theta), y, tau);
}

Matrix kkt_jacobian(const Nlp& nlp, const PrimalDualPoint& y, const Vector& s,
                    const Vector& theta, double /*tau*/) {
  const NlpDims d = nlp.dims();
  check_inputs(d, y, s, theta);
  Evaluation ev = evaluate_first_order(nlp, d, y, s, theta);
  evaluate_hessian(nlp, d, y, s, theta, ev);

  const int nz = d.n_z, ng = d.n_g, nh = d.n_h;
  Matrix jac = Matrix::Zero(d.n_y(), d.n_y());
  jac.block(0, 0, nz, nz) = Matrix(ev.hessian);
  if (ng > 0) {
    const Matrix jg(ev.jac_g);
    jac.block(0, nz, nz, ng) = jg.transpose();
    jac.block(nz, 0, ng, nz) = jg;
  }
  if (nh > 0) {
    const Matrix jh(ev.jac_h);
    jac.block(0, nz + ng, nz, nh) = jh.transpose();
    jac.block(nz + ng, 0, nh, nz) = y.mu.asDiagonal() * jh;
    jac.block(nz + ng, nz + ng, nh, nh) = ev.h.asDiagonal();
  }
  return jac;
}

Matrix kkt_theta_jacobian(const Nlp& nlp, const PrimalDualPoint& y,
                          const Vector& s, const Vector& theta) {
  const NlpDims d = nlp.dims();
  check_inputs(d, y, s, theta);
  const Matrix lt = nlp.lagrangian_gradient_theta(y, s, theta);
  const Matrix gt = nlp.equality_theta(y.z, s, theta);
  const Matrix ht = nlp.inequality_theta(y.z, theta);
  check_shape(lt.rows(), lt.cols(), d.n_z, d.n_theta,
              "lagrangian_gradient_theta");
  check_shape(gt.rows(), gt.cols(), d.n_g, d.n_theta, "equality_theta");
  check_shape(ht.rows(), ht.cols(), d.n_h, d.n_theta, "inequality_theta");
  check_finite(lt, "lagrangian_gradient_theta");
  check_finite(gt, "equality_theta");
  check_finite(ht, "inequality_theta");

  Matrix out(d.n_y(), d.n_theta);
  out << lt, gt, y.mu.asDiagonal() * ht;
  return out;
}

Matrix kkt_state_jacobian(const Nlp& nlp, const PrimalDualPoint& y,
                          const Vector& s, const Vector& theta) {
  const NlpDims d = nlp.dims();
  check_inputs(d, y, s, theta);
  const Matrix ls = nlp.lagrangian_gradient_state(y, s, theta);
  const Matrix gs = nlp.equality_state(y.z, s, theta);
  check_shape(ls.rows(), ls.cols(), d.n_z, d.n_s, "lagrangian_gradient_state");
  check_shape(gs.rows(), gs.cols(), d.n_g, d.n_s, "equality_state");
  check_finite(ls, "lagrangian_gradient_state");
  check_finite(gs, "equality_state");

  Matrix out = Matrix::Zero(d.n_y(), d.n_s);
  out.topRows(d.n_z) = ls;
  out.middleRows(d.n_z, d.n_g) = gs;
  return out;
}

KktSparsity kkt_sparsity(const Nlp& nlp, const PrimalDualPoint& y,
                         const Vector& s, const Vector& theta) {
  const Matrix jac = kkt_jacobian(nlp, y, s, theta, 0.0);
  KktSparsity out;
  out.n_y = static_cast<int>(jac.rows());
  for (int c = 0; c < jac.cols(); ++c) {
    for (int r = 0; r < jac.rows(); ++r) {
      if (jac(r, c) != 0.0) out.nonzeros.emplace_back(r, c);
    }
  }
  return out;
}

PrimalDualPoint cold_start(const Nlp& nlp, const Vector& s, const Vector& theta,
                           double tau) {
  const NlpDims d = nlp.dims();
  check_size(s.size(), d.n_s, "s");
  check_size(theta.size(), d.n_theta, "theta");
  PrimalDualPoint y;
  y.z = nlp.initial_primal(s, theta);
  check_size(y.z.size(), d.n_z, "initial_primal");
  check_finite(y.z, "initial_primal");
  const Vector h = nlp.inequalities(y.z, theta);
  check_size(h.size(), d.n_h, "inequalities");
  if (!(h.array() < 0.0).all()) {
    throw IpmError("cold_start: initial_primal is not strictly interior");
  }
  y.lambda = Vector::Zero(d.n_g);
  y.mu = (tau / (-h.array())).matrix();
  return y;
}

SolveResult solve(const Nlp& nlp, const Vector& s, const Vector& theta,
                  const SolveOptions& opts,
                  const std::optional<PrimalDualPoint>& warm) {
  opts.validate();
  const NlpDims d = nlp.dims();

  SolveResult out;
  PrimalDualPoint& y = out.point;
  if (warm) {
    y = *warm;
    check_inputs(d, y, s, theta);
    out.report.warm_start_used = true;
  } else {
    y = cold_start(nlp, s, theta, opts.tau);
  }

  Evaluation ev = evaluate_first_order(nlp, d, y, s, theta);
  if (!strictly_interior(ev.h, y.mu)) {
    throw std::invalid_argument("solve: warm start is not strictly interior");
  }
  Vector r = residual_from(ev, y, opts.tau);
  if (opts.on_iterate) opts.on_iterate(y);

  for (int iter = 0;; ++iter) {
    out.report.residual_norm = r.lpNorm<Eigen::Infinity>();
    out.report.iterations = iter;
    if (out.report.residual_norm <= opts.tolerance) {
      out.report.converged = true;
      break;
    }
    if (iter >= opts.max_iterations) break;

    evaluate_hessian(nlp, d, y, s, theta, ev);
    double rcond = 0.0;
    const auto kkt = factorize(ev, y, opts, &rcond);
    if (!kkt) {
      std::ostringstream os;
      os << "solve: KKT matrix singular after regularization (rcond " << rcond
         << ")";
      throw SolverFailure(os.str());
    }
    const Vector step = kkt->solve(-r);
    if (!step.allFinite()) throw SolverFailure("solve: non-finite Newton step");
    const Vector dz = step.head(d.n_z);
    const Vector dl = step.segment(d.n_z, d.n_g);
    const Vector dmu = step.tail(d.n_h);

    const double merit = r.norm();
    double alpha =
        fraction_to_boundary(ev, y, dz, dmu, opts.fraction_to_boundary);
    bool accepted = false;
    for (int k = 0; k <= opts.max_backtracks; ++k, alpha *= 0.5) {
      PrimalDualPoint trial{y.z + alpha * dz, y.lambda + alpha * dl,
                            y.mu + alpha * dmu};
      if (!(trial.mu.array() > 0.0).all()) continue;
      const Vector h_trial = nlp.inequalities(trial.z, theta);
      if (!h_trial.allFinite() || !(h_trial.array() < 0.0).all()) continue;
      Evaluation ev_trial = evaluate_first_order(nlp, d, trial, s, theta);
      Vector r_trial = residual_from(ev_trial, trial, opts.tau);
      if (r_trial.norm() <= (1.0 - kSufficientDecrease * alpha) * merit) {
        y = std::move(trial);
        ev = std::move(ev_trial);
        r = std::move(r_trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.report.iterations = iter + 1;
      break;
    }
    if (opts.on_iterate) opts.on_iterate(y);
  }
  return out;
}

namespace {

Matrix solve_ift(const Nlp& nlp, const PrimalDualPoint& y_tau, const Vector& s,
                 const Vector& theta, const SolveOptions& opts,
                 const Matrix& rhs) {
  const NlpDims d = nlp.dims();
  Evaluation ev = evaluate_first_order(nlp, d, y_tau, s, theta);
  evaluate_hessian(nlp, d, y_tau, s, theta, ev);
  if (!strictly_interior(ev.h, y_tau.mu)) {
    throw SensitivityUnavailable(
        0.0, "sensitivity: point is not strictly interior");
  }
  double rcond = 0.0;
  const auto kkt = factorize(ev, y_tau, opts, &rcond);
  if (!kkt) {
    std::ostringstream os;
    os << "sensitivity: KKT Jacobian singular (rcond " << rcond << ")";
    throw SensitivityUnavailable(rcond, os.str());
  }
  Matrix out = kkt->solve(-rhs);
  if (!out.allFinite()) {
    throw SensitivityUnavailable(kkt->rcond(),
                                 "sensitivity: non-finite solution");
  }
  return out;
}

}  // namespace

Matrix sensitivity(const Nlp& nlp, const PrimalDualPoint& y_tau,
                   const Vector& s, const Vector& theta, double tau,
                   const SolveOptions& opts) {
  if (!(tau > 0.0)) throw std::invalid_argument("sensitivity: tau must be > 0");
  return solve_ift(nlp, y_tau, s, theta, opts,
                   kkt_theta_jacobian(nlp, y_tau, s, theta));
}

Matrix state_sensitivity(const Nlp& nlp, const PrimalDualPoint& y_tau,
                         const Vector& s, const Vector& theta, double tau,
                         const SolveOptions& opts) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("state_sensitivity: tau must be > 0");
  }
  return solve_ift(nlp, y_tau, s, theta, opts,
                   kkt_state_jacobian(nlp, y_tau, s, theta));
}

}  // namespace ipmpc::ipm
