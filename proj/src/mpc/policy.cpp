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

#include "ipmpc/mpc/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ipmpc::mpc {

ipm::Vector PolicyParams::vector() const {
  ipm::Vector v(2);
  v << theta1, theta2;
  return v;
}

PolicyParams PolicyParams::from_vector(const Eigen::Ref<const ipm::Vector>& v) {
  if (v.size() != 2) {
    throw std::invalid_argument("PolicyParams: expected 2 entries");
  }
  return {v[0], v[1]};
}

MpcPolicy::MpcPolicy(MpcConfig cfg, ipm::SolveOptions solver)
    : cfg_(cfg), nlp_(cfg), solver_(std::move(solver)) {}

PolicyEval MpcPolicy::evaluate(double s, const PolicyParams& theta, double tau,
                               const std::optional<ipm::PrimalDualPoint>& warm,
                               bool with_gradient) const {
  ipm::SolveOptions opts = solver_;
  opts.tau = tau;
  const ipm::Vector state = ipm::Vector::Constant(1, s);
  const ipm::Vector th = theta.vector();

  PolicyEval out;
  std::optional<ipm::SolveResult> result;
  std::string failure;
  try {
    result = ipm::solve(nlp_, state, th, opts, warm);
    if (!result->report.converged) {
      failure = "not converged";
      result.reset();
    }
  } catch (const ipm::IpmError& e) {
    failure = e.what();
  } catch (const std::invalid_argument& e) {
    failure = e.what();
  }
  if (!result && warm) {
    out.cold_retry = true;
    try {
      result = ipm::solve(nlp_, state, th, opts);
      if (!result->report.converged) {
        failure = "not converged from cold start";
        result.reset();
      }
    } catch (const ipm::IpmError& e) {
      failure = e.what();
    }
  }
  if (!result) {
    std::ostringstream os;
    os << "policy evaluation failed at s=" << s << " theta=[" << theta.theta1
       << ", " << theta.theta2 << "] tau=" << tau << ": " << failure;
    throw PolicyEvaluationError(os.str());
  }

  out.solution = std::move(result->point);
  out.report = result->report;
  out.action = out.solution.z[nlp_.u(0)];
  if (with_gradient) {
    try {
      const ipm::Matrix dy =
          ipm::sensitivity(nlp_, out.solution, state, th, tau, opts);
      out.gradient = dy.row(nlp_.u(0)).transpose();
    } catch (const ipm::IpmError& e) {
      throw PolicyEvaluationError(std::string("policy sensitivity failed: ") +
                                  e.what());
    }
  }
  return out;
}

std::vector<ProfilePoint> smoothness_profile(const MpcPolicy& policy,
                                             const PolicyParams& theta,
                                             double tau,
                                             const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("smoothness_profile: empty grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("smoothness_profile: grid must be sorted");
  }
  std::vector<ProfilePoint> out;
  out.reserve(grid.size());
  std::optional<ipm::PrimalDualPoint> warm;
  for (double s : grid) {
    ProfilePoint p;
    p.s = s;
    try {
      PolicyEval ev = policy.evaluate(s, theta, tau, warm);
      p.action = ev.action;
      p.gradient = ev.gradient;
      p.ok = true;
      warm = std::move(ev.solution);
    } catch (const PolicyEvaluationError& e) {
      p.error = e.what();
      warm.reset();
    }
    out.push_back(std::move(p));
  }
  return out;
}

PolicyTable::PolicyTable(const MpcPolicy& policy, const PolicyParams& theta,
                         double tau, double s_lo, double s_hi, double spacing)
    : s_lo_(s_lo), spacing_(spacing) {
  if (!(s_hi > s_lo) || !(spacing > 0.0)) {
    throw std::invalid_argument("PolicyTable: bad grid");
  }
  const auto n = static_cast<std::size_t>(std::ceil((s_hi - s_lo) / spacing)) + 1;
  actions_.resize(n);
  std::optional<ipm::PrimalDualPoint> warm;
  for (std::size_t i = 0; i < n; ++i) {
    PolicyEval ev = policy.evaluate(s_lo + spacing * static_cast<double>(i),
                                    theta, tau, warm, false);
    actions_[i] = ev.action;
    warm = std::move(ev.solution);
  }
}

double PolicyTable::operator()(double s) const {
  const double t = (s - s_lo_) / spacing_;
  if (t <= 0.0) return actions_.front();
  const auto last = actions_.size() - 1;
  if (t >= static_cast<double>(last)) return actions_.back();
  const auto k = static_cast<std::size_t>(t);
  const double f = t - static_cast<double>(k);
  return actions_[k] + f * (actions_[k + 1] - actions_[k]);
}

}  // namespace ipmpc::mpc
