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

#include "ipmpc/rl/dpg.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <Eigen/LU>

namespace ipmpc::rl {

namespace {

using Vector5 = Eigen::Matrix<double, 5, 1>;

constexpr double kSingularRcond = 1e-15;

// Stream indices under one run seed.
constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kExplorationStream = 1;
// Performance rollouts share this offset across runs with the same seed, so
// fixed-tau and homotopy runs see common random numbers.
constexpr std::uint64_t kEvaluationSeedOffset = 0x9E3779B97F4A7C15ULL;

}  // namespace

Features features(double s) { return {(s - 0.5) * (s - 0.5), s, 1.0}; }

Eigen::Vector2d compatible_features(double a, double policy_action,
                                    const Eigen::Vector2d& policy_gradient) {
  return policy_gradient * (a - policy_action);
}

Vector5 critic_features(const Sample& sample) {
  Vector5 phi;
  phi << compatible_features(sample.transition.a, sample.policy_action,
                             sample.policy_gradient),
      features(sample.transition.s);
  return phi;
}

Vector5 successor_features(const Sample& sample) {
  Vector5 phi;
  phi << 0.0, 0.0, features(sample.transition.s_next);
  return phi;
}

LstdSystem lstd_system(const Batch& batch, double discount, double ridge) {
  LstdSystem sys;
  sys.a = ridge * Eigen::Matrix<double, 5, 5>::Identity();
  sys.b.setZero();
  for (const Sample& k : batch) {
    const Vector5 phi = critic_features(k);
    const Vector5 next = successor_features(k);
    sys.a += phi * (phi - discount * next).transpose();
    sys.b += phi * k.transition.cost;
  }
  return sys;
}

CriticParams lstd_fit(const Batch& batch, double discount, double ridge) {
  if (batch.size() < 5) {
    throw CriticFitError("lstd_fit: batch shorter than the feature dimension");
  }
  if (!(ridge >= 0.0)) throw std::invalid_argument("lstd_fit: ridge must be >= 0");
  const LstdSystem sys = lstd_system(batch, discount, ridge);
  const Eigen::PartialPivLU<Eigen::Matrix<double, 5, 5>> lu(sys.a);
  const double rcond = lu.rcond();
  if (!std::isfinite(rcond) || rcond < kSingularRcond) {
    std::ostringstream os;
    os << "lstd_fit: singular system (rcond " << rcond << ")";
    throw CriticFitError(os.str());
  }
  const Vector5 x = lu.solve(sys.b);
  if (!x.allFinite()) throw CriticFitError("lstd_fit: non-finite solution");
  CriticParams out;
  out.w = x.head<2>();
  out.v = x.tail<3>();
  return out;
}

double td_rms(const Batch& batch, const CriticParams& critic, double discount) {
  if (batch.empty()) return 0.0;
  Vector5 x;
  x << critic.w, critic.v;
  double ss = 0.0;
  for (const Sample& k : batch) {
    const double delta = k.transition.cost +
                         discount * successor_features(k).dot(x) -
                         critic_features(k).dot(x);
    ss += delta * delta;
  }
  return std::sqrt(ss / static_cast<double>(batch.size()));
}

Eigen::Vector2d policy_gradient_estimate(const Batch& batch,
                                         const Eigen::Vector2d& w) {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  if (batch.empty()) return g;
  for (const Sample& k : batch) {
    g += k.policy_gradient * k.policy_gradient.dot(w);
  }
  return g / static_cast<double>(batch.size());
}

Eigen::MatrixX2d per_sample_gradients(const Batch& batch,
                                      const Eigen::Vector2d& w) {
  Eigen::MatrixX2d out(static_cast<Eigen::Index>(batch.size()), 2);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) =
        (batch[k].policy_gradient * batch[k].policy_gradient.dot(w))
            .transpose();
  }
  return out;
}

void TauSchedule::validate() const {
  if (!(floor > 0.0)) throw std::invalid_argument("tau.floor must be > 0");
  if (!(initial >= floor)) {
    throw std::invalid_argument("tau.initial must be >= tau.floor");
  }
  if (!(step >= 0.0)) throw std::invalid_argument("tau.step must be >= 0");
}

namespace {
// Values within rounding of the floor count as the floor.
double snap_to_floor(double tau, double floor) {
  return tau <= floor * (1.0 + 1e-9) ? floor : tau;
}
}  // namespace

double tau_step(double tau, const TauSchedule& schedule) {
  return snap_to_floor(tau - schedule.step, schedule.floor);
}

double tau_at(int k, const TauSchedule& schedule) {
  return snap_to_floor(schedule.initial - k * schedule.step, schedule.floor);
}

LearnerState actor_step(const LearnerState& state,
                        const Eigen::Vector2d& gradient) {
  if (!gradient.allFinite()) {
    throw std::invalid_argument("actor_step: non-finite gradient");
  }
  Eigen::Vector2d g = gradient;
  const double norm = g.norm();
  if (norm > state.gradient_clip) g *= state.gradient_clip / norm;
  LearnerState next = state;
  next.theta.theta1 -= state.learning_rate * g[0];
  next.theta.theta2 -= state.learning_rate * g[1];
  return next;
}

void LearnerConfig::validate() const {
  tau.validate();
  if (!(discount > 0.0 && discount < 1.0)) {
    throw std::invalid_argument("learner.discount must be in (0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learner.learning_rate must be > 0");
  }
  if (!(gradient_clip > 0.0)) {
    throw std::invalid_argument("learner.gradient_clip must be > 0");
  }
  if (!(exploration_stddev >= 0.0)) {
    throw std::invalid_argument("learner.exploration_stddev must be >= 0");
  }
  if (!(ridge >= 0.0)) throw std::invalid_argument("learner.ridge must be >= 0");
  if (batch_size < 5) {
    throw std::invalid_argument("learner.batch_size must be >= 5");
  }
  if (steps < 1) throw std::invalid_argument("learner.steps must be >= 1");
  if (eval_every < 1) {
    throw std::invalid_argument("learner.eval_every must be >= 1");
  }
  if (!(eval_table_spacing >= 0.0) || !(eval_table_hi > eval_table_lo)) {
    throw std::invalid_argument("learner eval table settings invalid");
  }
  if (!std::isfinite(initial_state) ||
      !std::isfinite(initial_theta.theta1) ||
      !std::isfinite(initial_theta.theta2)) {
    throw std::invalid_argument("learner initial values must be finite");
  }
  dp::RolloutSettings rs;
  rs.discount = discount;
  rs.n_rollouts = eval_rollouts;
  rs.horizon = eval_horizon;
  rs.validate();
}

Batch collect_batch(const mpc::MpcPolicy& policy, const env::Battery& battery,
                    const mpc::PolicyParams& theta, double tau,
                    double exploration_stddev, int count, double& s,
                    std::optional<ipm::PrimalDualPoint>& warm,
                    env::NoiseStream& noise, env::NoiseStream& exploration,
                    int* skipped) {
  Batch batch;
  batch.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double e = exploration_stddev * exploration.next();
    std::optional<mpc::PolicyEval> ev;
    try {
      ev = policy.evaluate(s, theta, tau, warm);
      warm = ev->solution;
    } catch (const mpc::PolicyEvaluationError&) {
      warm.reset();
      if (skipped) ++*skipped;
    }
    Sample sample;
    env::Transition& t = sample.transition;
    t.s = s;
    t.exploration = e;
    t.a = battery.clamp_action((ev ? ev->action : 0.0) + e);
    t.noise = noise.next();
    t.cost = battery.rl_stage_cost(s, t.a);
    t.s_next = battery.step(s, t.a, t.noise);
    s = t.s_next;
    if (ev) {
      sample.policy_action = ev->action;
      sample.policy_gradient = ev->gradient;
      batch.push_back(sample);
    }
  }
  return batch;
}

dp::RolloutSettings evaluation_settings(const LearnerConfig& config,
                                        std::uint64_t seed) {
  dp::RolloutSettings rs;
  rs.discount = config.discount;
  rs.n_rollouts = config.eval_rollouts;
  rs.horizon = config.eval_horizon;
  rs.seed = seed + kEvaluationSeedOffset;
  return rs;
}

dp::PerformanceEstimate evaluate_performance(const mpc::MpcPolicy& policy,
                                             const env::Battery& battery,
                                             const mpc::PolicyParams& theta,
                                             double tau,
                                             const LearnerConfig& config,
                                             std::uint64_t seed) {
  const dp::RolloutSettings rs = evaluation_settings(config, seed);

  if (config.eval_table_spacing > 0.0) {
    const mpc::PolicyTable table(policy, theta, tau, config.eval_table_lo,
                                 config.eval_table_hi,
                                 config.eval_table_spacing);
    return dp::policy_performance([&table] { return std::cref(table); },
                                  battery, rs);
  }
  return dp::policy_performance(
      [&] {
        return [&, warm = std::optional<ipm::PrimalDualPoint>()](
                   double s) mutable {
          mpc::PolicyEval ev = policy.evaluate(s, theta, tau, warm, false);
          warm = std::move(ev.solution);
          return ev.action;
        };
      },
      battery, rs);
}

LearningTrace run_learning(const LearnerConfig& config,
                           const mpc::MpcPolicy& policy,
                           const env::Battery& battery, std::uint64_t seed,
                           const StepCallback& on_step) {
  config.validate();
  const auto& p = battery.params();
  env::NoiseStream noise =
      env::NoiseStream::derived(seed, kNoiseStream, p.noise_mean,
                                p.noise_stddev());
  env::NoiseStream exploration =
      env::NoiseStream::derived(seed, kExplorationStream, 0.0, 1.0);

  LearnerState state;
  state.theta = config.initial_theta;
  state.tau = config.tau.initial;
  state.learning_rate = config.learning_rate;
  state.gradient_clip = config.gradient_clip;
  state.exploration_stddev = config.exploration_stddev;
  state.seed = seed;

  LearningTrace trace;
  double s = config.initial_state;
  std::optional<ipm::PrimalDualPoint> warm;
  dp::PerformanceEstimate last_j;

  auto log_row = [&](TraceRow row) {
    trace.rows.push_back(row);
    if (on_step) on_step(row);
  };

  auto fresh_j = [&]() {
    try {
      last_j = evaluate_performance(policy, battery, state.theta, state.tau,
                                    config, seed);
    } catch (const mpc::PolicyEvaluationError& e) {
      throw LearningAborted(
          std::string("performance evaluation failed: ") + e.what(), trace);
    }
  };

  for (int k = 0; k < config.steps; ++k) {
    state.step = k;
    TraceRow row;
    row.step = k;
    row.theta1 = state.theta.theta1;
    row.theta2 = state.theta.theta2;
    row.tau = state.tau;
    if (k % config.eval_every == 0) {
      fresh_j();
      row.j_fresh = true;
    }
    row.j = last_j.mean;
    row.j_se = last_j.standard_error;

    int skipped = 0;
    const Batch batch = collect_batch(
        policy, battery, state.theta, state.tau, state.exploration_stddev,
        config.batch_size, s, warm, noise, exploration, &skipped);
    trace.skipped_samples += skipped;
    if (skipped > 0) {
      trace.diagnostics.push_back("step " + std::to_string(k) + ": skipped " +
                                  std::to_string(skipped) + " samples");
    }
    if (trace.skipped_samples > config.max_failures) {
      throw LearningAborted("too many failed policy evaluations", trace);
    }

    Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
    try {
      state.critic = lstd_fit(batch, config.discount, config.ridge);
      gradient = policy_gradient_estimate(batch, state.critic.w);
      row.critic_residual = td_rms(batch, state.critic, config.discount);
    } catch (const CriticFitError& e) {
      // Keep the previous critic and skip the actor update.
      ++trace.critic_failures;
      trace.diagnostics.push_back("step " + std::to_string(k) + ": " +
                                  e.what());
      if (trace.critic_failures > config.max_failures) {
        throw LearningAborted("too many critic fit failures", trace);
      }
    }
    row.grad_norm = gradient.norm();
    log_row(row);

    state = actor_step(state, gradient);
    state.tau = tau_at(k + 1, config.tau);
  }

  state.step = config.steps;
  fresh_j();
  TraceRow last;
  last.step = config.steps;
  last.theta1 = state.theta.theta1;
  last.theta2 = state.theta.theta2;
  last.tau = state.tau;
  last.j = last_j.mean;
  last.j_se = last_j.standard_error;
  last.j_fresh = true;
  log_row(last);
  return trace;
}

void write_trace_csv(const LearningTrace& trace, std::ostream& os) {
  os << "step,theta1,theta2,tau,J,J_se,grad_norm,critic_residual\n";
  os << std::setprecision(17);
  for (const TraceRow& r : trace.rows) {
    os << r.step << ',' << r.theta1 << ',' << r.theta2 << ',' << r.tau << ','
       << r.j << ',' << r.j_se << ',' << r.grad_norm << ','
       << r.critic_residual << '\n';
  }
}

int steps_to_convergence(const std::vector<TraceRow>& rows, double tol,
                         int window) {
  const int n = static_cast<int>(rows.size());
  int run = 0;
  for (int j = 0; j + 1 < n; ++j) {
    const double d = std::hypot(rows[j + 1].theta1 - rows[j].theta1,
                                rows[j + 1].theta2 - rows[j].theta2);
    run = d < tol ? run + 1 : 0;
    if (run == window) return rows[j + 1 - window].step;
  }
  return -1;
}

}  // namespace ipmpc::rl
