// Copyright 2026 The handmimic Authors
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

#ifndef HANDMIMIC_DYNAMICS_HPP_
#define HANDMIMIC_DYNAMICS_HPP_

#include <algorithm>
#include <cmath>
#include <string>

#include "handmimic/errors.hpp"
#include "handmimic/hand_model.hpp"

namespace handmimic {

struct PdGains {
  double kp = 0.22;
  double kd = 0.87;

  void validate() const {
    if (!std::isfinite(kp) || !std::isfinite(kd) || kp < 0.0 || kd < 0.0) {
      throw InvalidSpec("PD gains must be finite and non-negative");
    }
  }
};

// How the PD drive signal moves a joint.
//
// kVelocityConstraint: the signal is a per-substep velocity correction,
//   qdot += kp * (q* - q) / dt + kd * (qdot* - qdot), the position-control
//   motor found in common rigid-body engines. Gains are dimensionless and
//   kp = kd = 1 is deadbeat.
// kTorque: the signal is a joint torque on a decoupled double integrator,
//   qddot = (kp * (q* - q) + kd * (qdot* - qdot)) / inertia.
enum class MotorModel { kVelocityConstraint, kTorque };

inline std::string to_string(MotorModel m) {
  return m == MotorModel::kTorque ? "torque" : "velocity_constraint";
}

inline MotorModel motor_model_from_string(const std::string& s) {
  if (s == "torque") return MotorModel::kTorque;
  if (s == "velocity_constraint") return MotorModel::kVelocityConstraint;
  throw ConfigError("unknown motor model '" + s + "'");
}

struct SimConfig {
  int sim_hz = 240;
  int control_hz = 30;
  double inertia = 1.0;  // torque model only, reduced units
  double velocity_cap = 50.0;
  MotorModel motor = MotorModel::kVelocityConstraint;

  int substeps() const { return sim_hz / control_hz; }
  double sim_dt() const { return 1.0 / sim_hz; }
  double control_dt() const { return 1.0 / control_hz; }

  void validate() const {
    if (sim_hz <= 0 || control_hz <= 0 || sim_hz % control_hz != 0) {
      throw InvalidSpec("sim_hz must be a positive multiple of control_hz");
    }
    if (!(inertia > 0.0)) throw InvalidSpec("inertia must be positive");
    if (!(velocity_cap > 0.0)) throw InvalidSpec("velocity_cap must be positive");
  }
};

struct HandState {
  JointVector q;
  JointVector qdot;
  double t = 0.0;

  static HandState at_rest(const JointVector& q, double t = 0.0) {
    return HandState{q, JointVector::Zero(q.size()), t};
  }
};

// kp * dP + kd * dV, elementwise.
inline JointVector pd_signal(const PdGains& gains, const JointVector& dP, const JointVector& dV) {
  return gains.kp * dP + gains.kd * dV;
}

// Advances one control period: substeps() semi-implicit Euler steps at sim_hz
// toward a target pose (and target velocity; zero means "damp toward rest").
// After every substep q is clamped into its limits, qdot is zeroed at an
// active limit and |qdot| is capped at velocity_cap.
inline HandState step(const HandState& state, const JointVector& target,
                      const JointVector& target_velocity, const PdGains& gains,
                      const SimConfig& cfg, const HandTopology& topology) {
  const int n = topology.num_joints();
  if (state.q.size() != n || state.qdot.size() != n || target.size() != n ||
      target_velocity.size() != n) {
    throw DimensionError("dynamics::step: joint count mismatch");
  }
  if (!target.allFinite() || !target_velocity.allFinite()) {
    throw NonFiniteState("dynamics::step: non-finite target");
  }
  const double dt = cfg.sim_dt();
  HandState next = state;
  for (int s = 0; s < cfg.substeps(); ++s) {
    for (int j = 0; j < n; ++j) {
      double& q = next.q[j];
      double& v = next.qdot[j];
      if (cfg.motor == MotorModel::kTorque) {
        const double tau = gains.kp * (target[j] - q) + gains.kd * (target_velocity[j] - v);
        v += dt * tau / cfg.inertia;
      } else {
        v += gains.kp * (target[j] - q) / dt + gains.kd * (target_velocity[j] - v);
      }
      v = std::clamp(v, -cfg.velocity_cap, cfg.velocity_cap);
      q += dt * v;
      const JointLimit& lim = topology.limit(j);
      if (q <= lim.lo) {
        q = lim.lo;
        v = 0.0;
      } else if (q >= lim.hi) {
        q = lim.hi;
        v = 0.0;
      }
    }
  }
  next.t = state.t + cfg.control_dt();
  if (!next.q.allFinite() || !next.qdot.allFinite()) {
    throw NonFiniteState("dynamics::step: state became non-finite (unstable gains?)");
  }
  return next;
}

inline HandState step(const HandState& state, const JointVector& target, const PdGains& gains,
                      const SimConfig& cfg, const HandTopology& topology) {
  return step(state, target, JointVector::Zero(target.size()), gains, cfg, topology);
}

}  // namespace handmimic

#endif  // HANDMIMIC_DYNAMICS_HPP_
