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

#ifndef HANDMIMIC_ENV_HPP_
#define HANDMIMIC_ENV_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>

#include "handmimic/dynamics.hpp"
#include "handmimic/errors.hpp"
#include "handmimic/hand_model.hpp"
#include "handmimic/motion.hpp"
#include "handmimic/reward.hpp"

namespace handmimic {

enum class InitMode { kFixedZero, kReferenceState };

// Desired joint velocity handed to the PD law together with the target pose.
// kZero damps toward rest; kCommandedRate uses the rate at which the target
// itself moves, (a_t - a_{t-1}) * control_hz.
enum class VelocityTarget { kZero, kCommandedRate };

inline std::string to_string(InitMode m) {
  return m == InitMode::kReferenceState ? "reference_state" : "fixed_zero";
}
inline InitMode init_mode_from_string(const std::string& s) {
  if (s == "fixed_zero") return InitMode::kFixedZero;
  if (s == "reference_state") return InitMode::kReferenceState;
  throw ConfigError("unknown init mode '" + s + "'");
}
inline std::string to_string(VelocityTarget v) {
  return v == VelocityTarget::kCommandedRate ? "commanded_rate" : "zero";
}
inline VelocityTarget velocity_target_from_string(const std::string& s) {
  if (s == "zero") return VelocityTarget::kZero;
  if (s == "commanded_rate") return VelocityTarget::kCommandedRate;
  throw ConfigError("unknown velocity target '" + s + "'");
}

struct EpisodeConfig {
  int episode_steps = 2000;
  InitMode init_mode = InitMode::kFixedZero;
  VelocityTarget velocity_target = VelocityTarget::kCommandedRate;
  bool include_fingertips = true;

  void validate() const {
    if (episode_steps < 1) throw InvalidSpec("episode_steps must be >= 1");
  }
};

struct EnvSpec {
  std::shared_ptr<const HandTopology> topology;
  std::shared_ptr<const ReferenceMotion> motion;
  PdGains gains;
  RewardSpec reward;
  SimConfig sim;
  EpisodeConfig episode;

  void validate() const {
    if (!topology || !motion) throw InvalidSpec("EnvSpec needs a topology and a motion");
    if (motion->num_joints() != topology->num_joints()) {
      throw DimensionError("motion has " + std::to_string(motion->num_joints()) +
                           " joints, topology has " + std::to_string(topology->num_joints()));
    }
    if (motion->num_frames() < 2) throw InvalidSpec("motion needs at least two frames");
    gains.validate();
    reward.validate();
    sim.validate();
    episode.validate();
  }
};

struct StepResult {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
  ErrorBundle errors;
};

// Fixed-length imitation MDP. Observation = [q, qdot, fingertips (3 per
// finger, optional), phase]. Actions are joint-angle PD targets in radians.
class HandEnv {
 public:
  explicit HandEnv(EnvSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    reset(0);
  }

  const EnvSpec& spec() const { return spec_; }
  const HandTopology& topology() const { return *spec_.topology; }
  const ReferenceMotion& motion() const { return *spec_.motion; }
  int action_dim() const { return topology().num_joints(); }
  int observation_dim() const {
    const int n = topology().num_joints();
    return 2 * n + (spec_.episode.include_fingertips ? 3 * topology().num_fingers() : 0) + 1;
  }

  const HandState& state() const { return state_; }
  int step_count() const { return steps_; }
  bool done() const { return steps_ >= spec_.episode.episode_steps; }
  double time() const { return state_.t; }

  Eigen::VectorXd reset(std::uint64_t seed) {
    steps_ = 0;
    double t0 = 0.0;
    if (spec_.episode.init_mode == InitMode::kReferenceState) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      t0 = u(rng) * motion().duration();
      const MotionSample s = sample(motion(), t0);
      state_ = HandState{clamp_to_limits(topology(), s.q), s.qdot, t0};
    } else {
      state_ = HandState::at_rest(clamp_to_limits(topology(), motion().frame(0)), 0.0);
    }
    previous_target_ = state_.q;
    return observe();
  }

  StepResult step(const JointVector& action) {
    if (done()) throw InvalidSpec("HandEnv::step called after the episode ended; call reset()");
    if (action.size() != action_dim()) throw DimensionError("HandEnv::step: wrong action size");
    if (!action.allFinite()) throw NonFiniteState("HandEnv::step: non-finite action");
    const JointVector target = clamp_to_limits(topology(), action);
    JointVector target_velocity = JointVector::Zero(action_dim());
    if (spec_.episode.velocity_target == VelocityTarget::kCommandedRate) {
      target_velocity = (target - previous_target_) * static_cast<double>(spec_.sim.control_hz);
    }
    state_ = handmimic::step(state_, target, target_velocity, spec_.gains, spec_.sim, topology());
    previous_target_ = target;
    ++steps_;

    StepResult out;
    const MotionSample ref = sample(motion(), state_.t);
    out.errors = imitation_errors(topology(), state_.q, state_.qdot, ref.q, ref.qdot);
    out.reward = composite_reward(out.errors, spec_.reward);
    out.done = done();
    out.observation = observe();
    return out;
  }

  Eigen::VectorXd observe() const {
    const int n = topology().num_joints();
    Eigen::VectorXd obs(observation_dim());
    obs.head(n) = state_.q;
    obs.segment(n, n) = state_.qdot;
    int k = 2 * n;
    if (spec_.episode.include_fingertips) {
      for (const Vec3& tip : forward_kinematics(topology(), state_.q)) {
        obs.segment<3>(k) = tip;
        k += 3;
      }
    }
    obs[k] = sample(motion(), state_.t).phase.value;
    return obs;
  }

  // Reference pose at the end of the upcoming control period.
  JointVector next_reference_pose() const {
    return sample(motion(), state_.t + spec_.sim.control_dt()).q;
  }

  // Maps u in [-1, 1] per joint onto [lo, hi].
  JointVector action_from_normalized(const Eigen::VectorXd& u) const {
    const JointVector lo = topology().lower_limits();
    const JointVector hi = topology().upper_limits();
    return 0.5 * (lo + hi) + 0.5 * (hi - lo).cwiseProduct(u);
  }

 private:
  EnvSpec spec_;
  HandState state_;
  JointVector previous_target_;
  int steps_ = 0;
};

}  // namespace handmimic

#endif  // HANDMIMIC_ENV_HPP_
