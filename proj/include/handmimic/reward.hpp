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

#ifndef HANDMIMIC_REWARD_HPP_
#define HANDMIMIC_REWARD_HPP_

#include <cmath>
#include <span>
#include <vector>

#include "handmimic/errors.hpp"
#include "handmimic/hand_model.hpp"

namespace handmimic {

// Weights w and scales k of the four imitation terms. Defaults are the
// DeepMimic values (pose, velocity, end effector, root/centre of mass).
struct RewardSpec {
  double w_pose = 0.65;
  double w_velocity = 0.10;
  double w_end_effector = 0.15;
  double w_root = 0.10;
  double k_pose = 2.0;
  double k_velocity = 0.1;
  double k_end_effector = 40.0;
  double k_root = 10.0;

  void validate() const {
    const double ws[] = {w_pose, w_velocity, w_end_effector, w_root};
    const double ks[] = {k_pose, k_velocity, k_end_effector, k_root};
    double sum = 0.0;
    for (double w : ws) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidSpec("reward weights must be >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidSpec("reward weights must sum to 1");
    for (double k : ks) {
      if (!(k > 0.0) || !std::isfinite(k)) throw InvalidSpec("reward scales must be > 0");
    }
  }
};

struct ErrorBundle {
  double pose = 0.0;          // rad^2
  double velocity = 0.0;      // rad^2/s^2
  double end_effector = 0.0;  // m^2
  double root = 0.0;          // rad^2
};

// Rotation angle in [0, pi] of the relative rotation a * b^-1. Handles the
// quaternion double cover.
inline double relative_rotation_angle(const Quat& a, const Quat& b) {
  const Quat rel = a * b.conjugate();
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

// Orientation of every joint as a rotation about its own axis.
inline std::vector<Quat> joint_orientations(const HandTopology& topology, const JointVector& q) {
  std::vector<Quat> out;
  out.reserve(q.size());
  for (int j = 0; j < q.size(); ++j) {
    out.emplace_back(Eigen::AngleAxisd(q[j], topology.joint_axis(j)));
  }
  return out;
}

// Sum over joints of the squared scalar rotation of q_ref * q_sim^-1.
inline double pose_error(std::span<const Quat> sim, std::span<const Quat> ref) {
  if (sim.size() != ref.size()) throw DimensionError("pose_error: size mismatch");
  double sum = 0.0;
  for (std::size_t j = 0; j < sim.size(); ++j) {
    const double angle = relative_rotation_angle(ref[j], sim[j]);
    sum += angle * angle;
  }
  return sum;
}

inline double velocity_error(const JointVector& v_sim, const JointVector& v_ref) {
  if (v_sim.size() != v_ref.size()) throw DimensionError("velocity_error: size mismatch");
  return (v_sim - v_ref).squaredNorm();
}

inline double end_effector_error(std::span<const Vec3> tips_sim, std::span<const Vec3> tips_ref) {
  if (tips_sim.size() != tips_ref.size()) throw DimensionError("end_effector_error: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < tips_sim.size(); ++i) sum += (tips_sim[i] - tips_ref[i]).squaredNorm();
  return sum;
}

inline double root_error(const Quat& root_sim, const Quat& root_ref) {
  const double angle = relative_rotation_angle(root_ref, root_sim);
  return angle * angle;
}

inline double composite_reward(const ErrorBundle& e, const RewardSpec& spec) {
  return spec.w_pose * std::exp(-spec.k_pose * e.pose) +
         spec.w_velocity * std::exp(-spec.k_velocity * e.velocity) +
         spec.w_end_effector * std::exp(-spec.k_end_effector * e.end_effector) +
         spec.w_root * std::exp(-spec.k_root * e.root);
}

// All four terms for a simulated vs reference joint state. The wrist is
// fixed, so both roots are the topology's root orientation.
inline ErrorBundle imitation_errors(const HandTopology& topology, const JointVector& q_sim,
                                    const JointVector& qdot_sim, const JointVector& q_ref,
                                    const JointVector& qdot_ref) {
  ErrorBundle e;
  const auto rot_sim = joint_orientations(topology, q_sim);
  const auto rot_ref = joint_orientations(topology, q_ref);
  e.pose = pose_error(rot_sim, rot_ref);
  e.velocity = velocity_error(qdot_sim, qdot_ref);
  const auto tips_sim = forward_kinematics(topology, q_sim);
  const auto tips_ref = forward_kinematics(topology, q_ref);
  e.end_effector = end_effector_error(tips_sim, tips_ref);
  e.root = root_error(topology.root().orientation, topology.root().orientation);
  return e;
}

}  // namespace handmimic

#endif  // HANDMIMIC_REWARD_HPP_
