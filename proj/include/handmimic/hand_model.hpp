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

#ifndef HANDMIMIC_HAND_MODEL_HPP_
#define HANDMIMIC_HAND_MODEL_HPP_

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "handmimic/errors.hpp"

namespace handmimic {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;

// Joint-space vector (angles, velocities, torques). Ordered thumb -> pinky,
// proximal -> distal within each finger.
using JointVector = Eigen::VectorXd;

inline constexpr int kJointsPerFinger = 3;
inline constexpr int kFullHandFingers = 5;
inline constexpr int kFullHandJoints = kFullHandFingers * kJointsPerFinger;
inline constexpr int kTopologyFormatVersion = 1;

struct JointLimit {
  double lo = 0.0;
  double hi = 2.0;
};

struct FingerSpec {
  std::string name;
  Vec3 base_position = Vec3::Zero();   // hand frame, m
  Vec3 base_direction = Vec3::UnitX(); // unit
  Vec3 joint_axis = Vec3::UnitY();     // unit, shared by the finger's joints
  std::array<double, kJointsPerFinger> link_lengths{};
  std::array<JointLimit, kJointsPerFinger> joint_limits{};
  std::array<std::string, kJointsPerFinger> joint_names{};

  double total_length() const {
    return link_lengths[0] + link_lengths[1] + link_lengths[2];
  }
};

struct RootPose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

// Immutable kinematic description of the hand. The standard model has five
// fingers; reduced models with fewer fingers are allowed for desk-scale
// experiments but every finger always has exactly three joints.
class HandTopology {
 public:
  HandTopology(std::vector<FingerSpec> fingers, RootPose root)
      : fingers_(std::move(fingers)), root_(std::move(root)) {
    Validate();
  }

  int num_fingers() const { return static_cast<int>(fingers_.size()); }
  int num_joints() const { return num_fingers() * kJointsPerFinger; }
  bool is_full_hand() const { return num_fingers() == kFullHandFingers; }

  const std::vector<FingerSpec>& fingers() const { return fingers_; }
  const FingerSpec& finger(int i) const { return fingers_.at(i); }
  const RootPose& root() const { return root_; }

  int finger_of(int joint) const { return joint / kJointsPerFinger; }
  const JointLimit& limit(int joint) const {
    return fingers_.at(finger_of(joint)).joint_limits[joint % kJointsPerFinger];
  }
  const Vec3& joint_axis(int joint) const {
    return fingers_.at(finger_of(joint)).joint_axis;
  }
  std::string joint_name(int joint) const {
    const FingerSpec& f = fingers_.at(finger_of(joint));
    return f.name + "_" + f.joint_names[joint % kJointsPerFinger];
  }
  std::vector<std::string> joint_names() const {
    std::vector<std::string> names;
    for (int j = 0; j < num_joints(); ++j) names.push_back(joint_name(j));
    return names;
  }

  JointVector lower_limits() const {
    JointVector lo(num_joints());
    for (int j = 0; j < num_joints(); ++j) lo[j] = limit(j).lo;
    return lo;
  }
  JointVector upper_limits() const {
    JointVector hi(num_joints());
    for (int j = 0; j < num_joints(); ++j) hi[j] = limit(j).hi;
    return hi;
  }

  // Rigidly moves the wrist; used to check translation equivariance.
  HandTopology with_root(RootPose root) const {
    return HandTopology(fingers_, std::move(root));
  }

 private:
  void Validate() const {
    if (fingers_.empty() || fingers_.size() > kFullHandFingers) {
      throw InvalidSpec("hand must have between 1 and 5 fingers");
    }
    for (const FingerSpec& f : fingers_) {
      if (std::abs(f.base_direction.norm() - 1.0) > 1e-9 ||
          std::abs(f.joint_axis.norm() - 1.0) > 1e-9) {
        throw InvalidSpec("finger '" + f.name + "': direction and axis must be unit vectors");
      }
      for (int k = 0; k < kJointsPerFinger; ++k) {
        if (!(f.link_lengths[k] > 0.0)) {
          throw InvalidSpec("finger '" + f.name + "': link lengths must be positive");
        }
        if (!(f.joint_limits[k].lo <= f.joint_limits[k].hi)) {
          throw InvalidSpec("finger '" + f.name + "': joint limit lo > hi");
        }
      }
    }
    if (std::abs(root_.orientation.norm() - 1.0) > 1e-9) {
      throw InvalidSpec("root orientation must be a unit quaternion");
    }
  }

  std::vector<FingerSpec> fingers_;
  RootPose root_;
};

namespace detail {

inline FingerSpec MakeFinger(std::string name, Vec3 base, Vec3 direction, Vec3 axis,
                             std::array<double, 3> lengths,
                             std::array<std::string, 3> joint_names) {
  FingerSpec f;
  f.name = std::move(name);
  f.base_position = base;
  f.base_direction = direction.normalized();
  f.joint_axis = axis.normalized();
  f.link_lengths = lengths;
  f.joint_limits = {JointLimit{0.0, 2.0}, JointLimit{0.0, 2.0}, JointLimit{0.0, 2.0}};
  f.joint_names = std::move(joint_names);
  return f;
}

// Hand frame: +x points from the wrist toward the fingertips, +y toward the
// thumb side, +z out of the back of the hand. Positive flexion about +y bends
// a finger toward the palm (-z).
inline std::vector<FingerSpec> DefaultFingers() {
  const std::array<std::string, 3> finger_joints = {"mcp", "pip", "dip"};
  return {
      MakeFinger("thumb", {0.025, 0.025, -0.010}, {0.6, 0.8, 0.0}, {-0.4, 0.3, 0.8660254037844386},
                 {0.046, 0.032, 0.027}, {"cmc", "mcp", "ip"}),
      MakeFinger("index", {0.095, 0.025, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0},
                 {0.040, 0.023, 0.019}, finger_joints),
      MakeFinger("middle", {0.097, 0.005, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0},
                 {0.045, 0.027, 0.020}, finger_joints),
      MakeFinger("ring", {0.090, -0.013, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0},
                 {0.042, 0.026, 0.020}, finger_joints),
      MakeFinger("pinky", {0.082, -0.030, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0},
                 {0.033, 0.018, 0.018}, finger_joints),
  };
}

}  // namespace detail

// Five fingers, three flexion joints each, every limit [0, 2] rad. Phalanx
// lengths are average adult measurements; the same numbers ship in
// data/hand_default.json.
inline HandTopology build_default_hand() {
  return HandTopology(detail::DefaultFingers(), RootPose{});
}

// Single index finger (3 joints) used for fast learning experiments.
inline HandTopology build_reduced_hand() {
  return HandTopology({detail::DefaultFingers()[1]}, RootPose{});
}

// Fingertip positions in the world frame, one per finger.
inline std::vector<Vec3> forward_kinematics(const HandTopology& topology, const JointVector& q) {
  if (q.size() != topology.num_joints()) {
    throw DimensionError("forward_kinematics: expected " + std::to_string(topology.num_joints()) +
                         " joint angles, got " + std::to_string(q.size()));
  }
  const RootPose& root = topology.root();
  std::vector<Vec3> tips;
  tips.reserve(topology.num_fingers());
  for (int f = 0; f < topology.num_fingers(); ++f) {
    const FingerSpec& finger = topology.finger(f);
    Vec3 tip = finger.base_position;
    double angle = 0.0;
    for (int k = 0; k < kJointsPerFinger; ++k) {
      angle += q[f * kJointsPerFinger + k];
      tip += Eigen::AngleAxisd(angle, finger.joint_axis) * finger.base_direction *
             finger.link_lengths[k];
    }
    tips.push_back(root.position + root.orientation * tip);
  }
  return tips;
}

// Analytic d(tip)/d(q) for one finger (3x3, columns = the finger's joints).
inline Mat3 fingertip_jacobian(const HandTopology& topology, const JointVector& q, int finger_index) {
  const FingerSpec& finger = topology.finger(finger_index);
  std::array<Vec3, kJointsPerFinger> links;
  double angle = 0.0;
  for (int k = 0; k < kJointsPerFinger; ++k) {
    angle += q[finger_index * kJointsPerFinger + k];
    links[k] = Eigen::AngleAxisd(angle, finger.joint_axis) * finger.base_direction *
               finger.link_lengths[k];
  }
  // Joint i rotates every link distal to it about the shared axis.
  Mat3 jac = Mat3::Zero();
  for (int i = 0; i < kJointsPerFinger; ++i) {
    Vec3 distal = Vec3::Zero();
    for (int k = i; k < kJointsPerFinger; ++k) distal += links[k];
    jac.col(i) = topology.root().orientation * finger.joint_axis.cross(distal);
  }
  return jac;
}

inline JointVector clamp_to_limits(const HandTopology& topology, const JointVector& q) {
  if (q.size() != topology.num_joints()) {
    throw DimensionError("clamp_to_limits: joint count mismatch");
  }
  JointVector out(q.size());
  for (int j = 0; j < q.size(); ++j) {
    const JointLimit& lim = topology.limit(j);
    out[j] = std::clamp(q[j], lim.lo, lim.hi);
  }
  return out;
}

inline bool within_limits(const HandTopology& topology, const JointVector& q) {
  for (int j = 0; j < q.size(); ++j) {
    if (!std::isfinite(q[j]) || q[j] < topology.limit(j).lo || q[j] > topology.limit(j).hi) {
      return false;
    }
  }
  return true;
}

// ---------- structured-text serialization ----------

namespace detail {

inline nlohmann::json Vec3ToJson(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline Vec3 Vec3FromJson(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + ": expected 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace detail

// Schema (version 1):
// {
//   "version": 1,
//   "root_pose": {"position": [x,y,z], "orientation": [w,x,y,z]},
//   "fingers": [{"name", "base_position", "base_direction", "joint_axis",
//                "link_lengths": [3], "joint_limits": [[lo,hi] x3],
//                "joint_names": [3]}]
// }
inline nlohmann::json topology_to_json(const HandTopology& topology) {
  nlohmann::json out;
  out["version"] = kTopologyFormatVersion;
  const Quat& r = topology.root().orientation;
  out["root_pose"] = {{"position", detail::Vec3ToJson(topology.root().position)},
                      {"orientation", {r.w(), r.x(), r.y(), r.z()}}};
  out["fingers"] = nlohmann::json::array();
  for (const FingerSpec& f : topology.fingers()) {
    nlohmann::json limits = nlohmann::json::array();
    for (const JointLimit& l : f.joint_limits) limits.push_back({l.lo, l.hi});
    out["fingers"].push_back({{"name", f.name},
                              {"base_position", detail::Vec3ToJson(f.base_position)},
                              {"base_direction", detail::Vec3ToJson(f.base_direction)},
                              {"joint_axis", detail::Vec3ToJson(f.joint_axis)},
                              {"link_lengths", f.link_lengths},
                              {"joint_limits", limits},
                              {"joint_names", f.joint_names}});
  }
  return out;
}

inline HandTopology topology_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kTopologyFormatVersion) {
      throw ParseError("unsupported topology version");
    }
    RootPose root;
    if (j.contains("root_pose")) {
      const auto& rp = j.at("root_pose");
      root.position = detail::Vec3FromJson(rp.at("position"), "root_pose.position");
      const auto& o = rp.at("orientation");
      if (!o.is_array() || o.size() != 4) throw ParseError("root_pose.orientation: expected [w,x,y,z]");
      root.orientation = Quat(o[0].get<double>(), o[1].get<double>(), o[2].get<double>(),
                              o[3].get<double>());
    }
    std::vector<FingerSpec> fingers;
    for (const auto& jf : j.at("fingers")) {
      FingerSpec f;
      f.name = jf.at("name").get<std::string>();
      f.base_position = detail::Vec3FromJson(jf.at("base_position"), "base_position");
      f.base_direction = detail::Vec3FromJson(jf.at("base_direction"), "base_direction");
      f.joint_axis = detail::Vec3FromJson(jf.at("joint_axis"), "joint_axis");
      const auto& lengths = jf.at("link_lengths");
      const auto& limits = jf.at("joint_limits");
      if (lengths.size() != kJointsPerFinger || limits.size() != kJointsPerFinger) {
        throw DimensionError("finger '" + f.name + "' must have exactly 3 joints");
      }
      for (int k = 0; k < kJointsPerFinger; ++k) {
        f.link_lengths[k] = lengths[k].get<double>();
        f.joint_limits[k] = JointLimit{limits[k].at(0).get<double>(), limits[k].at(1).get<double>()};
        f.joint_names[k] = jf.contains("joint_names") ? jf["joint_names"][k].get<std::string>()
                                                      : "j" + std::to_string(k);
      }
      fingers.push_back(std::move(f));
    }
    return HandTopology(std::move(fingers), root);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("topology: ") + e.what());
  }
}

inline HandTopology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open topology file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("topology " + path + ": " + e.what());
  }
  return topology_from_json(j);
}

inline void save_topology(const HandTopology& topology, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write topology file: " + path);
  out << topology_to_json(topology).dump(2) << "\n";
}

}  // namespace handmimic

#endif  // HANDMIMIC_HAND_MODEL_HPP_
