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

#ifndef HANDMIMIC_MOTION_HPP_
#define HANDMIMIC_MOTION_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "handmimic/errors.hpp"
#include "handmimic/hand_model.hpp"

namespace handmimic {

inline constexpr int kMotionFormatVersion = 1;

// Looping reference trajectory in joint space. Rows of `frames` and
// `velocities` are time samples spaced 1/fps apart.
struct ReferenceMotion {
  std::string name;
  double fps = 30.0;
  Eigen::MatrixXd frames;      // T x J, rad
  Eigen::MatrixXd velocities;  // T x J, rad/s

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int num_joints() const { return static_cast<int>(frames.cols()); }
  double duration() const { return (num_frames() - 1) / fps; }
  JointVector frame(int t) const { return frames.row(t).transpose(); }
};

struct Phase {
  double value = 0.0;
};

struct MotionSample {
  JointVector q;
  JointVector qdot;
  Phase phase;
};

// Central differences in the interior, one-sided at the two ends.
inline Eigen::MatrixXd finite_difference_velocities(const Eigen::MatrixXd& frames, double fps) {
  const Eigen::Index T = frames.rows();
  Eigen::MatrixXd vel(T, frames.cols());
  if (T < 2) return Eigen::MatrixXd::Zero(T, frames.cols());
  vel.row(0) = (frames.row(1) - frames.row(0)) * fps;
  vel.row(T - 1) = (frames.row(T - 1) - frames.row(T - 2)) * fps;
  for (Eigen::Index t = 1; t + 1 < T; ++t) {
    vel.row(t) = (frames.row(t + 1) - frames.row(t - 1)) * (0.5 * fps);
  }
  return vel;
}

// Clamps every frame into the joint limits and derives velocities.
inline ReferenceMotion make_motion(std::string name, double fps, Eigen::MatrixXd frames,
                                   const HandTopology& topology) {
  if (frames.cols() != topology.num_joints()) {
    throw DimensionError("motion has " + std::to_string(frames.cols()) + " joints, expected " +
                         std::to_string(topology.num_joints()));
  }
  if (frames.rows() < 2) throw ParseError("motion needs at least 2 frames");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw ParseError("motion fps must be positive");
  if (!frames.allFinite()) throw ParseError("motion frames must be finite");
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    frames.row(t) = clamp_to_limits(topology, frames.row(t).transpose()).transpose();
  }
  ReferenceMotion m;
  m.name = std::move(name);
  m.fps = fps;
  m.velocities = finite_difference_velocities(frames, fps);
  m.frames = std::move(frames);
  return m;
}

// Keeps only the component of each joint's axis-angle vector along the
// model joint axis (signed projection).
inline JointVector reduce_axis_angle(const HandTopology& topology, const std::vector<Vec3>& rotations) {
  if (static_cast<int>(rotations.size()) != topology.num_joints()) {
    throw DimensionError("axis-angle frame has " + std::to_string(rotations.size()) +
                         " joints, expected " + std::to_string(topology.num_joints()));
  }
  JointVector q(topology.num_joints());
  for (int j = 0; j < topology.num_joints(); ++j) q[j] = rotations[j].dot(topology.joint_axis(j));
  return q;
}

// Linear interpolation on the looping motion; phase = (t mod duration) / duration.
inline MotionSample sample(const ReferenceMotion& motion, double t) {
  const double duration = motion.duration();
  double local = std::fmod(t, duration);
  if (local < 0.0) local += duration;
  const double pos = local * motion.fps;
  int i = static_cast<int>(std::floor(pos));
  i = std::clamp(i, 0, motion.num_frames() - 2);
  const double alpha = std::clamp(pos - i, 0.0, 1.0);
  MotionSample s;
  s.q = ((1.0 - alpha) * motion.frames.row(i) + alpha * motion.frames.row(i + 1)).transpose();
  s.qdot = ((1.0 - alpha) * motion.velocities.row(i) + alpha * motion.velocities.row(i + 1)).transpose();
  s.phase.value = std::clamp(local / duration, 0.0, 1.0);
  return s;
}

// ---------- synthetic motions ----------

enum class SynthKind { kHold, kRamp, kSinusoid };

inline SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "hold") return SynthKind::kHold;
  if (s == "ramp") return SynthKind::kRamp;
  if (s == "sinusoid") return SynthKind::kSinusoid;
  throw InvalidSpec("unknown motion kind '" + s + "' (expected hold|ramp|sinusoid)");
}

inline std::string to_string(SynthKind k) {
  switch (k) {
    case SynthKind::kHold: return "hold";
    case SynthKind::kRamp: return "ramp";
    default: return "sinusoid";
  }
}

// hold:     q_j(t) = center
// ramp:     q_j(t) = center + amplitude * tri(f t + psi_j / 2pi), a triangle
//           wave: linear rise then linear fall, so the loop is continuous
// sinusoid: q_j(t) = center + amplitude * sin(2 pi f t + psi_j)
// psi_j is drawn uniformly from [0, 2pi) with `seed`; velocities are exact.
struct MotionSynthSpec {
  SynthKind kind = SynthKind::kSinusoid;
  double amplitude = 0.5;
  double center = 1.0;
  double frequency = 0.5;  // Hz
  double duration = 2.0;   // s
  double fps = 30.0;
  std::uint64_t seed = 0;
  std::string name;
};

inline ReferenceMotion synth_motion(const MotionSynthSpec& spec, const HandTopology& topology) {
  if (!(spec.fps > 0.0) || !(spec.duration > 0.0)) {
    throw InvalidSpec("synth_motion: fps and duration must be positive");
  }
  const double a = spec.kind == SynthKind::kHold ? 0.0 : spec.amplitude;
  if (a < 0.0 || (spec.kind != SynthKind::kHold && !(spec.frequency > 0.0))) {
    throw InvalidSpec("synth_motion: amplitude must be >= 0 and frequency > 0");
  }
  const int n = topology.num_joints();
  for (int j = 0; j < n; ++j) {
    const JointLimit& lim = topology.limit(j);
    if (spec.center - a < lim.lo - 1e-12 || spec.center + a > lim.hi + 1e-12) {
      throw InvalidSpec("synth_motion: center +/- amplitude leaves the joint limits");
    }
  }
  const int frames_count = static_cast<int>(std::lround(spec.duration * spec.fps)) + 1;
  if (frames_count < 2) throw InvalidSpec("synth_motion: duration too short for fps");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  JointVector psi(n);
  for (int j = 0; j < n; ++j) psi[j] = uniform(rng);

  ReferenceMotion m;
  m.name = spec.name.empty() ? to_string(spec.kind) : spec.name;
  m.fps = spec.fps;
  m.frames.resize(frames_count, n);
  m.velocities.resize(frames_count, n);
  const double w = 2.0 * std::numbers::pi * spec.frequency;
  for (int t = 0; t < frames_count; ++t) {
    const double time = t / spec.fps;
    for (int j = 0; j < n; ++j) {
      double q = spec.center;
      double v = 0.0;
      if (spec.kind == SynthKind::kSinusoid) {
        q += a * std::sin(w * time + psi[j]);
        v = a * w * std::cos(w * time + psi[j]);
      } else if (spec.kind == SynthKind::kRamp) {
        double cycle = spec.frequency * time + psi[j] / (2.0 * std::numbers::pi);
        cycle -= std::floor(cycle);
        const bool rising = cycle < 0.5;
        q += a * (rising ? 4.0 * cycle - 1.0 : 3.0 - 4.0 * cycle);
        v = a * 4.0 * spec.frequency * (rising ? 1.0 : -1.0);
      }
      m.frames(t, j) = std::clamp(q, topology.limit(j).lo, topology.limit(j).hi);
      m.velocities(t, j) = v;
    }
  }
  return m;
}

// ---------- motion files ----------
//
// {
//   "version": 1,
//   "name": "letter_A",
//   "fps": 30,
//   "joint_order": ["thumb_cmc", ..., "pinky_dip"],
//   "frames": [[q_0 ... q_14], ...]            (reduced angles, rad)
//          or [[[x,y,z] x 15], ...]             (axis-angle per joint)
// }
//
// joint_order is optional; when present it may be any permutation of the
// model's joint names and frames are reordered accordingly.

inline ReferenceMotion motion_from_json(const nlohmann::json& j, const HandTopology& topology) {
  try {
    const int version = j.value("version", kMotionFormatVersion);
    if (version != kMotionFormatVersion) throw ParseError("unsupported motion version");
    const std::string name = j.value("name", std::string("motion"));
    const double fps = j.at("fps").get<double>();
    const auto& jframes = j.at("frames");
    if (!jframes.is_array()) throw ParseError("'frames' must be an array");
    const int n = topology.num_joints();

    // Column permutation: file column c holds model joint perm[c].
    std::vector<int> perm(n);
    for (int c = 0; c < n; ++c) perm[c] = c;
    if (j.contains("joint_order")) {
      const auto names = j["joint_order"].get<std::vector<std::string>>();
      if (static_cast<int>(names.size()) != n) {
        throw DimensionError("joint_order lists " + std::to_string(names.size()) +
                             " joints, expected " + std::to_string(n));
      }
      const auto model_names = topology.joint_names();
      std::vector<bool> seen(n, false);
      for (int c = 0; c < n; ++c) {
        auto it = std::find(model_names.begin(), model_names.end(), names[c]);
        if (it == model_names.end()) throw ParseError("unknown joint '" + names[c] + "'");
        perm[c] = static_cast<int>(it - model_names.begin());
        if (seen[perm[c]]) throw ParseError("duplicate joint '" + names[c] + "'");
        seen[perm[c]] = true;
      }
    }

    Eigen::MatrixXd frames(jframes.size(), n);
    for (std::size_t t = 0; t < jframes.size(); ++t) {
      const auto& row = jframes[t];
      if (!row.is_array() || static_cast<int>(row.size()) != n) {
        throw DimensionError("frame " + std::to_string(t) + " has " +
                             std::to_string(row.is_array() ? row.size() : 0) + " joints, expected " +
                             std::to_string(n));
      }
      JointVector file_order(n);
      if (row[0].is_array()) {
        std::vector<Vec3> rotations(n);
        for (int c = 0; c < n; ++c) rotations[perm[c]] = detail::Vec3FromJson(row[c], "axis-angle");
        frames.row(t) = reduce_axis_angle(topology, rotations).transpose();
      } else {
        for (int c = 0; c < n; ++c) frames(t, perm[c]) = row[c].get<double>();
      }
    }
    return make_motion(name, fps, std::move(frames), topology);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("motion: ") + e.what());
  }
}

inline nlohmann::json motion_to_json(const ReferenceMotion& motion, const HandTopology& topology) {
  nlohmann::json j;
  j["version"] = kMotionFormatVersion;
  j["name"] = motion.name;
  j["fps"] = motion.fps;
  j["joint_order"] = topology.joint_names();
  j["frames"] = nlohmann::json::array();
  for (int t = 0; t < motion.num_frames(); ++t) {
    std::vector<double> row(motion.num_joints());
    for (int c = 0; c < motion.num_joints(); ++c) row[c] = motion.frames(t, c);
    j["frames"].push_back(row);
  }
  return j;
}

inline ReferenceMotion load_motion(const std::string& path,
                                   const HandTopology& topology = build_default_hand()) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open motion file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("motion " + path + ": " + e.what());
  }
  return motion_from_json(j, topology);
}

inline void write_motion(const ReferenceMotion& motion, const std::string& path,
                         const HandTopology& topology = build_default_hand()) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write motion file: " + path);
  out << motion_to_json(motion, topology).dump() << "\n";
}

// ---------- third-party pose exports ----------
//
// Per-frame hand pose lists as produced by monocular hand-mesh regressors:
// {"fps": 30, "joint_order": [...15 names...] (optional, MANO order by
//  default), "frames": [{"hand_pose": [45 numbers]} | [45 numbers] |
//  [[x,y,z] x 15], ...]}

// MANO ordering of the 15 finger joints, mapped to model joint names.
inline std::vector<std::string> mano_joint_order() {
  return {"index_mcp",  "index_pip",  "index_dip",  "middle_mcp", "middle_pip",
          "middle_dip", "pinky_mcp",  "pinky_pip",  "pinky_dip",  "ring_mcp",
          "ring_pip",   "ring_dip",   "thumb_cmc",  "thumb_mcp",  "thumb_ip"};
}

inline ReferenceMotion convert_pose_export(const nlohmann::json& j, const HandTopology& topology) {
  try {
    // Already a motion file: pass through.
    if (j.contains("version") && j.contains("frames") && !j.contains("source")) {
      return motion_from_json(j, topology);
    }
    nlohmann::json motion;
    motion["version"] = kMotionFormatVersion;
    motion["name"] = j.value("name", std::string("converted"));
    motion["fps"] = j.value("fps", 30.0);
    motion["joint_order"] = j.contains("joint_order") ? j["joint_order"] : nlohmann::json(mano_joint_order());
    motion["frames"] = nlohmann::json::array();
    for (const auto& frame : j.at("frames")) {
      const auto& pose = frame.is_object() ? frame.at("hand_pose") : frame;
      nlohmann::json triples = nlohmann::json::array();
      if (!pose.empty() && pose[0].is_number()) {
        if (pose.size() % 3 != 0) throw DimensionError("flat hand_pose length must be a multiple of 3");
        for (std::size_t k = 0; k < pose.size(); k += 3) {
          triples.push_back({pose[k], pose[k + 1], pose[k + 2]});
        }
      } else {
        triples = pose;
      }
      motion["frames"].push_back(triples);
    }
    return motion_from_json(motion, topology);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("pose export: ") + e.what());
  }
}

}  // namespace handmimic

#endif  // HANDMIMIC_MOTION_HPP_
