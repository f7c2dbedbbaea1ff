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

#include "handmimic/motion.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

namespace handmimic {
namespace {

namespace fs = std::filesystem;

class MotionFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("handmimic_motion_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Write(const nlohmann::json& j) {
    const std::string path = (dir_ / "motion.json").string();
    std::ofstream(path) << j.dump();
    return path;
  }

  fs::path dir_;
  HandTopology hand_ = build_default_hand();
};

nlohmann::json Frames(const std::vector<std::vector<double>>& rows) {
  nlohmann::json j;
  j["version"] = 1;
  j["name"] = "fixture";
  j["fps"] = 30;
  j["frames"] = rows;
  return j;
}

TEST_F(MotionFileTest, ConstantTwoFrameMotion) {
  const ReferenceMotion m = load_motion(Write(Frames({std::vector<double>(15, 0.0),
                                                      std::vector<double>(15, 0.0)})));
  EXPECT_EQ(m.num_frames(), 2);
  EXPECT_TRUE(m.frames.isZero());
  EXPECT_TRUE(m.velocities.isZero());
  EXPECT_DOUBLE_EQ(m.duration(), 1.0 / 30.0);
}

TEST_F(MotionFileTest, LinearRampHasUnitInteriorVelocity) {
  std::vector<std::vector<double>> rows;
  for (int t = 0; t < 6; ++t) rows.emplace_back(15, 0.1 * t);
  nlohmann::json j = Frames(rows);
  j["fps"] = 10;
  const ReferenceMotion m = load_motion(Write(j));
  for (int t = 1; t < 5; ++t) {
    for (int c = 0; c < 15; ++c) EXPECT_NEAR(m.velocities(t, c), 1.0, 1e-12);
  }
  EXPECT_NEAR(m.velocities(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(m.velocities(5, 0), 1.0, 1e-12);
}

TEST_F(MotionFileTest, WrongJointCountIsDimensionError) {
  EXPECT_THROW(load_motion(Write(Frames({std::vector<double>(14, 0.0),
                                         std::vector<double>(14, 0.0)}))),
               DimensionError);
}

TEST_F(MotionFileTest, MalformedFileIsParseError) {
  const std::string path = (dir_ / "bad.json").string();
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_motion(path), ParseError);
  EXPECT_THROW(load_motion((dir_ / "missing.json").string()), ParseError);
  EXPECT_THROW(load_motion(Write(Frames({std::vector<double>(15, 0.0)}))), ParseError);
}

TEST_F(MotionFileTest, ImportClampsIntoLimits) {
  const ReferenceMotion m = load_motion(Write(Frames({std::vector<double>(15, -0.5),
                                                      std::vector<double>(15, 2.5)})));
  EXPECT_EQ(m.frames.minCoeff(), 0.0);
  EXPECT_EQ(m.frames.maxCoeff(), 2.0);
}

TEST_F(MotionFileTest, WriteThenLoadRoundTrips) {
  MotionSynthSpec spec;
  spec.seed = 11;
  const ReferenceMotion m = synth_motion(spec, hand_);
  const std::string path = (dir_ / "rt.json").string();
  write_motion(m, path, hand_);
  const ReferenceMotion back = load_motion(path, hand_);
  EXPECT_EQ(back.name, m.name);
  EXPECT_EQ(back.fps, m.fps);
  EXPECT_EQ(back.frames, m.frames);
}

TEST_F(MotionFileTest, JointOrderPermutesColumns) {
  auto names = hand_.joint_names();
  std::reverse(names.begin(), names.end());
  std::vector<double> row(15);
  for (int c = 0; c < 15; ++c) row[c] = 0.1 * c;
  nlohmann::json j = Frames({row, row});
  j["joint_order"] = names;
  const ReferenceMotion m = load_motion(Write(j), hand_);
  for (int c = 0; c < 15; ++c) EXPECT_DOUBLE_EQ(m.frames(0, 14 - c), 0.1 * c);
}

TEST(AxisAngle, KeepsOnlyComponentAlongJointAxis) {
  const HandTopology hand = build_default_hand();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Vec3> rotations(15);
  JointVector expected(15);
  for (int j = 0; j < 15; ++j) {
    // Build the rotation from its axis component plus two orthogonal ones.
    const Vec3 axis = hand.joint_axis(j);
    const Vec3 o1 = axis.unitOrthogonal();
    const Vec3 o2 = axis.cross(o1);
    expected[j] = 1.0 + u(rng);
    rotations[j] = expected[j] * axis + u(rng) * o1 + u(rng) * o2;
  }
  const JointVector q = reduce_axis_angle(hand, rotations);
  for (int j = 0; j < 15; ++j) EXPECT_NEAR(q[j], expected[j], 1e-12);
}

TEST(Sample, EndpointsWrapAndInterpolate) {
  const HandTopology hand = build_default_hand();
  Eigen::MatrixXd frames(2, 15);
  frames.row(0).setConstant(0.2);
  frames.row(1).setConstant(1.0);
  const ReferenceMotion m = make_motion("two", 30.0, frames, hand);

  MotionSample s = sample(m, 0.0);
  EXPECT_EQ(s.q, m.frame(0));
  EXPECT_EQ(s.phase.value, 0.0);

  s = sample(m, m.duration());
  EXPECT_NEAR((s.q - m.frame(0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(s.phase.value, 0.0, 1e-12);

  s = sample(m, m.duration() / 2);
  EXPECT_NEAR(s.q[3], 0.6, 1e-12);
  EXPECT_NEAR(s.phase.value, 0.5, 1e-12);
}

TEST(Sample, PeriodicAndPhaseIsLinear) {
  const HandTopology hand = build_default_hand();
  const ReferenceMotion m = synth_motion(MotionSynthSpec{}, hand);
  const double d = m.duration();
  for (double t : {0.0, 0.13, 0.77, 1.5, 1.98}) {
    const MotionSample a = sample(m, t);
    for (int k = 1; k <= 3; ++k) {
      const MotionSample b = sample(m, t + k * d);
      EXPECT_NEAR((a.q - b.q).norm(), 0.0, 1e-9);
      EXPECT_NEAR((a.qdot - b.qdot).norm(), 0.0, 1e-9);
      EXPECT_NEAR(a.phase.value, b.phase.value, 1e-9);
    }
    EXPECT_NEAR(sample(m, t + 0.01).phase.value - a.phase.value, 0.01 / d, 1e-9);
  }
}

TEST(Synth, HoldIsConstant) {
  MotionSynthSpec spec;
  spec.kind = SynthKind::kHold;
  spec.center = 1.0;
  const ReferenceMotion m = synth_motion(spec, build_default_hand());
  EXPECT_TRUE((m.frames.array() == 1.0).all());
  EXPECT_TRUE(m.velocities.isZero());
}

TEST(Synth, SinusoidRangeAndPeakVelocity) {
  MotionSynthSpec spec;
  spec.duration = 20.0;
  spec.fps = 240.0;
  const ReferenceMotion m = synth_motion(spec, build_default_hand());
  EXPECT_LE(m.frames.maxCoeff(), 1.5);
  EXPECT_GE(m.frames.minCoeff(), 0.5);
  EXPECT_NEAR(m.frames.maxCoeff(), 1.5, 1e-4);
  EXPECT_NEAR(m.frames.minCoeff(), 0.5, 1e-4);
  const double peak = 2.0 * std::numbers::pi * 0.5 * 0.5;
  EXPECT_LE(m.velocities.cwiseAbs().maxCoeff(), peak + 1e-12);
  EXPECT_NEAR(m.velocities.cwiseAbs().maxCoeff(), peak, 1e-3);
  EXPECT_NEAR(peak, 1.571, 1e-3);
}

TEST(Synth, AnalyticVelocitiesAgreeWithFiniteDifferences) {
  MotionSynthSpec spec;
  spec.fps = 600.0;
  const ReferenceMotion m = synth_motion(spec, build_default_hand());
  const Eigen::MatrixXd fd = finite_difference_velocities(m.frames, m.fps);
  EXPECT_LT((fd - m.velocities).middleRows(1, m.num_frames() - 2).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Synth, RampIsContinuousTriangleWave) {
  MotionSynthSpec spec;
  spec.kind = SynthKind::kRamp;
  spec.fps = 300.0;
  const ReferenceMotion m = synth_motion(spec, build_default_hand());
  EXPECT_LE(m.frames.maxCoeff(), 1.5 + 1e-12);
  EXPECT_GE(m.frames.minCoeff(), 0.5 - 1e-12);
  const double slope = 4.0 * 0.5 * 0.5;
  for (int t = 1; t < m.num_frames(); ++t) {
    const double max_jump = (m.frames.row(t) - m.frames.row(t - 1)).cwiseAbs().maxCoeff();
    EXPECT_LE(max_jump, slope / m.fps + 1e-9);
  }
  EXPECT_NEAR(m.velocities.cwiseAbs().maxCoeff(), slope, 1e-12);
}

TEST(Synth, SameSeedSameMotion) {
  MotionSynthSpec spec;
  spec.seed = 99;
  const HandTopology hand = build_default_hand();
  EXPECT_EQ(synth_motion(spec, hand).frames, synth_motion(spec, hand).frames);
  MotionSynthSpec other = spec;
  other.seed = 100;
  EXPECT_NE(synth_motion(spec, hand).frames, synth_motion(other, hand).frames);
}

TEST(Synth, RejectsSpecsLeavingLimits) {
  MotionSynthSpec spec;
  spec.amplitude = 1.2;
  EXPECT_THROW(synth_motion(spec, build_default_hand()), InvalidSpec);
  EXPECT_THROW(synth_kind_from_string("spiral"), InvalidSpec);
  EXPECT_EQ(synth_kind_from_string("ramp"), SynthKind::kRamp);
}

TEST(Convert, FlatPoseExportReducesByProjection) {
  const HandTopology hand = build_default_hand();
  const auto mano = mano_joint_order();
  const auto names = hand.joint_names();
  nlohmann::json exported;
  exported["fps"] = 25;
  exported["frames"] = nlohmann::json::array();
  JointVector expected(15);
  for (int t = 0; t < 3; ++t) {
    std::vector<double> flat;
    for (int c = 0; c < 15; ++c) {
      const int j = static_cast<int>(std::find(names.begin(), names.end(), mano[c]) - names.begin());
      const Vec3 axis = hand.joint_axis(j);
      const double angle = 0.3 + 0.05 * c + 0.1 * t;
      const Vec3 r = angle * axis + 0.2 * axis.unitOrthogonal();
      flat.insert(flat.end(), {r.x(), r.y(), r.z()});
      if (t == 2) expected[j] = angle;
    }
    exported["frames"].push_back({{"hand_pose", flat}});
  }
  const ReferenceMotion m = convert_pose_export(exported, hand);
  EXPECT_EQ(m.fps, 25.0);
  EXPECT_EQ(m.num_frames(), 3);
  for (int j = 0; j < 15; ++j) EXPECT_NEAR(m.frames(2, j), expected[j], 1e-12);
}

TEST(Convert, ReducedMotionPassesThrough) {
  const HandTopology hand = build_default_hand();
  const ReferenceMotion m = synth_motion(MotionSynthSpec{}, hand);
  const ReferenceMotion back = convert_pose_export(motion_to_json(m, hand), hand);
  EXPECT_EQ(back.frames, m.frames);
}

TEST(Convert, WrongJointCountThrows) {
  nlohmann::json exported;
  exported["frames"] = {std::vector<double>(42, 0.0), std::vector<double>(42, 0.0)};
  EXPECT_THROW(convert_pose_export(exported, build_default_hand()), DimensionError);
}

}  // namespace
}  // namespace handmimic
