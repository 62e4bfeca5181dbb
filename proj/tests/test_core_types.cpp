#include <gtest/gtest.h>

#include "test_support.hpp"
#include "trimodal/core_types.hpp"
#include "trimodal/error.hpp"

using namespace trimodal;

TEST(Box, ContainsAndOverlap) {
  const Box a{{0, 0, 0}, {1, 1, 1}};
  EXPECT_TRUE(a.contains(Vec3f(0.5f, 0.5f, 0.5f)));
  EXPECT_TRUE(a.contains(Vec3f(1, 1, 1)));
  EXPECT_FALSE(a.contains(Vec3f(1.01f, 0.5f, 0.5f)));
  EXPECT_TRUE(a.overlaps(Box{{0.9f, 0.9f, 0.9f}, {2, 2, 2}}));
  // touching faces do not overlap
  EXPECT_FALSE(a.overlaps(Box{{1, 0, 0}, {2, 1, 1}}));
  EXPECT_TRUE(a.inflated(0.1f).contains(Vec3f(1.05f, 0.5f, 0.5f)));
}

TEST(MotionSequence, JointLayoutIsFrameMajor) {
  MotionSequence m(2);
  m.set_joint(1, 3, Vec3d(1, 2, 3));
  EXPECT_EQ(m.data()[(1 * kNumJoints + 3) * 3 + 1], 2.0);
  EXPECT_EQ(m.joint(1, 3), Vec3d(1, 2, 3));
  EXPECT_EQ(m.frame_data(1).size(), 66u);
  EXPECT_THROW(MotionSequence(2, std::vector<double>(10)), FormatError);
  EXPECT_EQ(MotionSequence::joint_names()[kPelvis], "pelvis");
}

TEST(Names, RoundTrip) {
  for (Source s : kAllSources) EXPECT_EQ(parse_source(source_name(s)), s);
  for (int i = 0; i < kNumActions; ++i) {
    const auto a = static_cast<Action>(i);
    EXPECT_EQ(parse_action(action_name(a)), a);
  }
  EXPECT_THROW((void)parse_source("x"), ConfigError);
}

TEST(ValidateSample, GeneratedSamplesAreValid) {
  for (const auto& s : fixtures::tiny_samples(6)) EXPECT_TRUE(validate_sample(s).empty()) << s.id;
}

TEST(ValidateSample, ReportsViolations) {
  auto s = fixtures::tiny_samples(2).front();
  auto bad = s;
  bad.text.values.resize(10);
  EXPECT_FALSE(validate_sample(bad).empty());

  bad = s;
  std::vector<double> d = s.motion.data();
  d[0] = std::nan("");
  bad.motion = MotionSequence(s.motion.frame_count(), d);
  EXPECT_FALSE(validate_sample(bad).empty());

  bad = s;
  bad.motion = MotionSequence(s.motion.frame_count(), s.motion.data());
  for (int j = 0; j < kNumJoints; ++j) bad.motion.set_joint(0, j, Vec3d(-1.0, 1.0, 1.0 + 0.01 * j));
  bool outside = false;
  for (const auto& msg : validate_sample(bad)) outside = outside || msg == "joint outside room footprint";
  EXPECT_TRUE(outside);

  bad = s;
  bad.truth.target_index = 99;
  EXPECT_FALSE(validate_sample(bad).empty());

  bad = s;
  bad.scene.reset();
  EXPECT_FALSE(validate_sample(bad).empty());
}
