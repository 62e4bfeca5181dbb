#include "trimodal/skeleton.hpp"

#include <array>
#include <cmath>

#include <Eigen/Geometry>

namespace trimodal {

namespace {

// Local offsets from the pelvis: (forward, up, left).
struct Local {
  float f, u, l;
};

constexpr std::array<Local, kNumJoints> kStanding = {{
    {0.00f, 0.00f, 0.00f},    // pelvis
    {0.00f, -0.06f, 0.09f},   // left_hip
    {0.00f, -0.06f, -0.09f},  // right_hip
    {0.00f, 0.10f, 0.00f},    // spine1
    {0.02f, -0.48f, 0.09f},   // left_knee
    {0.02f, -0.48f, -0.09f},  // right_knee
    {0.00f, 0.22f, 0.00f},    // spine2
    {-0.02f, -0.87f, 0.09f},  // left_ankle
    {-0.02f, -0.87f, -0.09f}, // right_ankle
    {0.00f, 0.34f, 0.00f},    // spine3
    {0.10f, -0.92f, 0.09f},   // left_foot
    {0.10f, -0.92f, -0.09f},  // right_foot
    {0.00f, 0.50f, 0.00f},    // neck
    {0.00f, 0.46f, 0.07f},    // left_collar
    {0.00f, 0.46f, -0.07f},   // right_collar
    {0.02f, 0.62f, 0.00f},    // head
    {0.00f, 0.45f, 0.18f},    // left_shoulder
    {0.00f, 0.45f, -0.18f},   // right_shoulder
    {0.00f, 0.18f, 0.20f},    // left_elbow
    {0.00f, 0.18f, -0.20f},   // right_elbow
    {0.02f, -0.06f, 0.21f},   // left_wrist
    {0.02f, -0.06f, -0.21f},  // right_wrist
}};

// Leg joints with thighs horizontal.
constexpr std::array<std::pair<int, Local>, 6> kSeatedLegs = {{
    {kLeftKnee, {0.42f, -0.02f, 0.10f}},
    {kRightKnee, {0.42f, -0.02f, -0.10f}},
    {kLeftAnkle, {0.46f, -0.42f, 0.10f}},
    {kRightAnkle, {0.46f, -0.42f, -0.10f}},
    {kLeftFoot, {0.56f, -0.46f, 0.10f}},
    {kRightFoot, {0.56f, -0.46f, -0.10f}},
}};

bool is_leg(int j) {
  return j == kLeftHip || j == kRightHip || j == kLeftKnee || j == kRightKnee || j == kLeftAnkle ||
         j == kRightAnkle || j == kLeftFoot || j == kRightFoot;
}

Local lerp(const Local& a, const Local& b, float t) {
  return {a.f + (b.f - a.f) * t, a.u + (b.u - a.u) * t, a.l + (b.l - a.l) * t};
}

Local pitched(const Local& p, float angle) {
  const float c = std::cos(angle);
  const float s = std::sin(angle);
  return {p.f * c + p.u * s, -p.f * s + p.u * c, p.l};
}

}  // namespace

void pose_skeleton(const PoseParams& pose, MotionSequence& out, int frame) {
  std::array<Local, kNumJoints> local = kStanding;

  for (const auto& [j, seated] : kSeatedLegs) local[j] = lerp(local[j], seated, pose.sit);

  // Gait: legs swing in anti-phase, arms counter-swing.
  const float swing = pose.gait_amplitude * std::sin(pose.gait_phase);
  const float lift_l = pose.gait_amplitude * std::max(0.0f, std::sin(pose.gait_phase));
  const float lift_r = pose.gait_amplitude * std::max(0.0f, -std::sin(pose.gait_phase));
  local[kLeftKnee].f += 0.12f * swing;
  local[kRightKnee].f -= 0.12f * swing;
  local[kLeftAnkle].f += 0.20f * swing;
  local[kRightAnkle].f -= 0.20f * swing;
  local[kLeftFoot].f += 0.20f * swing;
  local[kRightFoot].f -= 0.20f * swing;
  local[kLeftAnkle].u += 0.08f * lift_l;
  local[kLeftFoot].u += 0.08f * lift_l;
  local[kRightAnkle].u += 0.08f * lift_r;
  local[kRightFoot].u += 0.08f * lift_r;
  local[kLeftElbow].f -= 0.06f * swing;
  local[kRightElbow].f += 0.06f * swing;
  local[kLeftWrist].f -= 0.14f * swing;
  local[kRightWrist].f += 0.14f * swing;

  for (int j = 1; j < kNumJoints; ++j) {
    if (!is_leg(j)) {
      local[j] = pitched(local[j], pose.pitch);
    } else if (pose.lie > 0.0f) {
      local[j] = pitched(local[j], pose.pitch * pose.lie);
    }
  }

  const Vec3f fwd(std::cos(pose.heading), 0.0f, std::sin(pose.heading));
  const Vec3f up(0.0f, 1.0f, 0.0f);
  const Vec3f left = up.cross(fwd);
  auto world = [&](const Local& p) -> Vec3f { return pose.pelvis + p.f * fwd + p.u * up + p.l * left; };

  std::array<Vec3f, kNumJoints> joints;
  for (int j = 0; j < kNumJoints; ++j) joints[j] = world(local[j]);

  // Arm reach: blend elbow and wrist toward points on the shoulder-target ray.
  auto reach_arm = [&](int shoulder, int elbow, int wrist, float amount) {
    if (amount <= 0.0f) return;
    Vec3f dir = pose.reach_target - joints[shoulder];
    const float dist = dir.norm();
    if (dist < 1e-6f) return;
    dir /= dist;
    const float arm = std::min(dist, 0.58f);
    const Vec3f e = joints[shoulder] + dir * (0.5f * arm);
    const Vec3f w = joints[shoulder] + dir * arm;
    joints[elbow] += amount * (e - joints[elbow]);
    joints[wrist] += amount * (w - joints[wrist]);
  };
  reach_arm(kRightShoulder, kRightElbow, kRightWrist, pose.reach);
  reach_arm(kLeftShoulder, kLeftElbow, kLeftWrist, pose.reach * pose.both_arms);

  for (int j = 0; j < kNumJoints; ++j) out.set_joint(frame, j, joints[j]);
}

}  // namespace trimodal
