#pragma once

#include "trimodal/core_types.hpp"

namespace trimodal {

enum Joint : int {
  kLeftHip = 1, kRightHip = 2, kSpine1 = 3, kLeftKnee = 4, kRightKnee = 5, kSpine2 = 6,
  kLeftAnkle = 7, kRightAnkle = 8, kSpine3 = 9, kLeftFoot = 10, kRightFoot = 11, kNeck = 12,
  kLeftCollar = 13, kRightCollar = 14, kHead = 15, kLeftShoulder = 16, kRightShoulder = 17,
  kLeftElbow = 18, kRightElbow = 19, kLeftWrist = 20, kRightWrist = 21
};

inline constexpr float kStandingPelvisHeight = 0.95f;

// Procedural body state for one frame. Angles in radians, lengths in meters.
struct PoseParams {
  Vec3f pelvis = Vec3f(0, kStandingPelvisHeight, 0);
  float heading = 0;         // facing direction in the floor plane, atan2(z, x)
  float gait_phase = 0;
  float gait_amplitude = 0;  // 0 when standing still
  float sit = 0;             // 0 standing legs, 1 thighs horizontal
  float pitch = 0;           // whole-upper-body lean; pi/2 with lie=1 is flat
  float lie = 0;             // 1 rotates the legs with the torso
  float reach = 0;           // right arm extension toward reach_target
  float both_arms = 0;       // left arm joins the reach
  Vec3f reach_target = Vec3f::Zero();
};

// Writes the 22 joint positions of `pose` into frame `frame` of `out`.
void pose_skeleton(const PoseParams& pose, MotionSequence& out, int frame);

}  // namespace trimodal
