#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace trimodal {

using Vec3f = Eigen::Vector3f;
using Vec3d = Eigen::Vector3d;

inline constexpr int kNumJoints = 22;
inline constexpr int kPelvis = 0;
inline constexpr int kDefaultTextDim = 768;

// Axis-aligned box in meters, y is up.
struct Box {
  Vec3f min = Vec3f::Zero();
  Vec3f max = Vec3f::Zero();

  [[nodiscard]] Vec3f center() const { return 0.5f * (min + max); }
  [[nodiscard]] Vec3f half_extents() const { return 0.5f * (max - min); }
  [[nodiscard]] bool contains(const Vec3f& p) const;
  [[nodiscard]] bool contains(const Box& other) const;
  [[nodiscard]] bool overlaps(const Box& other) const;
  [[nodiscard]] Box inflated(float margin) const;
  [[nodiscard]] Box translated(const Vec3f& offset) const;
};

struct ObjectInstance {
  std::string label;
  Vec3f anchor = Vec3f::Zero();
  Vec3f half_extents = Vec3f::Zero();
  Vec3f color = Vec3f::Zero();

  [[nodiscard]] Box box() const { return {anchor - half_extents, anchor + half_extents}; }
};

// Ground truth behind a generated scene. Encoders never see this.
struct SceneGraphMeta {
  std::vector<ObjectInstance> objects;
  Box room_bounds;
  // Doorway the walking paths start from; a wall fixture, never a target.
  std::optional<ObjectInstance> entrance;
  // Object index owning each point of the cloud, -1 floor, -2 entrance.
  std::vector<std::int16_t> point_owner;
};

struct ColoredPoint {
  float x = 0, y = 0, z = 0;
  float r = 0, g = 0, b = 0;

  [[nodiscard]] Vec3f position() const { return {x, y, z}; }
};

struct ScenePointCloud {
  std::vector<ColoredPoint> points;
  std::optional<SceneGraphMeta> meta;

  [[nodiscard]] std::size_t point_count() const { return points.size(); }
};

// T x 22 x 3 joint positions, frame-major. Stored in double so rigid edits
// (rotations about the pivot) stay exact to ~1e-15; generated motions hold
// float-representable values and persist losslessly as 32-bit.
class MotionSequence {
 public:
  MotionSequence() = default;
  explicit MotionSequence(int frame_count);
  MotionSequence(int frame_count, std::vector<double> data);

  [[nodiscard]] int frame_count() const { return frames_; }
  [[nodiscard]] Vec3d joint(int frame, int joint) const;
  void set_joint(int frame, int joint, const Vec3d& p);
  void set_joint(int frame, int joint, const Vec3f& p) { set_joint(frame, joint, Vec3d(p.cast<double>())); }
  [[nodiscard]] Vec3d pelvis(int frame) const { return joint(frame, kPelvis); }
  [[nodiscard]] std::span<const double> frame_data(int frame) const;
  [[nodiscard]] const std::vector<double>& data() const { return data_; }

  static const std::array<std::string_view, kNumJoints>& joint_names();

 private:
  int frames_ = 0;
  std::vector<double> data_;
};

struct TextFeature {
  std::vector<float> values;
  std::string raw_caption;
};

enum class Source : std::uint8_t { T = 0, M = 1, S = 2, ST = 3, MT = 4, MS = 5 };
inline constexpr int kNumSources = 6;
inline constexpr std::array<Source, kNumSources> kAllSources = {Source::T,  Source::M,  Source::S,
                                                                Source::ST, Source::MT, Source::MS};

[[nodiscard]] std::string_view source_name(Source s);
[[nodiscard]] Source parse_source(std::string_view name);
[[nodiscard]] inline int source_index(Source s) { return static_cast<int>(s); }

struct LatentVector {
  std::vector<float> values;
  Source source = Source::T;
  std::string sample_id;
};

enum class Action : std::uint8_t { Sit = 0, Lie = 1, Reach = 2, StandUp = 3, PickUp = 4 };
inline constexpr int kNumActions = 5;

[[nodiscard]] std::string_view action_name(Action a);
[[nodiscard]] Action parse_action(std::string_view name);

struct GroundTruth {
  int target_index = 0;
  Action action = Action::Sit;
  std::vector<Vec3f> path;  // pelvis waypoints on the floor plane
};

// One aligned (text, motion, scene) event. Scenes are shared between the
// samples generated for the same room.
struct TrimodalSample {
  std::string id;
  std::uint64_t scene_seed = 0;
  TextFeature text;
  MotionSequence motion;
  std::shared_ptr<const ScenePointCloud> scene;
  GroundTruth truth;
};

struct ValidationLimits {
  int text_dim = kDefaultTextDim;
  float max_joint_span = 2.5f;
  float endpoint_tolerance = 0.5f;
};

// Lists every violated invariant; empty means the sample is valid.
[[nodiscard]] std::vector<std::string> validate_sample(const TrimodalSample& s,
                                                       const ValidationLimits& limits = {});

}  // namespace trimodal
