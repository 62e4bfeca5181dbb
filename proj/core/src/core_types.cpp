#include "trimodal/core_types.hpp"

#include <cmath>

#include "trimodal/error.hpp"

namespace trimodal {

bool Box::contains(const Vec3f& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

bool Box::contains(const Box& other) const { return contains(other.min) && contains(other.max); }

bool Box::overlaps(const Box& other) const {
  return (min.array() < other.max.array()).all() && (other.min.array() < max.array()).all();
}

Box Box::inflated(float margin) const {
  const Vec3f m = Vec3f::Constant(margin);
  return {min - m, max + m};
}

Box Box::translated(const Vec3f& offset) const { return {min + offset, max + offset}; }

MotionSequence::MotionSequence(int frame_count)
    : frames_(frame_count), data_(static_cast<std::size_t>(frame_count) * kNumJoints * 3, 0.0) {}

MotionSequence::MotionSequence(int frame_count, std::vector<double> data)
    : frames_(frame_count), data_(std::move(data)) {
  if (data_.size() != static_cast<std::size_t>(frame_count) * kNumJoints * 3) {
    throw FormatError("motion data size does not match frame count");
  }
}

Vec3d MotionSequence::joint(int frame, int joint) const {
  const auto i = (static_cast<std::size_t>(frame) * kNumJoints + joint) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void MotionSequence::set_joint(int frame, int joint, const Vec3d& p) {
  const auto i = (static_cast<std::size_t>(frame) * kNumJoints + joint) * 3;
  data_[i] = p.x();
  data_[i + 1] = p.y();
  data_[i + 2] = p.z();
}

std::span<const double> MotionSequence::frame_data(int frame) const {
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(frame) * kNumJoints * 3,
                                               kNumJoints * 3);
}

const std::array<std::string_view, kNumJoints>& MotionSequence::joint_names() {
  static constexpr std::array<std::string_view, kNumJoints> names = {
      "pelvis",         "left_hip",       "right_hip",   "spine1",      "left_knee",
      "right_knee",     "spine2",         "left_ankle",  "right_ankle", "spine3",
      "left_foot",      "right_foot",     "neck",        "left_collar", "right_collar",
      "head",           "left_shoulder",  "right_shoulder", "left_elbow", "right_elbow",
      "left_wrist",     "right_wrist"};
  return names;
}

std::string_view source_name(Source s) {
  switch (s) {
    case Source::T: return "t";
    case Source::M: return "m";
    case Source::S: return "s";
    case Source::ST: return "st";
    case Source::MT: return "mt";
    case Source::MS: return "ms";
  }
  return "?";
}

Source parse_source(std::string_view name) {
  for (Source s : kAllSources) {
    if (source_name(s) == name) return s;
  }
  throw ConfigError("unknown latent source '" + std::string(name) + "'");
}

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Sit: return "sit";
    case Action::Lie: return "lie";
    case Action::Reach: return "reach";
    case Action::StandUp: return "stand up";
    case Action::PickUp: return "pick up";
  }
  return "?";
}

Action parse_action(std::string_view name) {
  for (int i = 0; i < kNumActions; ++i) {
    const auto a = static_cast<Action>(i);
    if (action_name(a) == name) return a;
  }
  throw FormatError("unknown action '" + std::string(name) + "'");
}

namespace {

template <typename T>
bool finite(std::span<const T> xs) {
  for (T x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> validate_sample(const TrimodalSample& s, const ValidationLimits& limits) {
  std::vector<std::string> report;

  if (static_cast<int>(s.text.values.size()) != limits.text_dim) {
    report.emplace_back("text length mismatch");
  }
  if (!finite(std::span<const float>(s.text.values))) report.emplace_back("non-finite text");

  const MotionSequence& m = s.motion;
  if (m.frame_count() < 2) report.emplace_back("motion shorter than 2 frames");
  if (!finite(std::span<const double>(m.data()))) {
    report.emplace_back("non-finite motion");
  } else {
    double worst = 0.0;
    for (int f = 0; f < m.frame_count(); ++f) {
      for (int a = 0; a < kNumJoints; ++a) {
        for (int b = a + 1; b < kNumJoints; ++b) {
          worst = std::max(worst, (m.joint(f, a) - m.joint(f, b)).norm());
        }
      }
    }
    if (worst > limits.max_joint_span) report.emplace_back("joint span exceeds bound");
  }

  if (!s.scene) {
    report.emplace_back("missing scene");
    return report;
  }
  const ScenePointCloud& scene = *s.scene;
  if (scene.points.empty()) report.emplace_back("empty point cloud");
  bool colors_ok = true;
  bool coords_finite = true;
  for (const auto& p : scene.points) {
    for (float c : {p.r, p.g, p.b}) colors_ok = colors_ok && c >= 0.0f && c <= 1.0f;
    for (float c : {p.x, p.y, p.z}) coords_finite = coords_finite && std::isfinite(c);
  }
  if (!colors_ok) report.emplace_back("point color outside [0,1]");
  if (!coords_finite) report.emplace_back("non-finite point");

  if (!scene.meta) {
    report.emplace_back("missing scene metadata");
    return report;
  }
  const SceneGraphMeta& meta = *scene.meta;
  const Box room = meta.room_bounds.inflated(1e-4f);
  for (const auto& p : scene.points) {
    if (!room.contains(p.position())) {
      report.emplace_back("point outside room bounds");
      break;
    }
  }
  for (const auto& obj : meta.objects) {
    if (!room.contains(obj.box())) report.emplace_back("object '" + obj.label + "' outside room");
    if (!obj.box().contains(obj.anchor)) report.emplace_back("anchor outside object box");
  }
  if (meta.entrance && !room.contains(meta.entrance->box())) report.emplace_back("entrance outside room");
  if (!meta.point_owner.empty() && meta.point_owner.size() != scene.points.size()) {
    report.emplace_back("point owner table size mismatch");
  }

  if (m.frame_count() >= 1 && finite(std::span<const double>(m.data()))) {
    const Box& b = meta.room_bounds;
    bool inside = true;
    for (int f = 0; f < m.frame_count() && inside; ++f) {
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3d q = m.joint(f, j);
        if (q.x() < b.min.x() || q.z() < b.min.z() || q.x() > b.max.x() || q.z() > b.max.z()) {
          inside = false;
          break;
        }
      }
    }
    if (!inside) report.emplace_back("joint outside room footprint");
  }

  const int target = s.truth.target_index;
  if (target < 0 || target >= static_cast<int>(meta.objects.size())) {
    report.emplace_back("target index out of range");
  } else if (m.frame_count() >= 2 && finite(std::span<const double>(m.data()))) {
    const Vec3d end = m.pelvis(m.frame_count() - 1);
    const Vec3d anchor = meta.objects[target].anchor.cast<double>();
    const double dx = end.x() - anchor.x();
    const double dz = end.z() - anchor.z();
    if (std::sqrt(dx * dx + dz * dz) > limits.endpoint_tolerance) {
      report.emplace_back("motion endpoint far from target");
    }
  }
  return report;
}

}  // namespace trimodal
