#include "trimodal/synthgen.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "trimodal/error.hpp"
#include "trimodal/random.hpp"
#include "trimodal/skeleton.hpp"

namespace trimodal {

namespace {

constexpr float kPi = std::numbers::pi_v<float>;
constexpr float kGridCell = 0.1f;
constexpr float kWallClearance = 0.35f;
constexpr float kReachStandoff = 0.25f;
constexpr float kStrideLength = 1.3f;
constexpr std::int16_t kFloorOwner = -1;
constexpr std::int16_t kEntranceOwner = -2;

float clamp01(float x) { return std::clamp(x, 0.0f, 1.0f); }

float smoothstep(float u) {
  u = clamp01(u);
  return u * u * (3.0f - 2.0f * u);
}

float wrap_angle(float a) {
  while (a > kPi) a -= 2.0f * kPi;
  while (a < -kPi) a += 2.0f * kPi;
  return a;
}

// Horizontal (x, z) overlap test.
bool overlaps_xz(const Box& a, const Box& b) {
  return a.min.x() < b.max.x() && b.min.x() < a.max.x() && a.min.z() < b.max.z() &&
         b.min.z() < a.max.z();
}

bool inside_xz(const Box& b, float x, float z) {
  return x >= b.min.x() && x <= b.max.x() && z >= b.min.z() && z <= b.max.z();
}

Vec3f jitter_color(const Vec3f& base, Rng& rng, float amount) {
  Vec3f c;
  for (int i = 0; i < 3; ++i) c[i] = clamp01(base[i] + static_cast<float>(rng.uniform(-amount, amount)));
  return c;
}

void sample_box_surface(const ObjectInstance& obj, int count, std::int16_t owner, Rng& rng,
                        ScenePointCloud& cloud) {
  const Vec3f h = obj.half_extents;
  // five faces: top, +x, -x, +z, -z (the bottom rests on the floor)
  const std::array<float, 5> areas = {4 * h.x() * h.z(), 4 * h.y() * h.z(), 4 * h.y() * h.z(),
                                      4 * h.x() * h.y(), 4 * h.x() * h.y()};
  float total = 0;
  for (float a : areas) total += a;
  for (int i = 0; i < count; ++i) {
    float pick = static_cast<float>(rng.uniform()) * total;
    int face = 0;
    while (face < 4 && pick > areas[face]) {
      pick -= areas[face];
      ++face;
    }
    const float u = static_cast<float>(rng.uniform(-1.0, 1.0));
    const float v = static_cast<float>(rng.uniform(-1.0, 1.0));
    Vec3f local;
    switch (face) {
      case 0: local = {u * h.x(), h.y(), v * h.z()}; break;
      case 1: local = {h.x(), u * h.y(), v * h.z()}; break;
      case 2: local = {-h.x(), u * h.y(), v * h.z()}; break;
      case 3: local = {u * h.x(), v * h.y(), h.z()}; break;
      default: local = {u * h.x(), v * h.y(), -h.z()}; break;
    }
    const Vec3f p = obj.anchor + local;
    const Vec3f c = jitter_color(obj.color, rng, 0.04f);
    cloud.points.push_back({p.x(), p.y(), p.z(), c.x(), c.y(), c.z()});
    cloud.meta->point_owner.push_back(owner);
  }
}

struct Entrance {
  ObjectInstance fixture;
  Box keepout;
  Vec3f inward;  // unit normal pointing into the room
};

Entrance make_entrance(const GeneratorConfig& cfg, Rng& rng) {
  const int wall = static_cast<int>(rng.below(4));
  const bool along_x = wall < 2;
  const float span = along_x ? cfg.room_width : cfg.room_depth;
  const float u = static_cast<float>(rng.uniform(1.0, span - 1.0));
  constexpr float half_width = 0.45f;
  constexpr float half_height = 1.0f;
  constexpr float half_thick = 0.03f;
  constexpr float keep_depth = 1.5f;
  constexpr float keep_side = half_width + 0.5f;

  Entrance e;
  e.fixture.label = "door";
  e.fixture.color = Vec3f(0.45f, 0.30f, 0.15f);
  const float h = cfg.room_height;
  switch (wall) {
    case 0:
      e.fixture.anchor = {u, half_height, half_thick};
      e.fixture.half_extents = {half_width, half_height, half_thick};
      e.keepout = {{u - keep_side, 0, 0}, {u + keep_side, h, keep_depth}};
      e.inward = {0, 0, 1};
      break;
    case 1:
      e.fixture.anchor = {u, half_height, cfg.room_depth - half_thick};
      e.fixture.half_extents = {half_width, half_height, half_thick};
      e.keepout = {{u - keep_side, 0, cfg.room_depth - keep_depth}, {u + keep_side, h, cfg.room_depth}};
      e.inward = {0, 0, -1};
      break;
    case 2:
      e.fixture.anchor = {half_thick, half_height, u};
      e.fixture.half_extents = {half_thick, half_height, half_width};
      e.keepout = {{0, 0, u - keep_side}, {keep_depth, h, u + keep_side}};
      e.inward = {1, 0, 0};
      break;
    default:
      e.fixture.anchor = {cfg.room_width - half_thick, half_height, u};
      e.fixture.half_extents = {half_thick, half_height, half_width};
      e.keepout = {{cfg.room_width - keep_depth, 0, u - keep_side}, {cfg.room_width, h, u + keep_side}};
      e.inward = {-1, 0, 0};
      break;
  }
  return e;
}

// Free-space predicate for the pelvis on the floor plane.
class WalkableArea {
 public:
  WalkableArea(const GeneratorConfig& cfg, const SceneGraphMeta& meta, int target)
      : width_(cfg.room_width), depth_(cfg.room_depth) {
    for (int i = 0; i < static_cast<int>(meta.objects.size()); ++i) {
      if (i != target) blocked_.push_back(meta.objects[i].box().inflated(cfg.body_clearance));
    }
    if (meta.entrance) blocked_.push_back(meta.entrance->box().inflated(cfg.body_clearance));
  }

  [[nodiscard]] bool free(float x, float z) const {
    if (x < kWallClearance || z < kWallClearance || x > width_ - kWallClearance ||
        z > depth_ - kWallClearance) {
      return false;
    }
    for (const Box& b : blocked_) {
      if (inside_xz(b, x, z)) return false;
    }
    return true;
  }

  [[nodiscard]] bool segment_free(const Vec3f& a, const Vec3f& b) const {
    const float len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.025f)));
    for (int i = 0; i <= steps; ++i) {
      const Vec3f p = a + (b - a) * (static_cast<float>(i) / steps);
      if (!free(p.x(), p.z())) return false;
    }
    return true;
  }

  [[nodiscard]] float width() const { return width_; }
  [[nodiscard]] float depth() const { return depth_; }

 private:
  float width_;
  float depth_;
  std::vector<Box> blocked_;
};

// 8-connected Dijkstra on a 10 cm grid, then string-pulled into straight
// segments. The goal cell may lie inside the (unblocked) target box.
std::vector<Vec3f> plan_path(const WalkableArea& area, const Vec3f& start, const Vec3f& goal) {
  const int nx = static_cast<int>(std::ceil(area.width() / kGridCell));
  const int nz = static_cast<int>(std::ceil(area.depth() / kGridCell));
  auto cell_of = [&](const Vec3f& p) {
    const int i = std::clamp(static_cast<int>(p.x() / kGridCell), 0, nx - 1);
    const int k = std::clamp(static_cast<int>(p.z() / kGridCell), 0, nz - 1);
    return k * nx + i;
  };
  auto center = [&](int c) {
    return Vec3f((static_cast<float>(c % nx) + 0.5f) * kGridCell, 0.0f,
                 (static_cast<float>(c / nx) + 0.5f) * kGridCell);
  };
  std::vector<char> open(static_cast<std::size_t>(nx * nz));
  for (int c = 0; c < nx * nz; ++c) {
    const Vec3f p = center(c);
    open[c] = area.free(p.x(), p.z()) ? 1 : 0;
  }
  const int s = cell_of(start);
  const int g = cell_of(goal);
  open[s] = 1;
  open[g] = 1;

  std::vector<double> dist(open.size(), std::numeric_limits<double>::infinity());
  std::vector<int> prev(open.size(), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[s] = 0;
  queue.emplace(0.0, s);
  while (!queue.empty()) {
    const auto [d, c] = queue.top();
    queue.pop();
    if (d > dist[c]) continue;
    if (c == g) break;
    const int ci = c % nx;
    const int ck = c / nx;
    for (int dk = -1; dk <= 1; ++dk) {
      for (int di = -1; di <= 1; ++di) {
        if (di == 0 && dk == 0) continue;
        const int ni = ci + di;
        const int nk = ck + dk;
        if (ni < 0 || nk < 0 || ni >= nx || nk >= nz) continue;
        const int n = nk * nx + ni;
        if (!open[n]) continue;
        if (di != 0 && dk != 0 && (!open[ck * nx + ni] || !open[nk * nx + ci])) continue;
        const double step = (di != 0 && dk != 0) ? std::numbers::sqrt2 : 1.0;
        if (dist[c] + step < dist[n]) {
          dist[n] = dist[c] + step;
          prev[n] = c;
          queue.emplace(dist[n], n);
        }
      }
    }
  }
  if (!std::isfinite(dist[g])) throw GenerationError("no path to target");

  std::vector<Vec3f> cells;
  for (int c = g; c != -1; c = prev[c]) cells.push_back(center(c));
  std::reverse(cells.begin(), cells.end());
  cells.front() = Vec3f(start.x(), 0, start.z());
  cells.back() = Vec3f(goal.x(), 0, goal.z());

  std::vector<Vec3f> path = {cells.front()};
  std::size_t i = 0;
  while (i + 1 < cells.size()) {
    std::size_t j = cells.size() - 1;
    while (j > i + 1 && !area.segment_free(cells[i], cells[j])) --j;
    path.push_back(cells[j]);
    i = j;
  }
  return path;
}

class Polyline {
 public:
  explicit Polyline(std::vector<Vec3f> pts) : pts_(std::move(pts)) {
    cum_.push_back(0);
    for (std::size_t i = 1; i < pts_.size(); ++i) cum_.push_back(cum_.back() + (pts_[i] - pts_[i - 1]).norm());
  }
  [[nodiscard]] float length() const { return cum_.back(); }
  [[nodiscard]] Vec3f at(float s) const {
    s = std::clamp(s, 0.0f, length());
    for (std::size_t i = 1; i < pts_.size(); ++i) {
      if (s <= cum_[i] || i + 1 == pts_.size()) {
        const float seg = cum_[i] - cum_[i - 1];
        const float t = seg > 0 ? (s - cum_[i - 1]) / seg : 1.0f;
        return pts_[i - 1] + t * (pts_[i] - pts_[i - 1]);
      }
    }
    return pts_.back();
  }
  // Truncates the polyline so it ends `amount` meters earlier.
  void shorten(float amount) {
    const float keep = std::max(0.0f, length() - amount);
    const Vec3f end = at(keep);
    std::vector<Vec3f> pts;
    for (std::size_t i = 0; i < pts_.size() && cum_[i] < keep; ++i) pts.push_back(pts_[i]);
    pts.push_back(end);
    if (pts.size() < 2) pts.insert(pts.begin(), pts_.front());
    *this = Polyline(std::move(pts));
  }
  [[nodiscard]] const std::vector<Vec3f>& points() const { return pts_; }

 private:
  std::vector<Vec3f> pts_;
  std::vector<float> cum_;
};

float heading_of(const Vec3f& d, float fallback) {
  if (d.x() * d.x() + d.z() * d.z() < 1e-10f) return fallback;
  return std::atan2(d.z(), d.x());
}

}  // namespace

const std::vector<CatalogEntry>& default_catalog() {
  static const std::vector<CatalogEntry> catalog = {
      {"chair", {0.25f, 0.45f, 0.25f}, {0.85f, 0.20f, 0.20f}, 0.45f, {Action::Sit, Action::StandUp}},
      {"table", {0.60f, 0.375f, 0.40f}, {0.60f, 0.40f, 0.10f}, 0.0f, {Action::Reach, Action::PickUp}},
      {"bed", {1.00f, 0.30f, 0.80f}, {0.20f, 0.40f, 0.85f}, 0.60f, {Action::Sit, Action::Lie, Action::StandUp}},
      {"lamp", {0.15f, 0.80f, 0.15f}, {0.95f, 0.90f, 0.25f}, 0.0f, {Action::Reach}},
      {"sofa", {0.90f, 0.40f, 0.40f}, {0.25f, 0.70f, 0.30f}, 0.45f, {Action::Sit, Action::Lie, Action::StandUp}},
      {"shelf", {0.50f, 0.90f, 0.20f}, {0.60f, 0.25f, 0.70f}, 0.0f, {Action::Reach, Action::PickUp}},
  };
  return catalog;
}

void GeneratorConfig::validate() const {
  if (room_width < 3.0f || room_depth < 3.0f || room_height < 2.0f) {
    throw ConfigError("room must be at least 3 x 3 m with 2 m height");
  }
  if (min_objects < 1 || max_objects < min_objects) throw ConfigError("invalid objects_per_scene range");
  if (points_per_object < 1 || floor_points < 0) throw ConfigError("invalid point counts");
  if (frames < 2) throw ConfigError("frames must be >= 2");
  if (samples_per_scene < 1) throw ConfigError("samples_per_scene must be >= 1");
  if (catalog.size() < 6) throw ConfigError("object catalog needs at least 6 classes");
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    for (std::size_t j = i + 1; j < catalog.size(); ++j) {
      if ((catalog[i].color - catalog[j].color).norm() < 1e-3f) {
        throw ConfigError("catalog classes must have distinct colors");
      }
    }
  }
}

Box GeneratorConfig::room_bounds() const {
  return {Vec3f::Zero(), Vec3f(room_width, room_height, room_depth)};
}

bool action_allowed(const CatalogEntry& entry, Action action) {
  return std::find(entry.actions.begin(), entry.actions.end(), action) != entry.actions.end();
}

const CatalogEntry& catalog_entry(const GeneratorConfig& cfg, const std::string& label) {
  for (const auto& e : cfg.catalog) {
    if (e.label == label) return e;
  }
  throw GenerationError("object class '" + label + "' not in catalog");
}

ScenePointCloud gen_scene(const GeneratorConfig& cfg, std::uint64_t scene_seed) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, scene_seed));

  ScenePointCloud cloud;
  cloud.meta.emplace();
  SceneGraphMeta& meta = *cloud.meta;
  meta.room_bounds = cfg.room_bounds();

  const Entrance entrance = make_entrance(cfg, rng);
  meta.entrance = entrance.fixture;

  const int n_objects = rng.range(cfg.min_objects, cfg.max_objects);
  std::vector<std::size_t> classes(cfg.catalog.size());
  for (std::size_t i = 0; i < classes.size(); ++i) classes[i] = i;
  rng.shuffle(classes);
  while (static_cast<int>(classes.size()) < n_objects) classes.push_back(rng.below(cfg.catalog.size()));

  constexpr int kMaxAttempts = 400;
  constexpr float kAnchorWallGap = 0.35f;
  const float half_gap = 0.5f * cfg.object_gap;
  for (int n = 0; n < n_objects; ++n) {
    const CatalogEntry& entry = cfg.catalog[classes[n]];
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      ObjectInstance obj;
      obj.label = entry.label;
      obj.color = entry.color;
      obj.half_extents = entry.half_extents;
      if (rng.uniform() < 0.5) std::swap(obj.half_extents.x(), obj.half_extents.z());
      const float mx = std::max(obj.half_extents.x() + 0.02f, kAnchorWallGap);
      const float mz = std::max(obj.half_extents.z() + 0.02f, kAnchorWallGap);
      if (2 * mx >= cfg.room_width || 2 * mz >= cfg.room_depth) break;
      obj.anchor = {static_cast<float>(rng.uniform(mx, cfg.room_width - mx)), obj.half_extents.y(),
                    static_cast<float>(rng.uniform(mz, cfg.room_depth - mz))};
      const Box box = obj.box();
      if (!meta.room_bounds.contains(box)) continue;
      if (overlaps_xz(box, entrance.keepout)) continue;
      bool clear = true;
      for (const auto& other : meta.objects) {
        if (overlaps_xz(box.inflated(half_gap), other.box().inflated(half_gap))) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      meta.objects.push_back(obj);
      placed = true;
    }
    if (!placed) throw GenerationError("scene too crowded");
  }

  const Vec3f floor_color(0.55f, 0.55f, 0.50f);
  for (int i = 0; i < cfg.floor_points; ++i) {
    const float x = static_cast<float>(rng.uniform(0.0, cfg.room_width));
    const float z = static_cast<float>(rng.uniform(0.0, cfg.room_depth));
    const Vec3f c = jitter_color(floor_color, rng, 0.03f);
    cloud.points.push_back({x, 0.0f, z, c.x(), c.y(), c.z()});
    meta.point_owner.push_back(kFloorOwner);
  }
  sample_box_surface(entrance.fixture, cfg.points_per_object, kEntranceOwner, rng, cloud);
  for (std::size_t i = 0; i < meta.objects.size(); ++i) {
    sample_box_surface(meta.objects[i], cfg.points_per_object, static_cast<std::int16_t>(i), rng, cloud);
  }
  return cloud;
}

MotionSequence gen_motion(const GeneratorConfig& cfg, const ScenePointCloud& scene, int target_index,
                          Action action, std::uint64_t motion_seed, std::vector<Vec3f>* path_out) {
  if (!scene.meta) throw GenerationError("scene has no metadata");
  const SceneGraphMeta& meta = *scene.meta;
  if (target_index < 0 || target_index >= static_cast<int>(meta.objects.size())) {
    throw GenerationError("target index out of range");
  }
  const ObjectInstance& target = meta.objects[target_index];
  const CatalogEntry& entry = catalog_entry(cfg, target.label);
  Rng rng(derive_seed(cfg.seed ^ 0xA5A5A5A5ull, motion_seed));

  const WalkableArea area(cfg, meta, target_index);

  // Start just inside the doorway, or anywhere free when there is none.
  Vec3f start = Vec3f::Zero();
  bool found = false;
  for (int attempt = 0; attempt < 64 && !found; ++attempt) {
    if (meta.entrance) {
      const Vec3f door(meta.entrance->anchor.x(), 0, meta.entrance->anchor.z());
      Vec3f inward = Vec3f::Zero();
      if (meta.entrance->half_extents.z() < meta.entrance->half_extents.x()) {
        inward.z() = door.z() < 0.5f * cfg.room_depth ? 1.0f : -1.0f;
      } else {
        inward.x() = door.x() < 0.5f * cfg.room_width ? 1.0f : -1.0f;
      }
      const Vec3f side(inward.z(), 0, -inward.x());
      start = door + inward * static_cast<float>(rng.uniform(0.6, 0.9)) +
              side * static_cast<float>(rng.uniform(-0.25, 0.25));
    } else {
      start = Vec3f(static_cast<float>(rng.uniform(0, cfg.room_width)), 0,
                    static_cast<float>(rng.uniform(0, cfg.room_depth)));
    }
    found = area.free(start.x(), start.z());
  }
  if (!found) throw GenerationError("no path: no free start position");

  const Vec3f goal(target.anchor.x(), 0, target.anchor.z());
  Polyline path(plan_path(area, start, goal));
  if (action == Action::Reach || action == Action::PickUp) path.shorten(kReachStandoff);
  if (path_out) *path_out = path.points();

  const int T = cfg.frames;
  const int action_frames = std::max(1, T / 4);
  const int walk_frames = std::max(1, T - action_frames);
  const float length = path.length();
  const float pelvis_y = kStandingPelvisHeight;
  const float seat = entry.seat_height > 0 ? entry.seat_height : target.anchor.y() + target.half_extents.y();

  MotionSequence motion(T);
  float heading = heading_of(path.at(0.3f) - path.at(0.0f), 0.0f);
  const float phase0 = static_cast<float>(rng.uniform(0.0, 2.0 * std::numbers::pi));
  for (int f = 0; f < walk_frames && f < T; ++f) {
    const float s = walk_frames > 1 ? length * static_cast<float>(f) / static_cast<float>(walk_frames - 1) : length;
    PoseParams pose;
    const Vec3f p = path.at(s);
    pose.pelvis = Vec3f(p.x(), pelvis_y, p.z());
    heading = heading_of(path.at(s + 0.3f) - path.at(s - 0.3f), heading);
    pose.heading = heading;
    pose.gait_phase = phase0 + 2.0f * kPi * s / kStrideLength;
    pose.gait_amplitude = std::min({1.0f, s / 0.3f, (length - s) / 0.3f});
    pose.gait_amplitude = std::max(0.0f, pose.gait_amplitude);
    pose_skeleton(pose, motion, f);
  }

  const Vec3f end = path.at(length);
  const float end_heading = heading;
  const Vec3f reach_point = action == Action::PickUp
                                ? Vec3f(target.anchor.x(), target.anchor.y() + target.half_extents.y(), target.anchor.z())
                                : Vec3f(target.anchor.x(),
                                        std::clamp(target.anchor.y() + 0.5f * target.half_extents.y(), 0.6f, 1.6f),
                                        target.anchor.z());
  float lie_heading = end_heading;
  if (action == Action::Lie) {
    const bool long_x = target.half_extents.x() >= target.half_extents.z();
    const float a = long_x ? 0.0f : 0.5f * kPi;
    lie_heading = std::abs(wrap_angle(end_heading - a)) <= 0.5f * kPi ? a : wrap_angle(a + kPi);
  }

  for (int f = walk_frames; f < T; ++f) {
    const float u = static_cast<float>(f - walk_frames + 1) / static_cast<float>(action_frames);
    const float e = smoothstep(u);
    PoseParams pose;
    pose.pelvis = Vec3f(end.x(), pelvis_y, end.z());
    pose.heading = end_heading;
    switch (action) {
      case Action::Sit:
        pose.sit = e;
        pose.pelvis.y() = pelvis_y + (seat + 0.08f - pelvis_y) * e;
        pose.heading = end_heading + kPi * e;
        break;
      case Action::StandUp: {
        const float b = std::sin(kPi * u);
        pose.sit = b;
        pose.pelvis.y() = pelvis_y + (seat + 0.08f - pelvis_y) * b;
        pose.heading = end_heading + kPi * smoothstep(2.0f * u);
        break;
      }
      case Action::Lie:
        pose.lie = 1.0f;
        pose.pitch = 0.5f * kPi * e;
        pose.pelvis.y() = pelvis_y + (target.anchor.y() + target.half_extents.y() + 0.12f - pelvis_y) * e;
        pose.heading = end_heading + wrap_angle(lie_heading - end_heading) * e;
        break;
      case Action::Reach:
        pose.reach = e;
        pose.reach_target = reach_point;
        break;
      case Action::PickUp:
        pose.pitch = 0.7f * std::sin(kPi * u);
        pose.reach = smoothstep(2.0f * u);
        pose.both_arms = 1.0f;
        pose.reach_target = reach_point;
        break;
    }
    pose_skeleton(pose, motion, f);
  }
  for (int f = 0; f < T; ++f) {
    for (int j = 0; j < kNumJoints; ++j) {
      const Vec3d q = motion.joint(f, j);
      if (q.x() < 0 || q.z() < 0 || q.x() > cfg.room_width || q.z() > cfg.room_depth) {
        throw GenerationError("motion leaves the room");
      }
    }
  }
  return motion;
}

int nearest_neighbor(const SceneGraphMeta& meta, int target_index) {
  int best = -1;
  float best_d = std::numeric_limits<float>::infinity();
  const Vec3f t = meta.objects.at(target_index).anchor;
  for (int i = 0; i < static_cast<int>(meta.objects.size()); ++i) {
    if (i == target_index) continue;
    const Vec3f d = meta.objects[i].anchor - t;
    const float dist = std::hypot(d.x(), d.z());
    if (dist < best_d) {
      best_d = dist;
      best = i;
    }
  }
  return best;
}

std::string gen_caption(const ScenePointCloud& scene, int target_index, Action action,
                        std::uint64_t text_seed) {
  if (!scene.meta) throw GenerationError("scene has no metadata");
  const SceneGraphMeta& meta = *scene.meta;
  const std::string& target = meta.objects.at(target_index).label;
  const int neighbor = nearest_neighbor(meta, target_index);
  Rng rng(derive_seed(text_seed, 0x7E47));

  static const std::array<std::array<const char*, 2>, 3> leads = {{
      {"walk to the ", " near the "},
      {"go over to the ", " next to the "},
      {"head to the ", " by the "},
  }};
  static const std::array<std::array<const char*, 2>, kNumActions> phrases = {{
      {"sit on it", "sit down on it"},
      {"lie on it", "lie down on it"},
      {"reach for it", "reach toward it"},
      {"sit down and stand up", "stand up from it"},
      {"pick up something from it", "pick up an item on it"},
  }};
  const auto& lead = leads[rng.below(leads.size())];
  const char* phrase = phrases[static_cast<int>(action)][rng.below(2)];

  std::string caption = lead[0] + target;
  if (neighbor >= 0) caption += lead[1] + meta.objects[neighbor].label;
  caption += " and ";
  caption += phrase;
  return caption;
}

Dataset gen_dataset(const GeneratorConfig& cfg, int n_train, int n_test) {
  if (n_train <= 0 || n_test <= 0) throw ConfigError("n_train and n_test must be positive");
  Dataset ds;
  ds.train = gen_split(cfg, n_train, 0, "train");
  ds.test = gen_split(cfg, n_test, 1, "test");
  return ds;
}

std::vector<TrimodalSample> gen_split(const GeneratorConfig& cfg, int count, int split,
                                      const std::string& id_prefix) {
  cfg.validate();
  std::vector<TrimodalSample> out;
  out.reserve(static_cast<std::size_t>(count));
  constexpr int kMaxSceneFailures = 10000;
  int failures = 0;
  for (std::uint64_t k = 0; static_cast<int>(out.size()) < count; ++k) {
    const std::uint64_t scene_seed = 2 * k + static_cast<std::uint64_t>(split);
    std::shared_ptr<const ScenePointCloud> scene;
    try {
      scene = std::make_shared<const ScenePointCloud>(gen_scene(cfg, scene_seed));
    } catch (const GenerationError&) {
      if (++failures > kMaxSceneFailures) throw;
      continue;
    }
    const SceneGraphMeta& meta = *scene->meta;

    std::vector<std::pair<int, Action>> pairs;
    for (int t = 0; t < static_cast<int>(meta.objects.size()); ++t) {
      const CatalogEntry& entry = catalog_entry(cfg, meta.objects[t].label);
      for (Action a : entry.actions) pairs.emplace_back(t, a);
    }
    Rng pick(derive_seed(cfg.seed ^ 0x5CE4Eull, scene_seed));
    pick.shuffle(pairs);

    const int remaining = count - static_cast<int>(out.size());
    const int want = std::min(cfg.samples_per_scene, remaining);
    std::vector<TrimodalSample> batch;
    for (std::size_t j = 0; j < pairs.size() && static_cast<int>(batch.size()) < want; ++j) {
      const auto [target, action] = pairs[j];
      const std::uint64_t motion_seed = derive_seed(scene_seed, 1000 + j);
      TrimodalSample s;
      s.scene_seed = scene_seed;
      s.scene = scene;
      s.truth.target_index = target;
      s.truth.action = action;
      try {
        s.motion = gen_motion(cfg, *scene, target, action, motion_seed, &s.truth.path);
      } catch (const GenerationError&) {
        continue;
      }
      const std::string caption = gen_caption(*scene, target, action, derive_seed(scene_seed, 2000 + j));
      s.text = featurize_text(caption);
      batch.push_back(std::move(s));
    }
    // A scene contributes at least two samples so it cannot identify a sample on its own.
    if (batch.size() < 2 && want >= 2) {
      if (++failures > kMaxSceneFailures) throw GenerationError("could not fill dataset split");
      continue;
    }
    for (auto& s : batch) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "_%06zu", out.size());
      s.id = id_prefix + buf;
      auto report = validate_sample(s);
      if (!report.empty()) throw GenerationError("generated sample " + s.id + " is invalid: " + report.front());
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace trimodal
