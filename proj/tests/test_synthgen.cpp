#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"
#include "trimodal/error.hpp"
#include "trimodal/store.hpp"
#include "trimodal/synthgen.hpp"

using namespace trimodal;

namespace {

bool overlaps_xz(const Box& a, const Box& b) {
  return a.min.x() < b.max.x() && b.min.x() < a.max.x() && a.min.z() < b.max.z() && b.min.z() < a.max.z();
}

bool strictly_inside(const Box& b, const Vec3d& p, double margin) {
  for (int k = 0; k < 3; ++k) {
    if (p[k] <= b.min[k] + margin || p[k] >= b.max[k] - margin) return false;
  }
  return true;
}

}  // namespace

TEST(Synthgen, SameSeedSameBytes) {
  const auto g = fixtures::tiny_generator(9);
  EXPECT_EQ(encode_samples(gen_split(g, 12, 0, "a")), encode_samples(gen_split(g, 12, 0, "a")));
  auto other = g;
  other.seed = 10;
  EXPECT_NE(encode_samples(gen_split(g, 12, 0, "a")), encode_samples(gen_split(other, 12, 0, "a")));
}

TEST(Synthgen, ObjectsDoNotOverlap) {
  const GeneratorConfig g;
  for (std::uint64_t k = 0; k < 40; ++k) {
    ScenePointCloud scene;
    try {
      scene = gen_scene(g, k);
    } catch (const GenerationError&) {
      continue;
    }
    const auto& objs = scene.meta->objects;
    for (std::size_t i = 0; i < objs.size(); ++i) {
      EXPECT_TRUE(scene.meta->room_bounds.contains(objs[i].box()));
      for (std::size_t j = i + 1; j < objs.size(); ++j) EXPECT_FALSE(overlaps_xz(objs[i].box(), objs[j].box()));
    }
    EXPECT_EQ(scene.meta->point_owner.size(), scene.points.size());
  }
}

TEST(Synthgen, MotionsEndAtTargetAndAvoidOtherObjects) {
  GeneratorConfig g;
  const auto samples = gen_split(g, 120, 1, "m");
  for (const auto& s : samples) {
    const auto& meta = *s.scene->meta;
    const auto& target = meta.objects[s.truth.target_index];
    const Vec3d end = s.motion.pelvis(s.motion.frame_count() - 1);
    const double dist = std::hypot(end.x() - target.anchor.x(), end.z() - target.anchor.z());
    const bool reach = s.truth.action == Action::Reach || s.truth.action == Action::PickUp;
    EXPECT_LE(dist, reach ? 0.3 + 0.25 : 0.3) << s.id;

    for (int f = 0; f < s.motion.frame_count(); ++f) {
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3d q = s.motion.joint(f, j);
        EXPECT_TRUE(q.x() >= 0 && q.z() >= 0 && q.x() <= g.room_width && q.z() <= g.room_depth) << s.id;
        for (int o = 0; o < static_cast<int>(meta.objects.size()); ++o) {
          if (o == s.truth.target_index) continue;
          EXPECT_FALSE(strictly_inside(meta.objects[o].box(), q, 0.02)) << s.id << " joint " << j;
        }
      }
    }
  }
}

TEST(Synthgen, SittingLowersThePelvis) {
  const auto samples = gen_split(GeneratorConfig{}, 80, 0, "s");
  int seen = 0;
  for (const auto& s : samples) {
    if (s.truth.action != Action::Sit) continue;
    ++seen;
    const double before = s.motion.pelvis(0).y();
    const double after = s.motion.pelvis(s.motion.frame_count() - 1).y();
    EXPECT_LT(after, before - 0.2) << s.id;
  }
  EXPECT_GT(seen, 0);
}

TEST(Synthgen, CaptionNamesTargetNeighborAndAction) {
  const auto samples = gen_split(GeneratorConfig{}, 40, 0, "c");
  for (const auto& s : samples) {
    const auto& meta = *s.scene->meta;
    const std::string& cap = s.text.raw_caption;
    EXPECT_NE(cap.find(meta.objects[s.truth.target_index].label), std::string::npos) << cap;
    const int nb = nearest_neighbor(meta, s.truth.target_index);
    if (nb >= 0) EXPECT_NE(cap.find(meta.objects[nb].label), std::string::npos) << cap;
    const std::string verb = std::string(action_name(s.truth.action)).substr(0, 3);
    EXPECT_NE(cap.find(verb), std::string::npos) << cap;
  }
}

TEST(Synthgen, TextFeaturesAreUnitNorm) {
  const auto f = featurize_text("walk to the chair and sit on it");
  ASSERT_EQ(f.values.size(), static_cast<std::size_t>(kDefaultTextDim));
  double n = 0;
  for (float v : f.values) n += double(v) * v;
  EXPECT_NEAR(n, 1.0, 1e-6);
  EXPECT_EQ(f.values, featurize_text("walk to the chair and sit on it").values);
  EXPECT_NE(f.values, featurize_text("walk to the bed and lie on it").values);
  EXPECT_THROW((void)featurize_text(""), ConfigError);
}

TEST(Synthgen, SplitsShareNoScenes) {
  const auto ds = gen_dataset(fixtures::tiny_generator(), 20, 10);
  std::set<std::uint64_t> train;
  for (const auto& s : ds.train) train.insert(s.scene_seed);
  for (const auto& s : ds.test) EXPECT_EQ(train.count(s.scene_seed), 0u);
  EXPECT_EQ(ds.train.size(), 20u);
  EXPECT_EQ(ds.test.size(), 10u);
}

TEST(Synthgen, ScenesContributeAtLeastTwoSamples) {
  const auto samples = gen_split(GeneratorConfig{}, 60, 0, "p");
  std::map<std::uint64_t, int> per_scene;
  for (const auto& s : samples) ++per_scene[s.scene_seed];
  for (const auto& [seed, n] : per_scene) EXPECT_GE(n, 2) << seed;
}

TEST(Synthgen, RejectsBadConfig) {
  GeneratorConfig g;
  g.room_width = 2.0f;
  EXPECT_THROW(g.validate(), ConfigError);
  g = GeneratorConfig{};
  g.catalog.pop_back();
  EXPECT_THROW(g.validate(), ConfigError);
  EXPECT_THROW((void)gen_dataset(GeneratorConfig{}, 0, 4), ConfigError);
}
