#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trimodal/core_types.hpp"

namespace trimodal {

struct CatalogEntry {
  std::string label;
  Vec3f half_extents;  // canonical, x/z may be swapped at placement
  Vec3f color;
  float seat_height;   // pelvis support height for sit/lie, 0 if not sittable
  std::vector<Action> actions;
};

[[nodiscard]] const std::vector<CatalogEntry>& default_catalog();

struct GeneratorConfig {
  std::uint64_t seed = 7;
  float room_width = 6.0f;
  float room_depth = 6.0f;
  float room_height = 2.6f;
  int min_objects = 3;
  int max_objects = 6;
  int points_per_object = 256;
  int floor_points = 1024;
  int frames = 60;
  int samples_per_scene = 4;
  float object_gap = 0.9f;      // minimum horizontal clearance between object boxes
  float body_clearance = 0.42f; // pelvis distance kept from non-target boxes while walking
  std::vector<CatalogEntry> catalog = default_catalog();

  void validate() const;
  [[nodiscard]] Box room_bounds() const;
};

[[nodiscard]] ScenePointCloud gen_scene(const GeneratorConfig& cfg, std::uint64_t scene_seed);

[[nodiscard]] MotionSequence gen_motion(const GeneratorConfig& cfg, const ScenePointCloud& scene,
                                        int target_index, Action action, std::uint64_t motion_seed,
                                        std::vector<Vec3f>* path_out = nullptr);

// Nearest other object to the target (horizontal anchor distance), -1 if alone.
[[nodiscard]] int nearest_neighbor(const SceneGraphMeta& meta, int target_index);

[[nodiscard]] std::string gen_caption(const ScenePointCloud& scene, int target_index, Action action,
                                      std::uint64_t text_seed);

[[nodiscard]] TextFeature featurize_text(const std::string& caption, int dim = kDefaultTextDim);

struct Dataset {
  std::vector<TrimodalSample> train;
  std::vector<TrimodalSample> test;
};

[[nodiscard]] Dataset gen_dataset(const GeneratorConfig& cfg, int n_train, int n_test);

// Samples for one split; `split` selects a disjoint scene-seed stream (0 train, 1 test).
[[nodiscard]] std::vector<TrimodalSample> gen_split(const GeneratorConfig& cfg, int count, int split,
                                                    const std::string& id_prefix);

[[nodiscard]] bool action_allowed(const CatalogEntry& entry, Action action);
[[nodiscard]] const CatalogEntry& catalog_entry(const GeneratorConfig& cfg, const std::string& label);

}  // namespace trimodal
