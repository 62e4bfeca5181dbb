#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "trimodal/core_types.hpp"
#include "trimodal/model.hpp"

namespace trimodal {

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t count = 0;
};

// Rows are observations. Unbiased covariance.
[[nodiscard]] GaussianMoments fit_gaussian(const Eigen::MatrixXd& rows);
[[nodiscard]] GaussianMoments fit_gaussian(const std::vector<LatentVector>& latents);

// Square root of a symmetric PSD matrix; negative eigenvalues clamp to 0.
[[nodiscard]] Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m);
[[nodiscard]] double frechet_distance(const GaussianMoments& a, const GaussianMoments& b);

// Eval-mode latents of one source for each sample, one row per sample.
[[nodiscard]] Eigen::MatrixXd embed_source(const Model<float>& model, const std::vector<TrimodalSample>& samples,
                                           Source source);

// FID between MS embeddings of two (motion, scene) sets.
[[nodiscard]] double fid_score(const Model<float>& model, const std::vector<TrimodalSample>& generated,
                               const std::vector<TrimodalSample>& reference);
// FID between two seeded halves of the reference set.
[[nodiscard]] double fid_split_baseline(const Model<float>& model, const std::vector<TrimodalSample>& reference,
                                        std::uint64_t seed);

// Each generated sample's motion ranks the pool's v_st; the correct condition
// is the pool entry with the same id. Recall@{1,2,3} in percent.
[[nodiscard]] std::array<double, 3> hsi_recall(const Model<float>& model, const std::vector<TrimodalSample>& generated,
                                               const std::vector<TrimodalSample>& pool);

// Rotation about the vertical axis through pivot (default: final-frame pelvis).
[[nodiscard]] MotionSequence rotate_motion(const MotionSequence& m, double theta,
                                           std::optional<Vec3d> pivot = std::nullopt);

struct InterpenetrationReport {
  bool interpenetrating = false;
  std::vector<std::pair<int, int>> hits;  // (frame, joint)
};

inline constexpr double kPenetrationMargin = 0.02;
inline constexpr double kPointContactRadius = 0.05;

// Joints strictly inside an object box shrunk by the margin; the entrance
// counts as an object. exclude_index skips one object (the interaction target).
// Without metadata, any joint within 5 cm of a non-floor point.
[[nodiscard]] InterpenetrationReport check_interpenetration(const MotionSequence& m, const ScenePointCloud& scene,
                                                            int exclude_index = -1);
// Every joint inside the room's horizontal footprint.
[[nodiscard]] bool motion_in_room(const MotionSequence& m, const ScenePointCloud& scene);

enum class SweepMode { Filtered, Unfiltered };
[[nodiscard]] SweepMode parse_sweep_mode(const std::string& name);
[[nodiscard]] std::string sweep_mode_name(SweepMode m);

struct SweepRow {
  double theta = 0.0;
  double fid = 0.0;
  double recall1 = 0.0;
  int kept = 0;
  int interpenetrating = 0;  // in room and interpenetrating, kept or not
  int out_of_bounds = 0;
  int rejected = 0;
  bool skipped = false;
};

struct RotationSweepResult {
  SweepMode mode = SweepMode::Filtered;
  std::vector<SweepRow> rows;

  [[nodiscard]] std::string to_csv() const;
  [[nodiscard]] std::string to_gnuplot() const;
};

struct SweepOptions {
  int batch_size = 32;
  std::uint64_t seed = 0;
};

[[nodiscard]] std::vector<double> sweep_angles(int steps);

[[nodiscard]] RotationSweepResult rotation_sweep(const Model<float>& model, const std::vector<TrimodalSample>& samples,
                                                 const std::vector<double>& angles, SweepMode mode,
                                                 const SweepOptions& options = {});

// Spearman rank correlation with average ranks for ties.
[[nodiscard]] double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Offsets {-half..half}^3 * cell, x-major then y then z.
[[nodiscard]] std::vector<Vec3d> placement_offsets(double cell = 0.25, int half = 2);

// The scene with the target object's points and box moved by offset.
[[nodiscard]] ScenePointCloud translate_object(const ScenePointCloud& scene, int target, const Vec3d& offset);

using PlacementScorer = std::function<double(const Vec3d& offset, const ScenePointCloud& edited)>;

struct PlacementResult {
  std::string sample_id;
  Vec3d predicted = Vec3d::Zero();
  double error_cm = 0.0;
  int evaluated = 0;
  int rejected = 0;  // offsets that would leave the room
};

[[nodiscard]] PlacementResult place_object_grid(const TrimodalSample& sample, double cell, const PlacementScorer& scorer);

// Cosine between the sample's v_mt and the edited scene's v_s.
[[nodiscard]] PlacementScorer model_placement_scorer(const Model<float>& model, const TrimodalSample& sample);

[[nodiscard]] std::string placement_csv(const std::vector<PlacementResult>& results);

}  // namespace trimodal
