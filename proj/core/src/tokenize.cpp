#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include "trimodal/error.hpp"
#include "trimodal/model.hpp"

namespace trimodal {

void ModelConfig::validate() const {
  if (latent_dim <= 0 || token_dim <= 0 || heads <= 0) throw ConfigError("latent_dim, token_dim and heads must be positive");
  if (token_dim % heads != 0) throw ConfigError("token_dim must be divisible by heads");
  if (token_dim % 2 != 0) throw ConfigError("token_dim must be even");
  if (layers <= 0 || ffn_dim <= 0) throw ConfigError("layers and ffn_dim must be positive");
  if (text_dim <= 0 || text_tokens <= 0) throw ConfigError("text_dim and text_tokens must be positive");
  if (grid_x <= 0 || grid_y <= 0 || grid_z <= 0) throw ConfigError("voxel grid dimensions must be positive");
  if (motion_stride <= 0) throw ConfigError("motion_stride must be positive");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
  if (!(room_width > 0 && room_depth > 0 && room_height > 0)) throw ConfigError("room extent must be positive");
}

nn::Matrix<float> prepare_text(const TextFeature& t, const ModelConfig& cfg) {
  if (static_cast<int>(t.values.size()) != cfg.text_dim) throw ConfigError("text length mismatch");
  nn::Matrix<float> m(1, cfg.text_dim);
  for (int i = 0; i < cfg.text_dim; ++i) m(0, i) = t.values[static_cast<std::size_t>(i)];
  return m;
}

nn::Matrix<float> prepare_motion(const MotionSequence& m, const ModelConfig& cfg) {
  if (m.frame_count() < 2) throw ConfigError("motion shorter than 2 frames");
  const int rows = (m.frame_count() + cfg.motion_stride - 1) / cfg.motion_stride;
  const std::array<double, 3> extent = {cfg.room_width, cfg.room_height, cfg.room_depth};
  nn::Matrix<float> out(rows, cfg.motion_features());
  for (int r = 0; r < rows; ++r) {
    const auto frame = m.frame_data(r * cfg.motion_stride);
    for (int j = 0; j < cfg.motion_features(); ++j) {
      out(r, j) = static_cast<float>(frame[static_cast<std::size_t>(j)] / extent[static_cast<std::size_t>(j % 3)] * 2.0 - 1.0);
    }
  }
  return out;
}

void prepare_scene(const ScenePointCloud& s, const ModelConfig& cfg, nn::Matrix<float>& features,
                   std::vector<int>& voxels) {
  if (s.points.empty()) throw ConfigError("empty point cloud");
  auto cell = [](float v, float extent, int n) {
    const int i = static_cast<int>(std::floor(v / extent * static_cast<float>(n)));
    return std::clamp(i, 0, n - 1);
  };
  // Sorting by (voxel, point) makes the per-voxel sums independent of input order.
  std::vector<std::pair<int, const ColoredPoint*>> binned;
  binned.reserve(s.points.size());
  for (const auto& p : s.points) {
    const int ix = cell(p.x, cfg.room_width, cfg.grid_x);
    const int iy = cell(p.y, cfg.room_height, cfg.grid_y);
    const int iz = cell(p.z, cfg.room_depth, cfg.grid_z);
    binned.emplace_back((iy * cfg.grid_z + iz) * cfg.grid_x + ix, &p);
  }
  std::sort(binned.begin(), binned.end(), [](const auto& a, const auto& b) {
    const auto& p = *a.second;
    const auto& q = *b.second;
    return std::tie(a.first, p.x, p.y, p.z, p.r, p.g, p.b) < std::tie(b.first, q.x, q.y, q.z, q.r, q.g, q.b);
  });

  std::vector<int> ids;
  std::vector<std::array<double, 7>> sums;  // xyz, rgb, count
  for (const auto& [v, p] : binned) {
    if (ids.empty() || ids.back() != v) {
      ids.push_back(v);
      sums.push_back({});
    }
    auto& acc = sums.back();
    acc[0] += p->x;
    acc[1] += p->y;
    acc[2] += p->z;
    acc[3] += p->r;
    acc[4] += p->g;
    acc[5] += p->b;
    acc[6] += 1.0;
  }

  const std::size_t count = ids.size();
  const std::size_t cap = static_cast<std::size_t>(cfg.max_tokens);
  const std::size_t stride = count > cap ? (count + cap - 1) / cap : 1;
  const std::array<double, 3> extent = {cfg.room_width, cfg.room_height, cfg.room_depth};
  voxels.clear();
  std::vector<std::array<float, 6>> rows;
  for (std::size_t i = 0; i < count; i += stride) {
    const auto& acc = sums[i];
    std::array<float, 6> f{};
    for (int k = 0; k < 3; ++k) f[k] = static_cast<float>(acc[k] / acc[6] / extent[k] * 2.0 - 1.0);
    for (int k = 3; k < 6; ++k) f[k] = static_cast<float>(acc[k] / acc[6]);
    rows.push_back(f);
    voxels.push_back(ids[i]);
  }
  features.resize(static_cast<Eigen::Index>(rows.size()), 6);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int k = 0; k < 6; ++k) features(static_cast<Eigen::Index>(r), k) = rows[r][k];
  }
}

PreparedInputs prepare_inputs(const TrimodalSample& s, const ModelConfig& cfg) {
  if (!s.scene) throw ConfigError("sample '" + s.id + "' has no scene");
  PreparedInputs in;
  in.text = prepare_text(s.text, cfg);
  in.motion_features = prepare_motion(s.motion, cfg);
  prepare_scene(*s.scene, cfg, in.scene_features, in.scene_voxels);
  return in;
}

nn::Matrix<double> sinusoidal_encoding(int positions, int dim) {
  nn::Matrix<double> pe(positions, dim);
  for (int t = 0; t < positions; ++t) {
    for (int i = 0; i < dim / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * i / dim);
      pe(t, 2 * i) = std::sin(t * freq);
      pe(t, 2 * i + 1) = std::cos(t * freq);
    }
  }
  return pe;
}

}  // namespace trimodal
