#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "trimodal/core_types.hpp"
#include "trimodal/nn/layers.hpp"
#include "trimodal/random.hpp"

namespace trimodal {

struct ModelConfig {
  int latent_dim = 32;
  int token_dim = 64;
  int layers = 2;
  int heads = 4;
  int ffn_dim = 128;
  int text_dim = kDefaultTextDim;
  int text_tokens = 8;
  // Voxel grid over the room; y is vertical.
  int grid_x = 8;
  int grid_y = 4;
  int grid_z = 8;
  int motion_stride = 2;
  int max_tokens = 64;
  // Fixed coordinate frame used to normalize scene and motion inputs.
  float room_width = 6.0f;
  float room_depth = 6.0f;
  float room_height = 2.6f;
  bool cross_modal = true;
  bool shared_cross_encoder = false;
  std::uint64_t init_seed = 0;

  void validate() const;
  [[nodiscard]] int voxel_count() const { return grid_x * grid_y * grid_z; }
  [[nodiscard]] int motion_features() const { return kNumJoints * 3; }
};

enum class Mode { Train, Eval };

// Parameter-free preprocessing of one sample: voxel pooling, frame striding
// and coordinate normalization. Computed once and reused across epochs.
struct PreparedInputs {
  nn::Matrix<float> text;            // 1 x text_dim
  nn::Matrix<float> scene_features;  // voxels x 6 (normalized xyz mean, rgb mean)
  std::vector<int> scene_voxels;     // voxel index per row
  nn::Matrix<float> motion_features; // strided frames x 66
};

[[nodiscard]] nn::Matrix<float> prepare_text(const TextFeature& t, const ModelConfig& cfg);
[[nodiscard]] nn::Matrix<float> prepare_motion(const MotionSequence& m, const ModelConfig& cfg);
void prepare_scene(const ScenePointCloud& s, const ModelConfig& cfg, nn::Matrix<float>& features,
                   std::vector<int>& voxels);
[[nodiscard]] PreparedInputs prepare_inputs(const TrimodalSample& s, const ModelConfig& cfg);

// Fixed sinusoidal encoding, rows = positions.
[[nodiscard]] nn::Matrix<double> sinusoidal_encoding(int positions, int dim);

template <typename S>
struct EncoderOutput {
  nn::RowVector<S> mu;
  nn::RowVector<S> logvar;
  nn::Matrix<S> residue;
};

// mu + exp(logvar / 2) * noise.
template <typename S>
[[nodiscard]] nn::RowVector<S> reparameterize(const nn::RowVector<S>& mu, const nn::RowVector<S>& logvar,
                                              const nn::RowVector<S>& noise);

// Rows follow source_index(): t, m, s, st, mt, ms.
template <typename S>
struct ModelOutput {
  nn::Matrix<S> z;
  nn::Matrix<S> mu;
  nn::Matrix<S> logvar;
};

template <typename S>
struct ForwardCache;

enum class CrossKind { ST = 0, MT = 1, MS = 2 };

template <typename S>
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  // Same architecture, parameters converted from another scalar type.
  template <typename T>
  [[nodiscard]] static Model from(const Model<T>& other) {
    Model m(other.config(), other.params().template cast<S>());
    return m;
  }
  Model(const ModelConfig& cfg, nn::ParameterSet<S> params);

  [[nodiscard]] const ModelConfig& config() const { return cfg_; }
  [[nodiscard]] const nn::ParameterSet<S>& params() const { return params_; }
  [[nodiscard]] nn::ParameterSet<S>& params() { return params_; }

  [[nodiscard]] nn::Matrix<S> tokenize_text(const nn::Matrix<float>& text) const;
  [[nodiscard]] nn::Matrix<S> tokenize_scene(const nn::Matrix<float>& features,
                                             const std::vector<int>& voxels) const;
  [[nodiscard]] nn::Matrix<S> tokenize_motion(const nn::Matrix<float>& frames) const;

  [[nodiscard]] EncoderOutput<S> encode_unimodal(const nn::Matrix<S>& tokens, Source which) const;
  [[nodiscard]] EncoderOutput<S> encode_crossmodal(const nn::Matrix<S>& residue_a,
                                                   const nn::Matrix<S>& residue_b, CrossKind which) const;

  // noise: 6 x latent_dim, or null for the mean latents.
  [[nodiscard]] ModelOutput<S> forward(const PreparedInputs& in, const nn::Matrix<S>* noise,
                                       ForwardCache<S>* cache) const;
  // dz: gradients w.r.t. the six latents. dmu / dlogvar are optional extra
  // terms (regularizers); pass empty matrices to skip.
  void backward(const ForwardCache<S>& cache, const nn::Matrix<S>& dz, const nn::Matrix<S>& dmu,
                const nn::Matrix<S>& dlogvar, nn::Gradients<S>& g) const;

  // Scene-only path for placement search and FID helpers.
  [[nodiscard]] nn::RowVector<S> embed_scene(const ScenePointCloud& scene) const;

  // Parameter-name prefixes, one per trainable stack.
  [[nodiscard]] static std::vector<std::string> stack_prefixes(const ModelConfig& cfg);

 private:
  void build(nn::ParameterSet<S>& ps, Rng* rng);

  ModelConfig cfg_;
  nn::ParameterSet<S> params_;

  nn::Linear text_proj_;
  nn::Linear scene_proj_;
  nn::ParamId scene_pos_ = 0;
  nn::Linear motion_proj_;
  nn::Matrix<S> motion_pe_;

  std::array<nn::TransformerEncoder, 3> uni_;
  std::array<nn::Linear, 3> uni_mu_, uni_logvar_;

  std::vector<nn::TransformerEncoder> cross_;
  std::vector<nn::Linear> cross_mu_, cross_logvar_;
  std::array<nn::ParamId, 3> segments_{};  // 2 x dim each

  [[nodiscard]] int cross_slot(CrossKind k) const { return cfg_.shared_cross_encoder ? 0 : static_cast<int>(k); }

  friend struct ForwardCache<S>;
};

template <typename S>
struct ForwardCache {
  std::array<nn::Matrix<S>, 3> inputs;  // raw tokenizer inputs as S (t, m, s)
  std::vector<int> scene_voxels;
  std::array<typename nn::TransformerEncoder::Cache<S>, 3> uni;
  std::array<nn::Matrix<S>, 3> uni_out;
  std::array<typename nn::TransformerEncoder::Cache<S>, 3> cross;
  std::array<nn::Matrix<S>, 3> cross_out;
  ModelOutput<S> out;
  nn::Matrix<S> noise;
};

// The six latents of a sample as tagged vectors.
[[nodiscard]] std::array<LatentVector, kNumSources> embed_all(const Model<float>& model,
                                                              const TrimodalSample& sample, Mode mode,
                                                              Rng* noise_rng = nullptr);

[[nodiscard]] std::array<Source, 2> cross_parts(CrossKind k);
[[nodiscard]] Source cross_source(CrossKind k);

}  // namespace trimodal
