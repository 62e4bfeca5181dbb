#include "trimodal/model.hpp"

#include <cmath>

#include "trimodal/error.hpp"

namespace trimodal {

using nn::Matrix;
using nn::RowVector;

namespace {

constexpr std::array<const char*, 3> kUniNames = {"t", "m", "s"};
constexpr std::array<const char*, 3> kCrossNames = {"st", "mt", "ms"};
constexpr int kPrecomputedPositions = 256;
constexpr double kLogvarBiasInit = -4.0;

template <typename S>
Matrix<S> row_of(const Matrix<S>& m, Eigen::Index r) {
  return m.row(r);
}

// d/du of u / |u|, applied to g.
template <typename S>
RowVector<S> normalize_backward(const RowVector<S>& u, const RowVector<S>& g) {
  const S n = u.norm();
  const RowVector<S> uh = u / n;
  return (g - g.dot(uh) * uh) / n;
}

}  // namespace

std::array<Source, 2> cross_parts(CrossKind k) {
  switch (k) {
    case CrossKind::ST: return {Source::S, Source::T};
    case CrossKind::MT: return {Source::M, Source::T};
    case CrossKind::MS: return {Source::M, Source::S};
  }
  throw ConfigError("unknown cross-modal encoder");
}

Source cross_source(CrossKind k) {
  switch (k) {
    case CrossKind::ST: return Source::ST;
    case CrossKind::MT: return Source::MT;
    case CrossKind::MS: return Source::MS;
  }
  throw ConfigError("unknown cross-modal encoder");
}

template <typename S>
RowVector<S> reparameterize(const RowVector<S>& mu, const RowVector<S>& logvar, const RowVector<S>& noise) {
  return mu.array() + (logvar.array() * S(0.5)).exp() * noise.array();
}

template <typename S>
Model<S>::Model(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.init_seed);
  build(params_, &rng);
}

template <typename S>
Model<S>::Model(const ModelConfig& cfg, nn::ParameterSet<S> params) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.init_seed);
  nn::ParameterSet<S> layout;
  build(layout, &rng);
  if (layout.size() != params.size()) throw FormatError("parameter count does not match model config");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout.name(i) != params.name(i) || layout[i].rows() != params[i].rows() ||
        layout[i].cols() != params[i].cols()) {
      throw FormatError("parameter '" + params.name(i) + "' does not match model config");
    }
  }
  params_ = std::move(params);
}

template <typename S>
void Model<S>::build(nn::ParameterSet<S>& ps, Rng* rng) {
  const int D = cfg_.token_dim;
  const int d = cfg_.latent_dim;
  const double head_std = 1.0 / std::sqrt(static_cast<double>(D));

  text_proj_ = nn::Linear::create(ps, "tok_t.proj", cfg_.text_dim, cfg_.text_tokens * D, *rng, 1.0);
  motion_proj_ = nn::Linear::create(ps, "tok_m.proj", cfg_.motion_features(), D, *rng,
                                    1.0 / std::sqrt(static_cast<double>(cfg_.motion_features())));
  scene_proj_ = nn::Linear::create(ps, "tok_s.proj", 6, D, *rng, 1.0 / std::sqrt(6.0));
  scene_pos_ = ps.add("tok_s.pos", nn::random_matrix<S>(cfg_.voxel_count(), D, 0.2, *rng));
  motion_pe_ = sinusoidal_encoding(kPrecomputedPositions, D).template cast<S>();

  for (int i = 0; i < 3; ++i) {
    const std::string name = std::string("enc_") + kUniNames[i];
    uni_[i] = nn::TransformerEncoder::create(ps, name, D, cfg_.layers, cfg_.heads, cfg_.ffn_dim, *rng);
    uni_mu_[i] = nn::Linear::create(ps, name + ".mu", D, d, *rng, head_std);
    uni_logvar_[i] = nn::Linear::create(ps, name + ".logvar", D, d, *rng, 0.1 * head_std);
    ps[uni_logvar_[i].b].setConstant(S(kLogvarBiasInit));
  }

  cross_.clear();
  cross_mu_.clear();
  cross_logvar_.clear();
  if (!cfg_.cross_modal) return;
  const int encoders = cfg_.shared_cross_encoder ? 1 : 3;
  for (int k = 0; k < encoders; ++k) {
    const std::string name = cfg_.shared_cross_encoder ? "cross_shared" : std::string("cross_") + kCrossNames[k];
    cross_.push_back(nn::TransformerEncoder::create(ps, name, D, cfg_.layers, cfg_.heads, cfg_.ffn_dim, *rng));
    cross_mu_.push_back(nn::Linear::create(ps, name + ".mu", D, d, *rng, head_std));
    cross_logvar_.push_back(nn::Linear::create(ps, name + ".logvar", D, d, *rng, 0.1 * head_std));
    ps[cross_logvar_.back().b].setConstant(S(kLogvarBiasInit));
  }
  for (int k = 0; k < 3; ++k) {
    const std::string name = cfg_.shared_cross_encoder ? std::string("cross_shared.seg_") + kCrossNames[k]
                                                       : std::string("cross_") + kCrossNames[k] + ".seg";
    segments_[k] = ps.add(name, nn::random_matrix<S>(2, D, 1.0, *rng));
  }
}

template <typename S>
std::vector<std::string> Model<S>::stack_prefixes(const ModelConfig& cfg) {
  std::vector<std::string> out = {"tok_t.", "tok_m.", "tok_s.", "enc_t.", "enc_m.", "enc_s."};
  if (cfg.cross_modal) {
    if (cfg.shared_cross_encoder) {
      out.push_back("cross_shared.");
    } else {
      for (const char* n : kCrossNames) out.push_back(std::string("cross_") + n + ".");
    }
  }
  return out;
}

template <typename S>
Matrix<S> Model<S>::tokenize_text(const Matrix<float>& text) const {
  const Matrix<S> flat = text_proj_.forward(params_, Matrix<S>(text.template cast<S>()));
  return Eigen::Map<const Matrix<S>>(flat.data(), cfg_.text_tokens, cfg_.token_dim);
}

template <typename S>
Matrix<S> Model<S>::tokenize_scene(const Matrix<float>& features, const std::vector<int>& voxels) const {
  Matrix<S> tokens = scene_proj_.forward(params_, Matrix<S>(features.template cast<S>()));
  for (std::size_t r = 0; r < voxels.size(); ++r) {
    tokens.row(static_cast<Eigen::Index>(r)) += params_[scene_pos_].row(voxels[r]);
  }
  return tokens;
}

template <typename S>
Matrix<S> Model<S>::tokenize_motion(const Matrix<float>& frames) const {
  Matrix<S> tokens = motion_proj_.forward(params_, Matrix<S>(frames.template cast<S>()));
  if (tokens.rows() <= motion_pe_.rows()) {
    tokens += motion_pe_.topRows(tokens.rows());
  } else {
    tokens += sinusoidal_encoding(static_cast<int>(tokens.rows()), cfg_.token_dim).template cast<S>();
  }
  return tokens;
}

template <typename S>
EncoderOutput<S> Model<S>::encode_unimodal(const Matrix<S>& tokens, Source which) const {
  const int i = source_index(which);
  if (i > 2) throw ConfigError("not a unimodal source");
  const Matrix<S> out = uni_[i].forward<S>(params_, tokens, nullptr);
  EncoderOutput<S> r;
  r.mu = uni_mu_[i].forward(params_, row_of(out, 0));
  r.logvar = uni_logvar_[i].forward(params_, row_of(out, 1));
  r.residue = out.bottomRows(out.rows() - 2);
  return r;
}

template <typename S>
EncoderOutput<S> Model<S>::encode_crossmodal(const Matrix<S>& a, const Matrix<S>& b, CrossKind which) const {
  if (!cfg_.cross_modal) throw ConfigError("model has no cross-modal encoders");
  if (a.rows() == 0 || b.rows() == 0) throw ConfigError("cross-modal encoder needs non-empty residues");
  const int k = static_cast<int>(which);
  const int slot = cross_slot(which);
  const Matrix<S>& seg = params_[segments_[k]];
  Matrix<S> x(a.rows() + b.rows(), cfg_.token_dim);
  x.topRows(a.rows()) = a.rowwise() + seg.row(0);
  x.bottomRows(b.rows()) = b.rowwise() + seg.row(1);
  const Matrix<S> out = cross_[slot].forward<S>(params_, x, nullptr);
  EncoderOutput<S> r;
  r.mu = cross_mu_[slot].forward(params_, row_of(out, 0));
  r.logvar = cross_logvar_[slot].forward(params_, row_of(out, 1));
  r.residue = out.bottomRows(out.rows() - 2);
  return r;
}

template <typename S>
ModelOutput<S> Model<S>::forward(const PreparedInputs& in, const Matrix<S>* noise, ForwardCache<S>* cache) const {
  const int d = cfg_.latent_dim;
  if (noise && (noise->rows() != kNumSources || noise->cols() != d)) throw ConfigError("noise must be 6 x latent_dim");
  ModelOutput<S> out;
  out.mu.setZero(kNumSources, d);
  out.logvar.setZero(kNumSources, d);
  out.z.setZero(kNumSources, d);

  std::array<Matrix<S>, 3> tokens = {tokenize_text(in.text), tokenize_motion(in.motion_features),
                                     tokenize_scene(in.scene_features, in.scene_voxels)};
  std::array<Matrix<S>, 3> uni_out;
  for (int i = 0; i < 3; ++i) {
    uni_out[i] = uni_[i].forward(params_, tokens[i], cache ? &cache->uni[i] : nullptr);
    out.mu.row(i) = uni_mu_[i].forward(params_, row_of(uni_out[i], 0));
    out.logvar.row(i) = uni_logvar_[i].forward(params_, row_of(uni_out[i], 1));
  }

  std::array<Matrix<S>, 3> cross_out;
  if (cfg_.cross_modal) {
    for (int k = 0; k < 3; ++k) {
      const auto parts = cross_parts(static_cast<CrossKind>(k));
      const Matrix<S>& ra = uni_out[source_index(parts[0])];
      const Matrix<S>& rb = uni_out[source_index(parts[1])];
      const Eigen::Index na = ra.rows() - 2;
      const Eigen::Index nb = rb.rows() - 2;
      const Matrix<S>& seg = params_[segments_[k]];
      Matrix<S> x(na + nb, cfg_.token_dim);
      x.topRows(na) = ra.bottomRows(na).rowwise() + seg.row(0);
      x.bottomRows(nb) = rb.bottomRows(nb).rowwise() + seg.row(1);
      const int slot = cross_slot(static_cast<CrossKind>(k));
      cross_out[k] = cross_[slot].forward(params_, x, cache ? &cache->cross[k] : nullptr);
      out.mu.row(3 + k) = cross_mu_[slot].forward(params_, row_of(cross_out[k], 0));
      out.logvar.row(3 + k) = cross_logvar_[slot].forward(params_, row_of(cross_out[k], 1));
    }
    out.z = out.mu;
    if (noise) out.z.array() += (out.logvar.array() * S(0.5)).exp() * noise->array();
  } else {
    for (int i = 0; i < 3; ++i) {
      out.z.row(i) = out.mu.row(i);
      if (noise) out.z.row(i) = reparameterize<S>(out.mu.row(i), out.logvar.row(i), noise->row(i));
    }
    // Without cross-modal encoders the pair latents are averages of the
    // normalized unimodal latents.
    for (int k = 0; k < 3; ++k) {
      const auto parts = cross_parts(static_cast<CrossKind>(k));
      const int a = source_index(parts[0]);
      const int b = source_index(parts[1]);
      out.z.row(3 + k) = S(0.5) * (out.z.row(a).normalized() + out.z.row(b).normalized());
      out.mu.row(3 + k) = S(0.5) * (out.mu.row(a).normalized() + out.mu.row(b).normalized());
    }
  }
  if (!out.z.allFinite()) throw NumericError("non-finite latent");

  if (cache) {
    cache->inputs = {in.text.template cast<S>(), in.motion_features.template cast<S>(),
                     in.scene_features.template cast<S>()};
    cache->scene_voxels = in.scene_voxels;
    cache->uni_out = std::move(uni_out);
    cache->cross_out = std::move(cross_out);
    cache->out = out;
    cache->noise = noise ? *noise : Matrix<S>::Zero(kNumSources, d);
  }
  return out;
}

template <typename S>
void Model<S>::backward(const ForwardCache<S>& c, const Matrix<S>& dz_in, const Matrix<S>& dmu_extra,
                        const Matrix<S>& dlogvar_extra, nn::Gradients<S>& g) const {
  const int D = cfg_.token_dim;
  Matrix<S> dz = dz_in;
  if (!cfg_.cross_modal) {
    for (int k = 0; k < 3; ++k) {
      const auto parts = cross_parts(static_cast<CrossKind>(k));
      for (Source p : parts) {
        const int i = source_index(p);
        dz.row(i) += normalize_backward<S>(c.out.z.row(i), S(0.5) * dz.row(3 + k));
      }
      dz.row(3 + k).setZero();
    }
  }
  const int active = cfg_.cross_modal ? kNumSources : 3;
  Matrix<S> dmu = dz.topRows(active);
  Matrix<S> dlv = (dz.topRows(active).array() * c.noise.topRows(active).array() * S(0.5) *
                   (c.out.logvar.topRows(active).array() * S(0.5)).exp())
                      .matrix();
  if (dmu_extra.size() > 0) dmu += dmu_extra.topRows(active);
  if (dlogvar_extra.size() > 0) dlv += dlogvar_extra.topRows(active);

  std::array<Matrix<S>, 3> duni;
  for (int i = 0; i < 3; ++i) duni[i] = Matrix<S>::Zero(c.uni_out[i].rows(), D);

  if (cfg_.cross_modal) {
    for (int k = 0; k < 3; ++k) {
      const int slot = cross_slot(static_cast<CrossKind>(k));
      Matrix<S> dout = Matrix<S>::Zero(c.cross_out[k].rows(), D);
      dout.row(0) = cross_mu_[slot].backward(params_, row_of(c.cross_out[k], 0), row_of(dmu, 3 + k), g);
      dout.row(1) = cross_logvar_[slot].backward(params_, row_of(c.cross_out[k], 1), row_of(dlv, 3 + k), g);
      const Matrix<S> dx = cross_[slot].backward(params_, c.cross[k], dout, g);
      const auto parts = cross_parts(static_cast<CrossKind>(k));
      const int a = source_index(parts[0]);
      const int b = source_index(parts[1]);
      const Eigen::Index na = c.uni_out[a].rows() - 2;
      const Eigen::Index nb = c.uni_out[b].rows() - 2;
      g[segments_[k]].row(0) += dx.topRows(na).colwise().sum();
      g[segments_[k]].row(1) += dx.bottomRows(nb).colwise().sum();
      duni[a].bottomRows(na) += dx.topRows(na);
      duni[b].bottomRows(nb) += dx.bottomRows(nb);
    }
  }

  std::array<Matrix<S>, 3> dtok;
  for (int i = 0; i < 3; ++i) {
    duni[i].row(0) += uni_mu_[i].backward(params_, row_of(c.uni_out[i], 0), row_of(dmu, i), g);
    duni[i].row(1) += uni_logvar_[i].backward(params_, row_of(c.uni_out[i], 1), row_of(dlv, i), g);
    dtok[i] = uni_[i].backward(params_, c.uni[i], duni[i], g);
  }

  const Matrix<S> dtext = Eigen::Map<const Matrix<S>>(dtok[0].data(), 1, dtok[0].size());
  (void)text_proj_.backward(params_, c.inputs[0], dtext, g);
  (void)motion_proj_.backward(params_, c.inputs[1], dtok[1], g);
  (void)scene_proj_.backward(params_, c.inputs[2], dtok[2], g);
  for (std::size_t r = 0; r < c.scene_voxels.size(); ++r) {
    g[scene_pos_].row(c.scene_voxels[r]) += dtok[2].row(static_cast<Eigen::Index>(r));
  }
}

template <typename S>
RowVector<S> Model<S>::embed_scene(const ScenePointCloud& scene) const {
  Matrix<float> features;
  std::vector<int> voxels;
  prepare_scene(scene, cfg_, features, voxels);
  return encode_unimodal(tokenize_scene(features, voxels), Source::S).mu;
}

std::array<LatentVector, kNumSources> embed_all(const Model<float>& model, const TrimodalSample& sample, Mode mode,
                                                Rng* noise_rng) {
  const PreparedInputs in = prepare_inputs(sample, model.config());
  Matrix<float> noise;
  if (mode == Mode::Train) {
    if (!noise_rng) throw ConfigError("train mode needs a noise generator");
    noise.resize(kNumSources, model.config().latent_dim);
    for (Eigen::Index i = 0; i < noise.rows(); ++i) {
      for (Eigen::Index j = 0; j < noise.cols(); ++j) noise(i, j) = static_cast<float>(noise_rng->normal());
    }
  }
  const ModelOutput<float> out = model.forward(in, mode == Mode::Train ? &noise : nullptr, nullptr);
  std::array<LatentVector, kNumSources> latents;
  for (int i = 0; i < kNumSources; ++i) {
    latents[i].source = kAllSources[i];
    latents[i].sample_id = sample.id;
    latents[i].values.assign(out.z.row(i).data(), out.z.row(i).data() + out.z.cols());
  }
  return latents;
}

template class Model<float>;
template class Model<double>;
template RowVector<float> reparameterize<float>(const RowVector<float>&, const RowVector<float>&,
                                                const RowVector<float>&);
template RowVector<double> reparameterize<double>(const RowVector<double>&, const RowVector<double>&,
                                                  const RowVector<double>&);

}  // namespace trimodal
