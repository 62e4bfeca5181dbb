#include "test_support.hpp"

#include <algorithm>
#include <cmath>

#include "trimodal/random.hpp"
#include "trimodal/trainer.hpp"

namespace trimodal::fixtures {

GeneratorConfig tiny_generator(std::uint64_t seed) {
  GeneratorConfig g;
  g.seed = seed;
  g.points_per_object = 24;
  g.floor_points = 64;
  g.frames = 12;
  g.samples_per_scene = 2;
  return g;
}

std::vector<TrimodalSample> tiny_samples(int n, std::uint64_t seed) {
  return gen_split(tiny_generator(seed), n, 1, "t");
}

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.latent_dim = 4;
  c.token_dim = 8;
  c.layers = 1;
  c.heads = 2;
  c.ffn_dim = 16;
  c.text_dim = kDefaultTextDim;
  c.text_tokens = 2;
  c.grid_x = 2;
  c.grid_y = 2;
  c.grid_z = 2;
  c.motion_stride = 4;
  c.max_tokens = 8;
  c.init_seed = 5;
  return c;
}

double batch_loss(const Model<double>& model, const std::vector<PreparedInputs>& inputs,
                  const std::vector<nn::Matrix<double>>& noise, const TermSet& terms, double tau,
                  nn::Gradients<double>* grads) {
  const int d = model.config().latent_dim;
  const auto n = static_cast<Eigen::Index>(inputs.size());
  std::vector<ForwardCache<double>> caches(inputs.size());
  LatentBatch latents;
  for (int s = 0; s < kNumSources; ++s) {
    if (terms.uses(kAllSources[s])) latents[s].resize(n, d);
  }
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto i = static_cast<std::size_t>(b);
    const auto out = model.forward(inputs[i], &noise[i], grads ? &caches[i] : nullptr);
    for (int s = 0; s < kNumSources; ++s) {
      if (latents[s].size() > 0) latents[s].row(b) = out.z.row(s);
    }
  }
  LatentBatch dl;
  const double loss = total_loss(latents, terms, tau, grads ? &dl : nullptr).total;
  if (grads) {
    for (Eigen::Index b = 0; b < n; ++b) {
      nn::Matrix<double> dz = nn::Matrix<double>::Zero(kNumSources, d);
      for (int s = 0; s < kNumSources; ++s) {
        if (dl[s].size() > 0) dz.row(s) = dl[s].row(b);
      }
      model.backward(caches[static_cast<std::size_t>(b)], dz, {}, {}, *grads);
    }
  }
  return loss;
}

GradCheckResult gradient_check(const ModelConfig& cfg, const std::vector<TrimodalSample>& samples,
                               Variant variant, double tau, double h) {
  const ModelConfig mc = model_config_for(cfg, variant);
  Model<double> model = Model<double>::from(Model<float>(mc));
  const TermSet terms = build_term_set(variant);

  std::vector<PreparedInputs> inputs;
  std::vector<nn::Matrix<double>> noise;
  Rng rng(11);
  for (const auto& s : samples) {
    inputs.push_back(prepare_inputs(s, mc));
    nn::Matrix<double> e(kNumSources, mc.latent_dim);
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = rng.normal();
    noise.push_back(e);
  }

  nn::Gradients<double> analytic(model.params());
  batch_loss(model, inputs, noise, terms, tau, &analytic);

  GradCheckResult res;
  auto& ps = model.params();
  std::vector<nn::Matrix<double>> numeric_all;
  for (nn::ParamId id = 0; id < ps.size(); ++id) {
    nn::Matrix<double> numeric(ps[id].rows(), ps[id].cols());
    for (Eigen::Index k = 0; k < ps[id].size(); ++k) {
      double& w = ps[id].data()[k];
      const double saved = w;
      w = saved + h;
      const double up = batch_loss(model, inputs, noise, terms, tau, nullptr);
      w = saved - h;
      const double down = batch_loss(model, inputs, noise, terms, tau, nullptr);
      w = saved;
      numeric.data()[k] = (up - down) / (2 * h);
      ++res.checked;
    }
    numeric_all.push_back(std::move(numeric));
  }

  double a2 = 0, n2 = 0, d2 = 0;
  for (nn::ParamId id = 0; id < ps.size(); ++id) {
    const auto& numeric = numeric_all[id];
    TensorGradCheck t{ps.name(id), analytic[id].norm(), numeric.norm(), (analytic[id] - numeric).norm()};
    a2 += t.analytic_norm * t.analytic_norm;
    n2 += t.numeric_norm * t.numeric_norm;
    d2 += t.diff_norm * t.diff_norm;
    res.tensors.push_back(std::move(t));
  }
  const double scale = std::sqrt(a2) + std::sqrt(n2);
  res.global_rel_error = std::sqrt(d2) / std::max(scale, 1e-12);
  // Tensors whose exact gradient vanishes (attention key bias) are compared
  // against the floor instead of their own round-off sized norm.
  const double floor = std::max(1e-6 * scale, 1e-12);
  for (const auto& t : res.tensors) {
    const double rel = t.diff_norm / std::max(t.analytic_norm + t.numeric_norm, floor);
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_param = t.name;
    }
  }
  return res;
}

std::vector<int> oracle_ranks(const EmbeddingStore& store, Source query, Source target,
                              const std::vector<std::size_t>& pool) {
  auto cos = [](std::span<const float> a, std::span<const float> b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += double(a[i]) * double(b[i]);
      aa += double(a[i]) * double(a[i]);
      bb += double(b[i]) * double(b[i]);
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
  };
  std::vector<int> ranks;
  for (std::size_t q : pool) {
    const auto qv = store.latent(q, query);
    const double truth = cos(qv, store.latent(q, target));
    int rank = 1;
    for (std::size_t c : pool) {
      if (c == q) continue;
      const double v = cos(qv, store.latent(c, target));
      if (v > truth || (v == truth && store.ids()[c] < store.ids()[q])) ++rank;
    }
    ranks.push_back(rank);
  }
  return ranks;
}

double frechet_1d(double m1, double s1, double m2, double s2) {
  return (m1 - m2) * (m1 - m2) + s1 * s1 + s2 * s2 - 2 * s1 * s2;
}

std::vector<Eigen::Vector3d> brute_force_lattice(double cell) {
  std::vector<Eigen::Vector3d> out;
  for (int i = -2; i <= 2; ++i) {
    for (int j = -2; j <= 2; ++j) {
      for (int k = -2; k <= 2; ++k) out.emplace_back(i * cell, j * cell, k * cell);
    }
  }
  return out;
}

}  // namespace trimodal::fixtures
