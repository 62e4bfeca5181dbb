#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "test_support.hpp"
#include "trimodal/error.hpp"
#include "trimodal/model.hpp"
#include "trimodal/random.hpp"
#include "trimodal/trainer.hpp"

using namespace trimodal;

namespace {

nn::Matrix<float> random_tokens(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  nn::Matrix<float> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal());
  return m;
}

}  // namespace

TEST(Encoders, UnimodalShapes) {
  const ModelConfig c;
  const Model<float> model(c);
  const auto out = model.encode_unimodal(random_tokens(30, c.token_dim, 1), Source::M);
  EXPECT_EQ(out.residue.rows(), 30);
  EXPECT_EQ(out.residue.cols(), c.token_dim);
  EXPECT_EQ(out.mu.size(), c.latent_dim);
  EXPECT_EQ(out.logvar.size(), c.latent_dim);
}

TEST(Encoders, LogvarBoundedAtInit) {
  ModelConfig c;
  c.init_seed = 0;
  const Model<float> model(c);
  for (const auto& s : fixtures::tiny_samples(8)) {
    const auto out = model.forward(prepare_inputs(s, c), nullptr, nullptr);
    EXPECT_TRUE(out.logvar.allFinite());
    EXPECT_LE(out.logvar.cwiseAbs().maxCoeff(), 20.0f);
  }
}

TEST(Encoders, CrossModalShapesAndSegmentOrder) {
  const ModelConfig c;
  const Model<float> model(c);
  const auto a = random_tokens(8, c.token_dim, 2);
  const auto b = random_tokens(30, c.token_dim, 3);
  const auto ab = model.encode_crossmodal(a, b, CrossKind::ST);
  EXPECT_EQ(ab.mu.size(), c.latent_dim);
  EXPECT_EQ(ab.residue.rows(), 38);
  const auto ba = model.encode_crossmodal(b, a, CrossKind::ST);
  EXPECT_GT((ab.mu - ba.mu).norm(), 1e-6f);
  EXPECT_THROW((void)model.encode_crossmodal(nn::Matrix<float>(0, c.token_dim), b, CrossKind::ST), ConfigError);
}

TEST(Encoders, SwappingSegmentEmbeddingsChangesOutput) {
  const ModelConfig c;
  const Model<float> model(c);
  Model<float> swapped(c, model.params());
  auto& seg = swapped.params()[*swapped.params().find("cross_st.seg")];
  seg.row(0).swap(seg.row(1));
  const auto a = random_tokens(8, c.token_dim, 2);
  const auto b = random_tokens(8, c.token_dim, 3);
  const auto x = model.encode_crossmodal(a, b, CrossKind::ST);
  const auto y = swapped.encode_crossmodal(a, b, CrossKind::ST);
  EXPECT_GT((x.mu - y.mu).norm(), 1e-6f);
}

TEST(Encoders, ZeroResiduesCollapseToConstant) {
  const ModelConfig c;
  const Model<float> model(c);
  const nn::Matrix<float> z1 = nn::Matrix<float>::Zero(5, c.token_dim);
  const auto x = model.encode_crossmodal(z1, z1, CrossKind::ST);
  const auto y = model.encode_crossmodal(z1, z1, CrossKind::ST);
  EXPECT_EQ(x.mu, y.mu);
}

TEST(Encoders, NoCouplingAcrossSamples) {
  const ModelConfig c;
  const Model<float> model(c);
  const auto s = fixtures::tiny_samples(2);
  const auto a = embed_all(model, s[0], Mode::Eval);
  (void)embed_all(model, s[1], Mode::Eval);
  const auto b = embed_all(model, s[0], Mode::Eval);
  std::set<Source> tags;
  for (int i = 0; i < kNumSources; ++i) {
    EXPECT_EQ(a[i].values, b[i].values);
    EXPECT_EQ(a[i].values.size(), static_cast<std::size_t>(c.latent_dim));
    tags.insert(a[i].source);
  }
  EXPECT_EQ(tags.size(), 6u);
}

TEST(Encoders, TrainModeNoiseReproducible) {
  const ModelConfig c;
  const Model<float> model(c);
  const auto s = fixtures::tiny_samples(2).front();
  Rng r1(8), r2(8);
  const auto a = embed_all(model, s, Mode::Train, &r1);
  const auto b = embed_all(model, s, Mode::Train, &r2);
  const auto e = embed_all(model, s, Mode::Eval);
  for (int i = 0; i < kNumSources; ++i) EXPECT_EQ(a[i].values, b[i].values);
  EXPECT_NE(a[0].values, e[0].values);
}

TEST(Encoders, Reparameterize) {
  using RV = nn::RowVector<double>;
  RV mu(3);
  mu << 0.5, -1.0, 2.0;
  EXPECT_EQ(reparameterize<double>(mu, RV::Constant(3, 1.7), RV::Zero(3)), mu);
  const RV shifted = reparameterize<double>(mu, RV::Zero(3), RV::Ones(3));
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(shifted(i), mu(i) + 1.0);
  RV noise = RV::Zero(3);
  noise(0) = 1.0;
  const RV z = reparameterize<double>(RV::Zero(3), RV::Constant(3, 2.0 * std::log(3.0)), noise);
  EXPECT_NEAR(z(0), 3.0, 1e-12);
  EXPECT_EQ(z(1), 0.0);
}

TEST(Encoders, WithoutCrossModalHasNoCrossParameters) {
  const auto cfg = model_config_for(ModelConfig{}, Variant::WithoutCrossModal);
  const Model<float> model(cfg);
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    EXPECT_NE(model.params().name(i).rfind("cross", 0), 0u) << model.params().name(i);
  }
}

TEST(Encoders, SharedCrossEncoderKeepsSegmentsPerPair) {
  ModelConfig c;
  c.shared_cross_encoder = true;
  const Model<float> shared(c);
  const Model<float> separate{ModelConfig{}};
  EXPECT_LT(shared.params().scalar_count(), separate.params().scalar_count());
  EXPECT_TRUE(shared.params().find("cross_shared.seg_st").has_value());
  EXPECT_TRUE(shared.params().find("cross_shared.seg_ms").has_value());
}

TEST(Encoders, FloatAndDoubleAgree) {
  const ModelConfig c = fixtures::tiny_model_config();
  const Model<float> f(c);
  const auto d = Model<double>::from(f);
  const auto s = fixtures::tiny_samples(2).front();
  const auto in = prepare_inputs(s, c);
  const auto of = f.forward(in, nullptr, nullptr);
  const auto od = d.forward(in, nullptr, nullptr);
  EXPECT_LT((of.z.cast<double>() - od.z).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Encoders, ParameterShapeMismatchRejected) {
  const ModelConfig c = fixtures::tiny_model_config();
  const Model<float> m(c);
  auto ps = m.params();
  ps[0] = nn::Matrix<float>::Zero(1, 1);
  EXPECT_THROW(Model<float>(c, ps), FormatError);
}
