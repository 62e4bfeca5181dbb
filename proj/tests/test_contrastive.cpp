#include <gtest/gtest.h>

#include <cmath>

#include "trimodal/contrastive.hpp"
#include "trimodal/error.hpp"
#include "trimodal/random.hpp"

using namespace trimodal;

namespace {

// Independent per-sample symmetric InfoNCE, summed over the batch.
double oracle_nce(const Eigen::MatrixXd& c, double tau) {
  const auto n = c.rows();
  double total = 0;
  for (Eigen::Index a = 0; a < n; ++a) {
    double row = 0, col = 0;
    for (Eigen::Index b = 0; b < n; ++b) {
      row += std::exp(c(a, b) / tau);
      col += std::exp(c(b, a) / tau);
    }
    total += 0.5 * (-(c(a, a) / tau - std::log(row)) - (c(a, a) / tau - std::log(col)));
  }
  return total;
}

Eigen::MatrixXd random_rows(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

LatentBatch random_batch(int n, int d, std::uint64_t seed) {
  LatentBatch b;
  for (int s = 0; s < kNumSources; ++s) b[s] = random_rows(n, d, seed + s);
  return b;
}

}  // namespace

TEST(TermSets, MatchTheThreeVariants) {
  const auto full = build_term_set(Variant::Full);
  const std::vector<TermPair> expect = {{Source::T, Source::S},  {Source::M, Source::T},  {Source::M, Source::S},
                                        {Source::ST, Source::M}, {Source::MT, Source::S}, {Source::MS, Source::T}};
  EXPECT_EQ(full.pairs, expect);
  EXPECT_EQ(build_term_set(Variant::WithoutCrossModal).pairs,
            std::vector<TermPair>(expect.begin(), expect.begin() + 3));
  EXPECT_EQ(build_term_set(Variant::WithoutSingle).pairs, std::vector<TermPair>(expect.begin() + 3, expect.end()));
  EXPECT_EQ(parse_variant("without_single"), Variant::WithoutSingle);
  EXPECT_THROW((void)parse_variant("nope"), ConfigError);
}

TEST(TermSets, RejectDegenerateSelfAndDuplicatePairs) {
  for (auto [xy, x] : {std::pair{Source::ST, Source::T}, {Source::ST, Source::S}, {Source::MT, Source::M},
                       {Source::MT, Source::T}, {Source::MS, Source::M}, {Source::MS, Source::S}}) {
    EXPECT_TRUE(is_degenerate({xy, x}));
    EXPECT_THROW((void)TermSet::make({{xy, x}}, Variant::Full), ConfigError);
    EXPECT_THROW((void)TermSet::make({{x, xy}}, Variant::Full), ConfigError);
  }
  EXPECT_THROW((void)TermSet::make({{Source::T, Source::T}}, Variant::Full), ConfigError);
  EXPECT_THROW((void)TermSet::make({{Source::T, Source::S}, {Source::T, Source::S}}, Variant::Full), ConfigError);
  EXPECT_FALSE(is_degenerate({Source::ST, Source::M}));
}

TEST(Cosine, ClosedForms) {
  Eigen::MatrixXd u(1, 2), w(1, 2);
  u << 1, 0;
  w << 1, 1;
  w /= std::sqrt(2.0);
  EXPECT_NEAR(cosine_matrix(u, w)(0, 0), 0.70710678, 1e-8);

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_TRUE(cosine_matrix(eye, eye).isApprox(eye));

  const auto a = random_rows(5, 4, 1), b = random_rows(5, 4, 2);
  Eigen::MatrixXd scaled = a;
  scaled.row(2) *= 5;
  EXPECT_LT((cosine_matrix(a, b) - cosine_matrix(scaled, b)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(cosine_matrix(a, b).cwiseAbs().maxCoeff(), 1.0);
}

TEST(Cosine, ZeroVectorNamesTheSample) {
  std::vector<LatentVector> a = {{{1, 0}, Source::T, "x0"}, {{0, 0}, Source::T, "x1"}};
  try {
    (void)cosine_matrix(a, a);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("x1"), std::string::npos);
  }
}

TEST(InfoNce, ClosedForms) {
  EXPECT_NEAR(info_nce(Eigen::MatrixXd::Identity(2, 2), 1.0), 0.62652338, 1e-7);
  EXPECT_NEAR(info_nce(Eigen::MatrixXd::Identity(2, 2), 1.0) / 2, -std::log(std::exp(1.0) / (std::exp(1.0) + 1)), 1e-12);
  for (int n : {2, 5, 32}) {
    EXPECT_NEAR(info_nce(Eigen::MatrixXd::Constant(n, n, 0.3), 0.1), n * std::log(n), 1e-9);
  }
  EXPECT_LT(info_nce(50.0 * Eigen::MatrixXd::Identity(4, 4), 1.0), 1e-9);
}

TEST(InfoNce, MatchesOracleAndFiniteDifferences) {
  const auto c = cosine_matrix(random_rows(6, 3, 5), random_rows(6, 3, 6));
  Eigen::MatrixXd dc;
  const double v = info_nce(c, 0.1, &dc);
  EXPECT_NEAR(v, oracle_nce(c, 0.1), 1e-10);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    Eigen::MatrixXd up = c, down = c;
    up.data()[i] += h;
    down.data()[i] -= h;
    EXPECT_NEAR(dc.data()[i], (oracle_nce(up, 0.1) - oracle_nce(down, 0.1)) / (2 * h), 1e-5);
  }
}

TEST(TotalLoss, ClosedForms) {
  LatentBatch b;
  b[source_index(Source::T)] = Eigen::MatrixXd::Identity(2, 2);
  b[source_index(Source::S)] = Eigen::MatrixXd::Identity(2, 2);
  const auto one = TermSet::make({{Source::T, Source::S}}, Variant::Full);
  EXPECT_NEAR(total_loss(b, one, 1.0).total, 0.31326169, 1e-7);

  // Identical rows in every source: all matrices uniform.
  LatentBatch u;
  for (auto& m : u) m = Eigen::MatrixXd::Ones(7, 3);
  EXPECT_NEAR(total_loss(u, build_term_set(Variant::Full), 0.1).total, std::log(7.0), 1e-9);

  LatentBatch aligned;
  for (auto& m : aligned) m = Eigen::MatrixXd::Identity(4, 4);
  std::vector<SimilarityMatrix> mats;
  for (const auto& p : build_term_set(Variant::Full).pairs) mats.push_back({50.0 * Eigen::MatrixXd::Identity(4, 4), p, {}});
  EXPECT_LT(total_loss(mats, 1.0), 1e-9);
}

TEST(TotalLoss, MissingSourceRejected) {
  LatentBatch b = random_batch(4, 3, 1);
  b[source_index(Source::MS)].resize(0, 0);
  EXPECT_THROW((void)total_loss(b, build_term_set(Variant::Full), 0.1), Error);
  EXPECT_NO_THROW((void)total_loss(b, build_term_set(Variant::WithoutCrossModal), 0.1));
}

TEST(TotalLoss, PermutationInvariant) {
  const auto b = random_batch(6, 4, 9);
  LatentBatch p;
  const std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  for (int s = 0; s < kNumSources; ++s) {
    p[s].resize(6, 4);
    for (int i = 0; i < 6; ++i) p[s].row(i) = b[s].row(perm[i]);
  }
  const auto terms = build_term_set(Variant::Full);
  EXPECT_NEAR(total_loss(b, terms, 0.1).total, total_loss(p, terms, 0.1).total, 1e-12);
}

TEST(TotalLoss, LatentGradientsMatchFiniteDifferences) {
  auto b = random_batch(4, 3, 21);
  const auto terms = build_term_set(Variant::Full);
  LatentBatch g;
  const auto base = total_loss(b, terms, 0.1, &g);
  EXPECT_EQ(base.per_pair.size(), 6u);
  const double h = 1e-6;
  for (int s = 0; s < kNumSources; ++s) {
    for (Eigen::Index i = 0; i < b[s].size(); ++i) {
      const double saved = b[s].data()[i];
      b[s].data()[i] = saved + h;
      const double up = total_loss(b, terms, 0.1).total;
      b[s].data()[i] = saved - h;
      const double down = total_loss(b, terms, 0.1).total;
      b[s].data()[i] = saved;
      EXPECT_NEAR(g[s].data()[i], (up - down) / (2 * h), 1e-6);
    }
  }
}
