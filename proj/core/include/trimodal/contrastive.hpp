#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "trimodal/core_types.hpp"

namespace trimodal {

enum class Variant { Full, WithoutCrossModal, WithoutSingle };

[[nodiscard]] std::string_view variant_name(Variant v);
[[nodiscard]] Variant parse_variant(std::string_view name);

struct TermPair {
  Source i;
  Source j;

  bool operator==(const TermPair&) const = default;
};

struct TermSet {
  std::vector<TermPair> pairs;
  Variant variant = Variant::Full;

  // Rejects duplicates, self pairs and the collapse-prone (xy, x) / (xy, y) pairs.
  static TermSet make(std::vector<TermPair> pairs, Variant variant);
  [[nodiscard]] bool uses(Source s) const;
};

[[nodiscard]] bool is_degenerate(TermPair p);
[[nodiscard]] TermSet build_term_set(Variant v);

struct SimilarityMatrix {
  Eigen::MatrixXd values;
  TermPair pair{Source::T, Source::T};
  std::vector<std::string> ids;
};

// Rows are samples. Throws NumericError on a zero-norm row.
[[nodiscard]] Eigen::MatrixXd cosine_matrix(const Eigen::MatrixXd& u, const Eigen::MatrixXd& w);
[[nodiscard]] SimilarityMatrix cosine_matrix(const std::vector<LatentVector>& a, const std::vector<LatentVector>& b);

// Batch sum of the symmetric per-sample InfoNCE terms. If dc is non-null it
// receives dL/dC.
[[nodiscard]] double info_nce(const Eigen::MatrixXd& c, double tau, Eigen::MatrixXd* dc = nullptr);

// Latent batches indexed by source_index(); an empty matrix means absent.
using LatentBatch = std::array<Eigen::MatrixXd, kNumSources>;

struct LossBreakdown {
  double total = 0.0;
  std::vector<double> per_pair;  // L_NCE(C_ij) / N, in term-set order
};

// L_tot = (1/|K|) sum_K L_NCE(C_ij) / N. If grads is non-null it receives
// dL_tot/dlatent for every source (zero where unused).
[[nodiscard]] LossBreakdown total_loss(const LatentBatch& latents, const TermSet& terms, double tau,
                                       LatentBatch* grads = nullptr);

// Same aggregation over precomputed similarity matrices.
[[nodiscard]] double total_loss(const std::vector<SimilarityMatrix>& matrices, double tau);

}  // namespace trimodal
