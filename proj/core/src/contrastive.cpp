#include "trimodal/contrastive.hpp"

#include <algorithm>
#include <cmath>

#include "trimodal/error.hpp"

namespace trimodal {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::WithoutCrossModal: return "without_cross_modal";
    case Variant::WithoutSingle: return "without_single";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "full") return Variant::Full;
  if (name == "without_cross_modal") return Variant::WithoutCrossModal;
  if (name == "without_single") return Variant::WithoutSingle;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

namespace {

bool is_pair_source(Source s) { return source_index(s) >= 3; }

// Unimodal components of a pair source.
std::array<Source, 2> components(Source s) {
  switch (s) {
    case Source::ST: return {Source::S, Source::T};
    case Source::MT: return {Source::M, Source::T};
    case Source::MS: return {Source::M, Source::S};
    default: return {s, s};
  }
}

bool contains_component(Source pair, Source single) {
  const auto c = components(pair);
  return c[0] == single || c[1] == single;
}

}  // namespace

bool is_degenerate(TermPair p) {
  if (is_pair_source(p.i) && !is_pair_source(p.j)) return contains_component(p.i, p.j);
  if (is_pair_source(p.j) && !is_pair_source(p.i)) return contains_component(p.j, p.i);
  return false;
}

TermSet TermSet::make(std::vector<TermPair> pairs, Variant variant) {
  for (std::size_t a = 0; a < pairs.size(); ++a) {
    const auto& p = pairs[a];
    const std::string tag = "(" + std::string(source_name(p.i)) + "," + std::string(source_name(p.j)) + ")";
    if (p.i == p.j) throw ConfigError("self pair " + tag + " in term set");
    if (is_degenerate(p)) throw ConfigError("degenerate pair " + tag + " in term set");
    for (std::size_t b = 0; b < a; ++b) {
      if (pairs[b] == p) throw ConfigError("duplicate pair " + tag + " in term set");
    }
  }
  return TermSet{std::move(pairs), variant};
}

bool TermSet::uses(Source s) const {
  return std::any_of(pairs.begin(), pairs.end(), [s](const TermPair& p) { return p.i == s || p.j == s; });
}

TermSet build_term_set(Variant v) {
  using enum Source;
  switch (v) {
    case Variant::Full: return TermSet::make({{T, S}, {M, T}, {M, S}, {ST, M}, {MT, S}, {MS, T}}, v);
    case Variant::WithoutCrossModal: return TermSet::make({{T, S}, {M, T}, {M, S}}, v);
    case Variant::WithoutSingle: return TermSet::make({{ST, M}, {MT, S}, {MS, T}}, v);
  }
  throw ConfigError("unknown variant");
}

namespace {

Eigen::VectorXd row_norms(const Eigen::MatrixXd& m, const char* side) {
  Eigen::VectorXd n(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    n(r) = m.row(r).norm();
    if (!(n(r) > 0.0)) throw NumericError(std::string("zero-norm latent at ") + side + " row " + std::to_string(r));
  }
  return n;
}

}  // namespace

Eigen::MatrixXd cosine_matrix(const Eigen::MatrixXd& u, const Eigen::MatrixXd& w) {
  if (u.rows() != w.rows()) throw ConfigError("cosine_matrix: batch sizes differ");
  if (u.cols() != w.cols()) throw ConfigError("cosine_matrix: latent dims differ");
  const Eigen::VectorXd nu = row_norms(u, "query");
  const Eigen::VectorXd nw = row_norms(w, "key");
  Eigen::MatrixXd c = (nu.cwiseInverse().asDiagonal() * u) * (nw.cwiseInverse().asDiagonal() * w).transpose();
  return c.cwiseMax(-1.0).cwiseMin(1.0);
}

SimilarityMatrix cosine_matrix(const std::vector<LatentVector>& a, const std::vector<LatentVector>& b) {
  if (a.size() != b.size()) throw ConfigError("cosine_matrix: batch sizes differ");
  if (a.empty()) throw ConfigError("cosine_matrix: empty batch");
  const auto d = static_cast<Eigen::Index>(a.front().values.size());
  Eigen::MatrixXd u(static_cast<Eigen::Index>(a.size()), d), w(static_cast<Eigen::Index>(b.size()), d);
  SimilarityMatrix out;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (static_cast<Eigen::Index>(a[r].values.size()) != d || static_cast<Eigen::Index>(b[r].values.size()) != d) {
      throw ConfigError("cosine_matrix: latent dims differ");
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      u(static_cast<Eigen::Index>(r), k) = a[r].values[static_cast<std::size_t>(k)];
      w(static_cast<Eigen::Index>(r), k) = b[r].values[static_cast<std::size_t>(k)];
    }
    out.ids.push_back(a[r].sample_id);
  }
  try {
    out.values = cosine_matrix(u, w);
  } catch (const NumericError&) {
    for (std::size_t r = 0; r < a.size(); ++r) {
      if (u.row(static_cast<Eigen::Index>(r)).norm() == 0.0) throw NumericError("zero-norm latent for sample '" + a[r].sample_id + "'");
      if (w.row(static_cast<Eigen::Index>(r)).norm() == 0.0) throw NumericError("zero-norm latent for sample '" + b[r].sample_id + "'");
    }
    throw;
  }
  out.pair = {a.front().source, b.front().source};
  return out;
}

double info_nce(const Eigen::MatrixXd& c, double tau, Eigen::MatrixXd* dc) {
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  if (c.rows() != c.cols() || c.rows() == 0) throw ConfigError("info_nce needs a non-empty square matrix");
  const Eigen::Index n = c.rows();
  const Eigen::MatrixXd logits = c / tau;
  Eigen::MatrixXd prow(n, n), pcol(n, n);
  double loss = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    const double mx = logits.row(a).maxCoeff();
    prow.row(a) = (logits.row(a).array() - mx).exp();
    const double z = prow.row(a).sum();
    prow.row(a) /= z;
    loss += 0.5 * -(logits(a, a) - mx - std::log(z));
  }
  for (Eigen::Index b = 0; b < n; ++b) {
    const double mx = logits.col(b).maxCoeff();
    pcol.col(b) = (logits.col(b).array() - mx).exp();
    const double z = pcol.col(b).sum();
    pcol.col(b) /= z;
    loss += 0.5 * -(logits(b, b) - mx - std::log(z));
  }
  if (dc) {
    *dc = (prow + pcol) / (2.0 * tau);
    dc->diagonal().array() -= 1.0 / tau;
  }
  return loss;
}

namespace {

// d cos(u_a, w_b) back to u and w, given dL/dC.
void cosine_backward(const Eigen::MatrixXd& u, const Eigen::MatrixXd& w, const Eigen::MatrixXd& dc,
                     Eigen::MatrixXd& du, Eigen::MatrixXd& dw) {
  const Eigen::VectorXd nu = row_norms(u, "query");
  const Eigen::VectorXd nw = row_norms(w, "key");
  const Eigen::MatrixXd uh = nu.cwiseInverse().asDiagonal() * u;
  const Eigen::MatrixXd wh = nw.cwiseInverse().asDiagonal() * w;
  const Eigen::MatrixXd duh = dc * wh;
  const Eigen::MatrixXd dwh = dc.transpose() * uh;
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    du.row(r) += (duh.row(r) - duh.row(r).dot(uh.row(r)) * uh.row(r)) / nu(r);
    dw.row(r) += (dwh.row(r) - dwh.row(r).dot(wh.row(r)) * wh.row(r)) / nw(r);
  }
}

}  // namespace

LossBreakdown total_loss(const LatentBatch& latents, const TermSet& terms, double tau, LatentBatch* grads) {
  if (terms.pairs.empty()) throw ConfigError("empty term set");
  if (grads) {
    for (int s = 0; s < kNumSources; ++s) (*grads)[s] = Eigen::MatrixXd::Zero(latents[s].rows(), latents[s].cols());
  }
  LossBreakdown out;
  const double k = static_cast<double>(terms.pairs.size());
  for (const auto& p : terms.pairs) {
    const auto& u = latents[source_index(p.i)];
    const auto& w = latents[source_index(p.j)];
    for (Source s : {p.i, p.j}) {
      if (latents[source_index(s)].size() == 0) {
        throw ConfigError("missing latent source '" + std::string(source_name(s)) + "' for pair (" +
                          std::string(source_name(p.i)) + "," + std::string(source_name(p.j)) + ")");
      }
    }
    const double n = static_cast<double>(u.rows());
    const Eigen::MatrixXd c = cosine_matrix(u, w);
    Eigen::MatrixXd dc;
    const double l = info_nce(c, tau, grads ? &dc : nullptr) / n;
    out.per_pair.push_back(l);
    out.total += l / k;
    if (grads) {
      dc /= n * k;
      cosine_backward(u, w, dc, (*grads)[source_index(p.i)], (*grads)[source_index(p.j)]);
    }
  }
  return out;
}

double total_loss(const std::vector<SimilarityMatrix>& matrices, double tau) {
  if (matrices.empty()) throw ConfigError("no similarity matrices");
  double sum = 0.0;
  for (const auto& m : matrices) sum += info_nce(m.values, tau) / static_cast<double>(m.values.rows());
  return sum / static_cast<double>(matrices.size());
}

}  // namespace trimodal
