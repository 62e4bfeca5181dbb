#include "trimodal/nn/layers.hpp"

#include <cmath>

#include "trimodal/error.hpp"

namespace trimodal::nn {

namespace {

constexpr double kLayerNormEps = 1e-5;

template <typename S>
bool all_finite(const Matrix<S>& m) {
  return m.allFinite();
}

}  // namespace

template <typename S>
Matrix<S> random_matrix(int rows, int cols, double std, Rng& rng) {
  Matrix<S> m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      // Round through float so float and double models start identical.
      m(i, j) = static_cast<S>(static_cast<float>(std * rng.normal()));
    }
  }
  return m;
}

template <typename S>
Matrix<S> gelu(const Matrix<S>& x) {
  const S c = static_cast<S>(std::sqrt(2.0 / M_PI));
  const S a = static_cast<S>(0.044715);
  return x.unaryExpr([=](S v) { return S(0.5) * v * (S(1) + std::tanh(c * (v + a * v * v * v))); });
}

template <typename S>
Matrix<S> gelu_grad(const Matrix<S>& x) {
  const S c = static_cast<S>(std::sqrt(2.0 / M_PI));
  const S a = static_cast<S>(0.044715);
  return x.unaryExpr([=](S v) {
    const S t = std::tanh(c * (v + a * v * v * v));
    return S(0.5) * (S(1) + t) + S(0.5) * v * (S(1) - t * t) * c * (S(1) + S(3) * a * v * v);
  });
}

// Linear

template <typename S>
Linear Linear::create(ParameterSet<S>& ps, const std::string& name, int in, int out, Rng& rng,
                      double init_std) {
  Linear l;
  l.in = in;
  l.out = out;
  l.w = ps.add(name + ".w", random_matrix<S>(in, out, init_std, rng));
  l.b = ps.add(name + ".b", Matrix<S>::Zero(1, out));
  return l;
}

template <typename S>
Matrix<S> Linear::forward(const ParameterSet<S>& ps, const Matrix<S>& x) const {
  Matrix<S> y = x * ps[w];
  y.rowwise() += ps[b].row(0);
  return y;
}

template <typename S>
Matrix<S> Linear::backward(const ParameterSet<S>& ps, const Matrix<S>& x, const Matrix<S>& dy,
                           Gradients<S>& g) const {
  g[w].noalias() += x.transpose() * dy;
  g[b].row(0) += dy.colwise().sum();
  return dy * ps[w].transpose();
}

// LayerNorm

template <typename S>
LayerNorm LayerNorm::create(ParameterSet<S>& ps, const std::string& name, int dim) {
  LayerNorm ln;
  ln.dim = dim;
  ln.gamma = ps.add(name + ".gamma", Matrix<S>::Ones(1, dim));
  ln.beta = ps.add(name + ".beta", Matrix<S>::Zero(1, dim));
  return ln;
}

template <typename S>
Matrix<S> LayerNorm::forward(const ParameterSet<S>& ps, const Matrix<S>& x, Cache<S>* cache) const {
  const auto n = x.rows();
  Matrix<S> xhat(n, x.cols());
  Eigen::Matrix<S, Eigen::Dynamic, 1> rstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const S mean = x.row(i).mean();
    const auto centered = (x.row(i).array() - mean).matrix();
    const S var = centered.squaredNorm() / static_cast<S>(x.cols());
    rstd(i) = S(1) / std::sqrt(var + static_cast<S>(kLayerNormEps));
    xhat.row(i) = centered * rstd(i);
  }
  Matrix<S> y = (xhat.array().rowwise() * ps[gamma].row(0).array()).matrix();
  y.rowwise() += ps[beta].row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename S>
Matrix<S> LayerNorm::backward(const ParameterSet<S>& ps, const Cache<S>& cache, const Matrix<S>& dy,
                              Gradients<S>& g) const {
  g[gamma].row(0) += (dy.array() * cache.xhat.array()).matrix().colwise().sum();
  g[beta].row(0) += dy.colwise().sum();
  const Matrix<S> dxhat = (dy.array().rowwise() * ps[gamma].row(0).array()).matrix();
  Matrix<S> dx(dy.rows(), dy.cols());
  const S inv_d = S(1) / static_cast<S>(dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const S m1 = dxhat.row(i).sum() * inv_d;
    const S m2 = dxhat.row(i).dot(cache.xhat.row(i)) * inv_d;
    dx.row(i) = cache.rstd(i) * (dxhat.row(i).array() - m1 - cache.xhat.row(i).array() * m2).matrix();
  }
  return dx;
}

// Attention

template <typename S>
Attention Attention::create(ParameterSet<S>& ps, const std::string& name, int dim, int heads, Rng& rng) {
  if (heads <= 0 || dim % heads != 0) throw ConfigError("token_dim must be divisible by heads");
  const double std = 1.0 / std::sqrt(static_cast<double>(dim));
  Attention a;
  a.heads = heads;
  a.q = Linear::create(ps, name + ".wq", dim, dim, rng, std);
  a.k = Linear::create(ps, name + ".wk", dim, dim, rng, std);
  a.v = Linear::create(ps, name + ".wv", dim, dim, rng, std);
  a.o = Linear::create(ps, name + ".wo", dim, dim, rng, std);
  return a;
}

template <typename S>
Matrix<S> Attention::forward(const ParameterSet<S>& ps, const Matrix<S>& x, Cache<S>* cache) const {
  const int dim = q.out;
  const int dh = dim / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  Matrix<S> qm = q.forward(ps, x);
  Matrix<S> km = k.forward(ps, x);
  Matrix<S> vm = v.forward(ps, x);
  Matrix<S> ctx(x.rows(), dim);
  std::vector<Matrix<S>> probs;
  if (cache) probs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Matrix<S> sc = qm.middleCols(h * dh, dh) * km.middleCols(h * dh, dh).transpose() * scale;
    for (Eigen::Index i = 0; i < sc.rows(); ++i) {
      const S mx = sc.row(i).maxCoeff();
      sc.row(i) = (sc.row(i).array() - mx).exp().matrix();
      sc.row(i) /= sc.row(i).sum();
    }
    ctx.middleCols(h * dh, dh).noalias() = sc * vm.middleCols(h * dh, dh);
    if (cache) probs.push_back(std::move(sc));
  }
  Matrix<S> y = o.forward(ps, ctx);
  if (cache) {
    cache->x = x;
    cache->qm = std::move(qm);
    cache->km = std::move(km);
    cache->vm = std::move(vm);
    cache->ctx = std::move(ctx);
    cache->probs = std::move(probs);
  }
  return y;
}

template <typename S>
Matrix<S> Attention::backward(const ParameterSet<S>& ps, const Cache<S>& c, const Matrix<S>& dy,
                              Gradients<S>& g) const {
  const int dim = q.out;
  const int dh = dim / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  const Matrix<S> dctx = o.backward(ps, c.ctx, dy, g);
  Matrix<S> dq(c.x.rows(), dim), dk(c.x.rows(), dim), dv(c.x.rows(), dim);
  for (int h = 0; h < heads; ++h) {
    const Matrix<S>& p = c.probs[h];
    const auto dctx_h = dctx.middleCols(h * dh, dh);
    Matrix<S> dp = dctx_h * c.vm.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh).noalias() = p.transpose() * dctx_h;
    for (Eigen::Index i = 0; i < dp.rows(); ++i) {
      const S inner = dp.row(i).dot(p.row(i));
      dp.row(i) = (p.row(i).array() * (dp.row(i).array() - inner)).matrix();
    }
    dp *= scale;
    dq.middleCols(h * dh, dh).noalias() = dp * c.km.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = dp.transpose() * c.qm.middleCols(h * dh, dh);
  }
  Matrix<S> dx = q.backward(ps, c.x, dq, g);
  dx += k.backward(ps, c.x, dk, g);
  dx += v.backward(ps, c.x, dv, g);
  return dx;
}

// FeedForward

template <typename S>
FeedForward FeedForward::create(ParameterSet<S>& ps, const std::string& name, int dim, int hidden,
                                Rng& rng) {
  FeedForward f;
  f.fc1 = Linear::create(ps, name + ".fc1", dim, hidden, rng, 1.0 / std::sqrt(static_cast<double>(dim)));
  f.fc2 = Linear::create(ps, name + ".fc2", hidden, dim, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
  return f;
}

template <typename S>
Matrix<S> FeedForward::forward(const ParameterSet<S>& ps, const Matrix<S>& x, Cache<S>* cache) const {
  Matrix<S> pre = fc1.forward(ps, x);
  Matrix<S> act = gelu(pre);
  Matrix<S> y = fc2.forward(ps, act);
  if (cache) {
    cache->x = x;
    cache->pre = std::move(pre);
    cache->act = std::move(act);
  }
  return y;
}

template <typename S>
Matrix<S> FeedForward::backward(const ParameterSet<S>& ps, const Cache<S>& c, const Matrix<S>& dy,
                                Gradients<S>& g) const {
  const Matrix<S> dact = fc2.backward(ps, c.act, dy, g);
  const Matrix<S> dpre = (dact.array() * gelu_grad(c.pre).array()).matrix();
  return fc1.backward(ps, c.x, dpre, g);
}

// Block

template <typename S>
Block Block::create(ParameterSet<S>& ps, const std::string& name, int dim, int heads, int hidden, Rng& rng) {
  Block b;
  b.ln1 = LayerNorm::create(ps, name + ".ln1", dim);
  b.attn = Attention::create(ps, name + ".attn", dim, heads, rng);
  b.ln2 = LayerNorm::create(ps, name + ".ln2", dim);
  b.ffn = FeedForward::create(ps, name + ".ffn", dim, hidden, rng);
  return b;
}

template <typename S>
Matrix<S> Block::forward(const ParameterSet<S>& ps, const Matrix<S>& x, Cache<S>* cache) const {
  Matrix<S> h = x + attn.forward(ps, ln1.forward(ps, x, cache ? &cache->ln1 : nullptr),
                                 cache ? &cache->attn : nullptr);
  Matrix<S> y = h + ffn.forward(ps, ln2.forward(ps, h, cache ? &cache->ln2 : nullptr),
                                cache ? &cache->ffn : nullptr);
  return y;
}

template <typename S>
Matrix<S> Block::backward(const ParameterSet<S>& ps, const Cache<S>& c, const Matrix<S>& dy,
                          Gradients<S>& g) const {
  Matrix<S> dh = dy + ln2.backward(ps, c.ln2, ffn.backward(ps, c.ffn, dy, g), g);
  return dh + ln1.backward(ps, c.ln1, attn.backward(ps, c.attn, dh, g), g);
}

// TransformerEncoder

template <typename S>
TransformerEncoder TransformerEncoder::create(ParameterSet<S>& ps, const std::string& name, int dim,
                                              int layers, int heads, int hidden, Rng& rng) {
  TransformerEncoder e;
  e.name = name;
  e.dim = dim;
  e.queries = ps.add(name + ".queries", random_matrix<S>(2, dim, 1.0, rng));
  for (int l = 0; l < layers; ++l) {
    e.blocks.push_back(Block::create(ps, name + ".block" + std::to_string(l), dim, heads, hidden, rng));
  }
  e.final_ln = LayerNorm::create(ps, name + ".ln_final", dim);
  return e;
}

template <typename S>
Matrix<S> TransformerEncoder::forward(const ParameterSet<S>& ps, const Matrix<S>& tokens,
                                      Cache<S>* cache) const {
  if (tokens.rows() == 0) throw NumericError(name + ": empty token sequence");
  Matrix<S> x(tokens.rows() + 2, dim);
  x.topRows(2) = ps[queries];
  x.bottomRows(tokens.rows()) = tokens;
  if (cache) cache->blocks.resize(blocks.size());
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    x = blocks[l].forward(ps, x, cache ? &cache->blocks[l] : nullptr);
    if (!all_finite(x)) {
      throw NumericError("non-finite activation in " + name + ".block" + std::to_string(l));
    }
  }
  Matrix<S> y = final_ln.forward(ps, x, cache ? &cache->final_ln : nullptr);
  if (!all_finite(y)) throw NumericError("non-finite activation in " + name + ".ln_final");
  return y;
}

template <typename S>
Matrix<S> TransformerEncoder::backward(const ParameterSet<S>& ps, const Cache<S>& c, const Matrix<S>& dy,
                                       Gradients<S>& g) const {
  Matrix<S> dx = final_ln.backward(ps, c.final_ln, dy, g);
  for (std::size_t l = blocks.size(); l-- > 0;) dx = blocks[l].backward(ps, c.blocks[l], dx, g);
  g[queries] += dx.topRows(2);
  return dx.bottomRows(dx.rows() - 2);
}

#define TRIMODAL_INSTANTIATE_NN(S)                                                                        \
  template Matrix<S> random_matrix<S>(int, int, double, Rng&);                                            \
  template Matrix<S> gelu<S>(const Matrix<S>&);                                                           \
  template Matrix<S> gelu_grad<S>(const Matrix<S>&);                                                      \
  template Linear Linear::create<S>(ParameterSet<S>&, const std::string&, int, int, Rng&, double);        \
  template Matrix<S> Linear::forward<S>(const ParameterSet<S>&, const Matrix<S>&) const;                  \
  template Matrix<S> Linear::backward<S>(const ParameterSet<S>&, const Matrix<S>&, const Matrix<S>&,      \
                                         Gradients<S>&) const;                                            \
  template LayerNorm LayerNorm::create<S>(ParameterSet<S>&, const std::string&, int);                     \
  template Matrix<S> LayerNorm::forward<S>(const ParameterSet<S>&, const Matrix<S>&, Cache<S>*) const;    \
  template Matrix<S> LayerNorm::backward<S>(const ParameterSet<S>&, const Cache<S>&, const Matrix<S>&,    \
                                            Gradients<S>&) const;                                         \
  template Attention Attention::create<S>(ParameterSet<S>&, const std::string&, int, int, Rng&);          \
  template Matrix<S> Attention::forward<S>(const ParameterSet<S>&, const Matrix<S>&, Cache<S>*) const;    \
  template Matrix<S> Attention::backward<S>(const ParameterSet<S>&, const Cache<S>&, const Matrix<S>&,    \
                                            Gradients<S>&) const;                                         \
  template FeedForward FeedForward::create<S>(ParameterSet<S>&, const std::string&, int, int, Rng&);      \
  template Matrix<S> FeedForward::forward<S>(const ParameterSet<S>&, const Matrix<S>&, Cache<S>*) const;  \
  template Matrix<S> FeedForward::backward<S>(const ParameterSet<S>&, const Cache<S>&, const Matrix<S>&,  \
                                              Gradients<S>&) const;                                       \
  template Block Block::create<S>(ParameterSet<S>&, const std::string&, int, int, int, Rng&);             \
  template Matrix<S> Block::forward<S>(const ParameterSet<S>&, const Matrix<S>&, Cache<S>*) const;        \
  template Matrix<S> Block::backward<S>(const ParameterSet<S>&, const Cache<S>&, const Matrix<S>&,        \
                                        Gradients<S>&) const;                                             \
  template TransformerEncoder TransformerEncoder::create<S>(ParameterSet<S>&, const std::string&, int,    \
                                                            int, int, int, Rng&);                         \
  template Matrix<S> TransformerEncoder::forward<S>(const ParameterSet<S>&, const Matrix<S>&, Cache<S>*)  \
      const;                                                                                              \
  template Matrix<S> TransformerEncoder::backward<S>(const ParameterSet<S>&, const Cache<S>&,             \
                                                     const Matrix<S>&, Gradients<S>&) const;

TRIMODAL_INSTANTIATE_NN(float)
TRIMODAL_INSTANTIATE_NN(double)

}  // namespace trimodal::nn
