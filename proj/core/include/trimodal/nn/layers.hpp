#pragma once

#include <string>
#include <vector>

#include "trimodal/nn/parameters.hpp"
#include "trimodal/random.hpp"

namespace trimodal::nn {

// Parameters are created in a ParameterSet and referenced by id, so the same
// layer object drives float training and double gradient checks.

struct Linear {
  ParamId w = 0;  // in x out
  ParamId b = 0;  // 1 x out
  int in = 0;
  int out = 0;

  template <typename S>
  static Linear create(ParameterSet<S>& ps, const std::string& name, int in, int out, Rng& rng,
                       double init_std);

  // y = x W + b, rows are tokens.
  template <typename S>
  Matrix<S> forward(const ParameterSet<S>& ps, const Matrix<S>& x) const;
  // Accumulates dW, db and returns dx.
  template <typename S>
  Matrix<S> backward(const ParameterSet<S>& ps, const Matrix<S>& x, const Matrix<S>& dy,
                     Gradients<S>& g) const;
};

struct LayerNorm {
  ParamId gamma = 0;
  ParamId beta = 0;
  int dim = 0;

  template <typename S>
  struct Cache {
    Matrix<S> xhat;
    Eigen::Matrix<S, Eigen::Dynamic, 1> rstd;
  };

  template <typename S>
  static LayerNorm create(ParameterSet<S>& ps, const std::string& name, int dim);

  template <typename S>
  Matrix<S> forward(const ParameterSet<S>& ps, const Matrix<S>& x, Cache<S>* cache) const;
  template <typename S>
  Matrix<S> backward(const ParameterSet<S>& ps, const Cache<S>& cache, const Matrix<S>& dy,
                     Gradients<S>& g) const;
};

struct Attention {
  Linear q, k, v, o;
  int heads = 1;

  template <typename S>
  struct Cache {
    Matrix<S> x, qm, km, vm, ctx;
    std::vector<Matrix<S>> probs;  // one n x n block per head
  };

  template <typename S>
  static Attention create(ParameterSet<S>& ps, const std::string& name, int dim, int heads, Rng& rng);

  template <typename S>
  Matrix<S> forward(const ParameterSet<S>& ps, const Matrix<S>& x, Cache<S>* cache) const;
  template <typename S>
  Matrix<S> backward(const ParameterSet<S>& ps, const Cache<S>& cache, const Matrix<S>& dy,
                     Gradients<S>& g) const;
};

struct FeedForward {
  Linear fc1, fc2;

  template <typename S>
  struct Cache {
    Matrix<S> x, pre, act;
  };

  template <typename S>
  static FeedForward create(ParameterSet<S>& ps, const std::string& name, int dim, int hidden, Rng& rng);

  template <typename S>
  Matrix<S> forward(const ParameterSet<S>& ps, const Matrix<S>& x, Cache<S>* cache) const;
  template <typename S>
  Matrix<S> backward(const ParameterSet<S>& ps, const Cache<S>& cache, const Matrix<S>& dy,
                     Gradients<S>& g) const;
};

// Pre-LN transformer block.
struct Block {
  LayerNorm ln1, ln2;
  Attention attn;
  FeedForward ffn;

  template <typename S>
  struct Cache {
    typename LayerNorm::Cache<S> ln1, ln2;
    typename Attention::Cache<S> attn;
    typename FeedForward::Cache<S> ffn;
  };

  template <typename S>
  static Block create(ParameterSet<S>& ps, const std::string& name, int dim, int heads, int hidden,
                      Rng& rng);

  template <typename S>
  Matrix<S> forward(const ParameterSet<S>& ps, const Matrix<S>& x, Cache<S>* cache) const;
  template <typename S>
  Matrix<S> backward(const ParameterSet<S>& ps, const Cache<S>& cache, const Matrix<S>& dy,
                     Gradients<S>& g) const;
};

// Transformer encoder with two learned distribution-query tokens prepended.
// Output rows 0 and 1 are the query outputs, rows 2.. the residue.
struct TransformerEncoder {
  std::string name;
  ParamId queries = 0;  // 2 x dim
  std::vector<Block> blocks;
  LayerNorm final_ln;
  int dim = 0;

  template <typename S>
  struct Cache {
    std::vector<typename Block::Cache<S>> blocks;
    typename LayerNorm::Cache<S> final_ln;
  };

  template <typename S>
  static TransformerEncoder create(ParameterSet<S>& ps, const std::string& name, int dim, int layers,
                                   int heads, int hidden, Rng& rng);

  // tokens: n x dim. Returns (n + 2) x dim.
  template <typename S>
  Matrix<S> forward(const ParameterSet<S>& ps, const Matrix<S>& tokens, Cache<S>* cache) const;
  // Returns d(tokens); query gradients are accumulated into g.
  template <typename S>
  Matrix<S> backward(const ParameterSet<S>& ps, const Cache<S>& cache, const Matrix<S>& dy,
                     Gradients<S>& g) const;
};

template <typename S>
Matrix<S> gelu(const Matrix<S>& x);
template <typename S>
Matrix<S> gelu_grad(const Matrix<S>& x);

template <typename S>
Matrix<S> random_matrix(int rows, int cols, double std, Rng& rng);

}  // namespace trimodal::nn
