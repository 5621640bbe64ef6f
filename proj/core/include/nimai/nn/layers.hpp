#pragma once

#include <string>
#include <vector>

#include "nimai/matrix.hpp"
#include "nimai/nn/params.hpp"
#include "nimai/rng.hpp"

namespace nimai::nn {

// All layers follow the same protocol: forward fills a cache, backward
// consumes it, accumulates parameter gradients into the store and returns
// the gradient w.r.t. the layer input. Calling backward on an unfilled
// cache is an error.

double gelu(double x);
double gelu_grad(double x);

struct Dense {
  std::size_t in = 0, out = 0;
  Seg w;  // (out, in) row-major
  Seg b;

  void reg(ParamStore& ps, const std::string& prefix, std::size_t in_dim,
           std::size_t out_dim);
  void init(ParamStore& ps, RngStream& rng) const;
  Mat forward(const ParamStore& ps, const Mat& x) const;
  Mat backward(ParamStore& ps, const Mat& x, const Mat& dout) const;
  std::size_t param_count() const { return out * in + out; }
};

struct LayerNorm {
  std::size_t dim = 0;
  Seg gain, bias;

  struct Cache {
    Mat xhat;
    std::vector<double> inv_std;
    bool filled = false;
  };

  void reg(ParamStore& ps, const std::string& prefix, std::size_t d);
  void init(ParamStore& ps) const;
  Mat forward(const ParamStore& ps, const Mat& x, Cache& cache) const;
  Mat backward(ParamStore& ps, const Cache& cache, const Mat& dout) const;
};

struct EmbeddingTable {
  std::size_t rows = 0, dim = 0;
  Seg table;

  void reg(ParamStore& ps, const std::string& prefix, std::size_t n,
           std::size_t d);
  void init(ParamStore& ps, RngStream& rng) const;
  std::span<const double> row(const ParamStore& ps, std::size_t i) const;
  void add_grad(ParamStore& ps, std::size_t i,
                std::span<const double> g) const;
};

struct MultiHeadAttention {
  std::size_t dim = 0, heads = 0, head_dim = 0;
  Dense q, k, v, o;

  struct Cache {
    Mat x, qm, km, vm, concat;
    std::vector<Mat> probs;  // per head, T x T
    bool filled = false;
  };

  void reg(ParamStore& ps, const std::string& prefix, std::size_t d,
           std::size_t n_heads);
  void init(ParamStore& ps, RngStream& rng) const;
  Mat forward(const ParamStore& ps, const Mat& x, Cache& cache) const;
  Mat backward(ParamStore& ps, const Cache& cache, const Mat& dout) const;
};

struct FeedForward {
  Dense fc1, fc2;

  struct Cache {
    Mat x, pre, act;
    bool filled = false;
  };

  void reg(ParamStore& ps, const std::string& prefix, std::size_t d,
           std::size_t width);
  void init(ParamStore& ps, RngStream& rng) const;
  Mat forward(const ParamStore& ps, const Mat& x, Cache& cache) const;
  Mat backward(ParamStore& ps, const Cache& cache, const Mat& dout) const;
};

// Pre-norm block: x + attn(ln1(x)), then h + ff(ln2(h)).
struct TransformerLayer {
  LayerNorm ln1, ln2;
  MultiHeadAttention attn;
  FeedForward ff;

  struct Cache {
    LayerNorm::Cache ln1c, ln2c;
    MultiHeadAttention::Cache attnc;
    FeedForward::Cache ffc;
    bool filled = false;
  };

  void reg(ParamStore& ps, const std::string& prefix, std::size_t d,
           std::size_t n_heads, std::size_t ff_width);
  void init(ParamStore& ps, RngStream& rng) const;
  Mat forward(const ParamStore& ps, const Mat& x, Cache& cache) const;
  Mat backward(ParamStore& ps, const Cache& cache, const Mat& dout) const;
};

struct TransformerConfig {
  std::size_t n_layers = 1;
  std::size_t n_heads = 2;
  std::size_t ff_width = 32;
  std::size_t model_dim = 16;

  void validate() const;
  std::size_t param_count() const;
};

// Bidirectional encoder stack (no causal mask). Output length always equals
// input length.
struct TransformerStack {
  TransformerConfig cfg;
  std::vector<TransformerLayer> layers;

  struct Cache {
    std::vector<TransformerLayer::Cache> layer_caches;
    bool filled = false;
  };

  void reg(ParamStore& ps, const std::string& prefix,
           const TransformerConfig& config);
  void init(ParamStore& ps, RngStream& rng) const;
  Mat forward(const ParamStore& ps, const Mat& tokens, Cache& cache) const;
  Mat backward(ParamStore& ps, const Cache& cache, const Mat& dout) const;
};

}  // namespace nimai::nn
