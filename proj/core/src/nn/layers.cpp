#include "nimai/nn/layers.hpp"

#include <cmath>
#include <numbers>

namespace nimai::nn {

namespace {
constexpr double kLnEps = 1e-5;

void require(bool cond, const char* msg) {
  if (!cond) throw TrainingError(msg);
}
}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf =
      std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

// ---- Dense ----

void Dense::reg(ParamStore& ps, const std::string& prefix, std::size_t in_dim,
                std::size_t out_dim) {
  in = in_dim;
  out = out_dim;
  w = ps.add(prefix + ".w", out * in);
  b = ps.add(prefix + ".b", out);
}

void Dense::init(ParamStore& ps, RngStream& rng) const {
  // Scaled uniform with fan-in; biases stay zero.
  const double bound = std::sqrt(1.0 / double(in));
  auto wv = ps.values(w);
  for (auto& v : wv) v = rng.uniform(-bound, bound);
  auto bv = ps.values(b);
  for (auto& v : bv) v = 0.0;
}

Mat Dense::forward(const ParamStore& ps, const Mat& x) const {
  require(x.cols == in, "dense: input dimension mismatch");
  Mat wm;
  wm.rows = out;
  wm.cols = in;
  auto wv = ps.values(w);
  wm.a.assign(wv.begin(), wv.end());
  Mat y;
  matmul_nt(x, wm, y);
  auto bv = ps.values(b);
  for (std::size_t r = 0; r < y.rows; ++r)
    for (std::size_t c = 0; c < y.cols; ++c) y(r, c) += bv[c];
  return y;
}

Mat Dense::backward(ParamStore& ps, const Mat& x, const Mat& dout) const {
  require(dout.cols == out && dout.rows == x.rows,
          "dense: gradient shape mismatch");
  auto wv = ps.values(w);
  auto gw = ps.grads(w);
  auto gb = ps.grads(b);
  // dW[j,k] += sum_r dout[r,j] * x[r,k];  db[j] += sum_r dout[r,j]
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* xr = x.a.data() + r * x.cols;
    const double* dr = dout.a.data() + r * dout.cols;
    for (std::size_t j = 0; j < out; ++j) {
      const double d = dr[j];
      if (d == 0.0) continue;
      double* gwj = gw.data() + j * in;
      for (std::size_t k = 0; k < in; ++k) gwj[k] += d * xr[k];
      gb[j] += d;
    }
  }
  // dx = dout * W
  Mat dx(x.rows, in);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* dr = dout.a.data() + r * dout.cols;
    double* dxr = dx.a.data() + r * in;
    for (std::size_t j = 0; j < out; ++j) {
      const double d = dr[j];
      if (d == 0.0) continue;
      const double* wj = wv.data() + j * in;
      for (std::size_t k = 0; k < in; ++k) dxr[k] += d * wj[k];
    }
  }
  return dx;
}

// ---- LayerNorm ----

void LayerNorm::reg(ParamStore& ps, const std::string& prefix,
                    std::size_t d) {
  dim = d;
  gain = ps.add(prefix + ".gain", d);
  bias = ps.add(prefix + ".bias", d);
}

void LayerNorm::init(ParamStore& ps) const {
  auto g = ps.values(gain);
  for (auto& v : g) v = 1.0;
  auto bv = ps.values(bias);
  for (auto& v : bv) v = 0.0;
}

Mat LayerNorm::forward(const ParamStore& ps, const Mat& x,
                       Cache& cache) const {
  require(x.cols == dim, "layernorm: dimension mismatch");
  cache.xhat = Mat(x.rows, x.cols);
  cache.inv_std.assign(x.rows, 0.0);
  auto g = ps.values(gain);
  auto bv = ps.values(bias);
  Mat y(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < dim; ++c) mean += x(r, c);
    mean /= double(dim);
    double var = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      double d = x(r, c) - mean;
      var += d * d;
    }
    var /= double(dim);
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    cache.inv_std[r] = inv;
    for (std::size_t c = 0; c < dim; ++c) {
      double xh = (x(r, c) - mean) * inv;
      cache.xhat(r, c) = xh;
      y(r, c) = g[c] * xh + bv[c];
    }
  }
  cache.filled = true;
  return y;
}

Mat LayerNorm::backward(ParamStore& ps, const Cache& cache,
                        const Mat& dout) const {
  require(cache.filled, "layernorm: backward without forward");
  auto g = ps.values(gain);
  auto gg = ps.grads(gain);
  auto gb = ps.grads(bias);
  Mat dx(dout.rows, dout.cols);
  const double inv_dim = 1.0 / double(dim);
  for (std::size_t r = 0; r < dout.rows; ++r) {
    double sum_dg = 0.0, sum_dg_xhat = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = dout(r, c);
      const double xh = cache.xhat(r, c);
      gg[c] += d * xh;
      gb[c] += d;
      const double dg = d * g[c];
      sum_dg += dg;
      sum_dg_xhat += dg * xh;
    }
    const double inv = cache.inv_std[r];
    for (std::size_t c = 0; c < dim; ++c) {
      const double dg = dout(r, c) * g[c];
      dx(r, c) = inv * (dg - inv_dim * sum_dg -
                        cache.xhat(r, c) * inv_dim * sum_dg_xhat);
    }
  }
  return dx;
}

// ---- EmbeddingTable ----

void EmbeddingTable::reg(ParamStore& ps, const std::string& prefix,
                         std::size_t n, std::size_t d) {
  rows = n;
  dim = d;
  table = ps.add(prefix + ".table", n * d);
}

void EmbeddingTable::init(ParamStore& ps, RngStream& rng) const {
  auto t = ps.values(table);
  for (auto& v : t) v = 0.02 * rng.normal();
}

std::span<const double> EmbeddingTable::row(const ParamStore& ps,
                                            std::size_t i) const {
  require(i < rows, "embedding: index out of range");
  return ps.values(table).subspan(i * dim, dim);
}

void EmbeddingTable::add_grad(ParamStore& ps, std::size_t i,
                              std::span<const double> g) const {
  require(i < rows && g.size() == dim, "embedding: bad gradient");
  auto dst = ps.grads(table).subspan(i * dim, dim);
  for (std::size_t c = 0; c < dim; ++c) dst[c] += g[c];
}

// ---- MultiHeadAttention ----

void MultiHeadAttention::reg(ParamStore& ps, const std::string& prefix,
                             std::size_t d, std::size_t n_heads) {
  require(d % n_heads == 0, "attention: model_dim not divisible by heads");
  dim = d;
  heads = n_heads;
  head_dim = d / n_heads;
  q.reg(ps, prefix + ".q", d, d);
  k.reg(ps, prefix + ".k", d, d);
  v.reg(ps, prefix + ".v", d, d);
  o.reg(ps, prefix + ".o", d, d);
}

void MultiHeadAttention::init(ParamStore& ps, RngStream& rng) const {
  q.init(ps, rng);
  k.init(ps, rng);
  v.init(ps, rng);
  o.init(ps, rng);
}

Mat MultiHeadAttention::forward(const ParamStore& ps, const Mat& x,
                                Cache& cache) const {
  require(x.cols == dim, "attention: input dimension mismatch");
  const std::size_t t = x.rows;
  cache.x = x;
  cache.qm = q.forward(ps, x);
  cache.km = k.forward(ps, x);
  cache.vm = v.forward(ps, x);
  cache.probs.assign(heads, Mat());
  cache.concat = Mat(t, dim);
  const double scale = 1.0 / std::sqrt(double(head_dim));
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t base = h * head_dim;
    Mat& p = cache.probs[h];
    p = Mat(t, t);
    for (std::size_t i = 0; i < t; ++i) {
      double row_max = -1e300;
      for (std::size_t j = 0; j < t; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < head_dim; ++c)
          s += cache.qm(i, base + c) * cache.km(j, base + c);
        s *= scale;
        p(i, j) = s;
        row_max = std::max(row_max, s);
      }
      double denom = 0.0;
      for (std::size_t j = 0; j < t; ++j) {
        p(i, j) = std::exp(p(i, j) - row_max);
        denom += p(i, j);
      }
      for (std::size_t j = 0; j < t; ++j) p(i, j) /= denom;
      for (std::size_t c = 0; c < head_dim; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < t; ++j)
          acc += p(i, j) * cache.vm(j, base + c);
        cache.concat(i, base + c) = acc;
      }
    }
  }
  cache.filled = true;
  return o.forward(ps, cache.concat);
}

Mat MultiHeadAttention::backward(ParamStore& ps, const Cache& cache,
                                 const Mat& dout) const {
  require(cache.filled, "attention: backward without forward");
  const std::size_t t = cache.x.rows;
  Mat dconcat = o.backward(ps, cache.concat, dout);
  Mat dq(t, dim), dk(t, dim), dv(t, dim);
  const double scale = 1.0 / std::sqrt(double(head_dim));
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t base = h * head_dim;
    const Mat& p = cache.probs[h];
    // dV[j] += sum_i P[i,j] * dO[i];   dP[i,j] = dO[i] . V[j]
    Mat dp(t, t);
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < t; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < head_dim; ++c)
          acc += dconcat(i, base + c) * cache.vm(j, base + c);
        dp(i, j) = acc;
        for (std::size_t c = 0; c < head_dim; ++c)
          dv(j, base + c) += p(i, j) * dconcat(i, base + c);
      }
    }
    // softmax backward per row: dS = P (dP - sum_j dP P)
    for (std::size_t i = 0; i < t; ++i) {
      double row_dot = 0.0;
      for (std::size_t j = 0; j < t; ++j) row_dot += dp(i, j) * p(i, j);
      for (std::size_t j = 0; j < t; ++j) {
        const double ds = p(i, j) * (dp(i, j) - row_dot) * scale;
        for (std::size_t c = 0; c < head_dim; ++c) {
          dq(i, base + c) += ds * cache.km(j, base + c);
          dk(j, base + c) += ds * cache.qm(i, base + c);
        }
      }
    }
  }
  Mat dx = q.backward(ps, cache.x, dq);
  Mat dxk = k.backward(ps, cache.x, dk);
  Mat dxv = v.backward(ps, cache.x, dv);
  for (std::size_t i = 0; i < dx.a.size(); ++i)
    dx.a[i] += dxk.a[i] + dxv.a[i];
  return dx;
}

// ---- FeedForward ----

void FeedForward::reg(ParamStore& ps, const std::string& prefix,
                      std::size_t d, std::size_t width) {
  fc1.reg(ps, prefix + ".fc1", d, width);
  fc2.reg(ps, prefix + ".fc2", width, d);
}

void FeedForward::init(ParamStore& ps, RngStream& rng) const {
  fc1.init(ps, rng);
  fc2.init(ps, rng);
}

Mat FeedForward::forward(const ParamStore& ps, const Mat& x,
                         Cache& cache) const {
  cache.x = x;
  cache.pre = fc1.forward(ps, x);
  cache.act = cache.pre;
  for (auto& v : cache.act.a) v = gelu(v);
  cache.filled = true;
  return fc2.forward(ps, cache.act);
}

Mat FeedForward::backward(ParamStore& ps, const Cache& cache,
                          const Mat& dout) const {
  require(cache.filled, "feedforward: backward without forward");
  Mat dact = fc2.backward(ps, cache.act, dout);
  for (std::size_t i = 0; i < dact.a.size(); ++i)
    dact.a[i] *= gelu_grad(cache.pre.a[i]);
  return fc1.backward(ps, cache.x, dact);
}

// ---- TransformerLayer ----

void TransformerLayer::reg(ParamStore& ps, const std::string& prefix,
                           std::size_t d, std::size_t n_heads,
                           std::size_t ff_width) {
  ln1.reg(ps, prefix + ".ln1", d);
  attn.reg(ps, prefix + ".attn", d, n_heads);
  ln2.reg(ps, prefix + ".ln2", d);
  ff.reg(ps, prefix + ".ff", d, ff_width);
}

void TransformerLayer::init(ParamStore& ps, RngStream& rng) const {
  ln1.init(ps);
  attn.init(ps, rng);
  ln2.init(ps);
  ff.init(ps, rng);
}

Mat TransformerLayer::forward(const ParamStore& ps, const Mat& x,
                              Cache& cache) const {
  Mat a = ln1.forward(ps, x, cache.ln1c);
  Mat s = attn.forward(ps, a, cache.attnc);
  Mat h = x;
  for (std::size_t i = 0; i < h.a.size(); ++i) h.a[i] += s.a[i];
  Mat b = ln2.forward(ps, h, cache.ln2c);
  Mat f = ff.forward(ps, b, cache.ffc);
  Mat y = h;
  for (std::size_t i = 0; i < y.a.size(); ++i) y.a[i] += f.a[i];
  cache.filled = true;
  return y;
}

Mat TransformerLayer::backward(ParamStore& ps, const Cache& cache,
                               const Mat& dout) const {
  require(cache.filled, "transformer layer: backward without forward");
  Mat db = ff.backward(ps, cache.ffc, dout);
  Mat dh = ln2.backward(ps, cache.ln2c, db);
  for (std::size_t i = 0; i < dh.a.size(); ++i) dh.a[i] += dout.a[i];
  Mat da = attn.backward(ps, cache.attnc, dh);
  Mat dx = ln1.backward(ps, cache.ln1c, da);
  for (std::size_t i = 0; i < dx.a.size(); ++i) dx.a[i] += dh.a[i];
  return dx;
}

// ---- TransformerStack ----

void TransformerConfig::validate() const {
  if (n_layers < 1 || n_heads < 1 || ff_width < 1 || model_dim < 1)
    throw ConfigError("transformer: all size fields must be positive");
  if (model_dim % n_heads != 0)
    throw ConfigError("transformer: model_dim must be divisible by n_heads");
}

std::size_t TransformerConfig::param_count() const {
  const std::size_t d = model_dim;
  const std::size_t per_layer = 2 * (2 * d)                 // two layer norms
                                + 4 * (d * d + d)           // q,k,v,o
                                + (d * ff_width + ff_width) // fc1
                                + (ff_width * d + d);       // fc2
  return n_layers * per_layer;
}

void TransformerStack::reg(ParamStore& ps, const std::string& prefix,
                           const TransformerConfig& config) {
  config.validate();
  cfg = config;
  layers.resize(cfg.n_layers);
  for (std::size_t l = 0; l < cfg.n_layers; ++l)
    layers[l].reg(ps, prefix + ".layer" + std::to_string(l), cfg.model_dim,
                  cfg.n_heads, cfg.ff_width);
}

void TransformerStack::init(ParamStore& ps, RngStream& rng) const {
  for (const auto& l : layers) l.init(ps, rng);
}

Mat TransformerStack::forward(const ParamStore& ps, const Mat& tokens,
                              Cache& cache) const {
  require(tokens.rows >= 1, "transformer: empty sequence");
  require(tokens.cols == cfg.model_dim,
          "transformer: token dimension mismatch");
  cache.layer_caches.assign(layers.size(), TransformerLayer::Cache{});
  Mat h = tokens;
  for (std::size_t l = 0; l < layers.size(); ++l)
    h = layers[l].forward(ps, h, cache.layer_caches[l]);
  cache.filled = true;
  return h;
}

Mat TransformerStack::backward(ParamStore& ps, const Cache& cache,
                               const Mat& dout) const {
  require(cache.filled, "transformer: backward without forward");
  Mat d = dout;
  for (std::size_t l = layers.size(); l-- > 0;)
    d = layers[l].backward(ps, cache.layer_caches[l], d);
  return d;
}

}  // namespace nimai::nn
