#include "nimai/vqvae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nimai/csv.hpp"
#include "nimai/nn/model_io.hpp"

namespace nimai {

namespace {
constexpr double kEmaEps = 1e-5;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
}  // namespace

void Codebook::validate() const {
  if (size < 2) throw ConfigError("codebook: need at least 2 vectors");
  if (dim < 1) throw ConfigError("codebook: dimension must be positive");
  if (vectors.size() != size * dim)
    throw ConfigError("codebook: vector storage size mismatch");
  for (double v : vectors)
    if (!std::isfinite(v)) throw ConfigError("codebook: non-finite vector");
  if (ema_decay && (*ema_decay <= 0.0 || *ema_decay >= 1.0))
    throw ConfigError("codebook: EMA decay must be in (0,1)");
}

QuantizeResult quantize(const Mat& z_e, const Codebook& cb, double beta) {
  cb.validate();
  if (z_e.cols != cb.dim)
    throw ConfigError("quantize: latent dimension does not match codebook");
  const std::size_t l = z_e.rows;
  QuantizeResult r;
  r.tokens.resize(l);
  r.z_q = Mat(l, cb.dim);
  double embed_sum = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    auto row = z_e.row(i);
    // Partial-distance scan with early abandon; accumulation order matches
    // a plain squared-distance loop so results are bit-identical to it.
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cb.size; ++j) {
      auto code = cb.vec(j);
      double d = 0.0;
      for (std::size_t c = 0; c < cb.dim; ++c) {
        double diff = row[c] - code[c];
        d += diff * diff;
        if (d > best_d) break;
      }
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    r.tokens[i] = int(best);
    auto sel = cb.vec(best);
    std::copy(sel.begin(), sel.end(), r.z_q.row(i).begin());
    embed_sum += squared_distance(row, sel);
  }
  r.embed_loss = embed_sum / double(l);
  r.commit_loss = beta * r.embed_loss;
  return r;
}

VqLosses vq_losses(std::span<const double> x, std::span<const double> xhat,
                   const Mat& z_e, const Mat& z_q, double alpha, double beta) {
  if (x.size() != xhat.size())
    throw ConfigError("vq_losses: reconstruction size mismatch");
  if (!z_e.same_shape(z_q)) throw ConfigError("vq_losses: latent mismatch");
  VqLosses out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - xhat[i];
    out.recon += d * d;
  }
  out.recon /= double(x.size());
  double dist_sum = 0.0;
  for (std::size_t i = 0; i < z_e.rows; ++i)
    dist_sum += squared_distance(z_e.row(i), z_q.row(i));
  out.embed = dist_sum / double(z_e.rows);
  out.commit = beta * out.embed;
  out.total = out.recon + alpha * (out.embed + out.commit);
  if (!std::isfinite(out.total))
    throw TrainingError("vq_losses: non-finite loss");
  return out;
}

void VqvaeConfig::validate() const {
  arch.validate();
  if (n_features < 1) throw ConfigError("vqvae: n_features must be >= 1");
  if (n_classes < 2) throw ConfigError("vqvae: need at least 2 classes");
  if (latent_len < 1) throw ConfigError("vqvae: latent_len must be >= 1");
  if (codebook_size < 2) throw ConfigError("vqvae: codebook needs >= 2 codes");
  if (code_dim < 1) throw ConfigError("vqvae: code_dim must be >= 1");
  if (alpha <= 0.0 || beta <= 0.0)
    throw ConfigError("vqvae: loss weights must be positive");
  if (ema_decay && (*ema_decay <= 0.0 || *ema_decay >= 1.0))
    throw ConfigError("vqvae: EMA decay must be in (0,1)");
}

VqvaeModel::VqvaeModel(const VqvaeConfig& cfg, std::uint64_t init_seed,
                       std::uint64_t schema_hash)
    : cfg_(cfg), schema_hash_(schema_hash) {
  cfg_.validate();
  const std::size_t d = cfg_.arch.model_dim;
  const std::size_t l = cfg_.latent_len;
  input_proj_.reg(params_, "input_proj", cfg_.n_features, l * d);
  class_embed_.reg(params_, "class_embed", cfg_.n_classes, d);
  enc_pos_.reg(params_, "enc_pos", l + 1, d);
  dec_pos_.reg(params_, "dec_pos", l + 1, d);
  encoder_.reg(params_, "encoder", cfg_.arch);
  enc_head_.reg(params_, "enc_head", d, cfg_.code_dim);
  codebook_seg_ = params_.add("codebook", cfg_.codebook_size * cfg_.code_dim);
  dec_in_.reg(params_, "dec_in", cfg_.code_dim, d);
  decoder_.reg(params_, "decoder", cfg_.arch);
  out_head_.reg(params_, "out_head", l * d, cfg_.n_features);

  RngStream rng = RngStream(init_seed).child("vqvae-init");
  input_proj_.init(params_, rng);
  class_embed_.init(params_, rng);
  enc_pos_.init(params_, rng);
  dec_pos_.init(params_, rng);
  encoder_.init(params_, rng);
  enc_head_.init(params_, rng);
  {
    // Tight uniform init, matching standard VQ-VAE codebooks.
    auto cb = params_.values(codebook_seg_);
    const double bound = 1.0 / double(cfg_.codebook_size);
    for (auto& v : cb) v = rng.uniform(-bound, bound);
  }
  dec_in_.init(params_, rng);
  decoder_.init(params_, rng);
  out_head_.init(params_, rng);

  ema_size_.assign(cfg_.codebook_size, 1.0);
  ema_sum_.resize(cfg_.codebook_size * cfg_.code_dim);
  auto cb = params_.values(codebook_seg_);
  std::copy(cb.begin(), cb.end(), ema_sum_.begin());
}

Mat VqvaeModel::encode_seq(std::span<const double> x, int class_id) const {
  if (x.size() != cfg_.n_features)
    throw DataError("encode: wrong feature count");
  if (class_id < 0 || std::size_t(class_id) >= cfg_.n_classes)
    throw DataError("encode: class id out of range");
  const std::size_t d = cfg_.arch.model_dim;
  const std::size_t l = cfg_.latent_len;
  Mat xin(1, cfg_.n_features);
  std::copy(x.begin(), x.end(), xin.a.begin());
  Mat patches = input_proj_.forward(params_, xin);  // 1 x (L*D)

  Mat seq(l + 1, d);
  auto cls = class_embed_.row(params_, std::size_t(class_id));
  auto p0 = enc_pos_.row(params_, 0);
  for (std::size_t c = 0; c < d; ++c) seq(0, c) = cls[c] + p0[c];
  for (std::size_t i = 0; i < l; ++i) {
    auto pi = enc_pos_.row(params_, i + 1);
    for (std::size_t c = 0; c < d; ++c)
      seq(i + 1, c) = patches(0, i * d + c) + pi[c];
  }
  return seq;
}

Mat VqvaeModel::encode(std::span<const double> x, int class_id) const {
  ForwardCache cache;
  cache.enc_seq = encode_seq(x, class_id);
  Mat enc_out = encoder_.forward(params_, cache.enc_seq, cache.enc_cache);
  const std::size_t l = cfg_.latent_len;
  Mat latent_in(l, cfg_.arch.model_dim);
  for (std::size_t i = 0; i < l; ++i) {
    auto src = enc_out.row(i + 1);
    std::copy(src.begin(), src.end(), latent_in.row(i).begin());
  }
  return enc_head_.forward(params_, latent_in);
}

Mat VqvaeModel::build_decoder_seq(const Mat& dec_tokens, int class_id) const {
  const std::size_t d = cfg_.arch.model_dim;
  const std::size_t l = cfg_.latent_len;
  Mat seq(l + 1, d);
  auto cls = class_embed_.row(params_, std::size_t(class_id));
  auto p0 = dec_pos_.row(params_, 0);
  for (std::size_t c = 0; c < d; ++c) seq(0, c) = cls[c] + p0[c];
  for (std::size_t i = 0; i < l; ++i) {
    auto pi = dec_pos_.row(params_, i + 1);
    for (std::size_t c = 0; c < d; ++c)
      seq(i + 1, c) = dec_tokens(i, c) + pi[c];
  }
  return seq;
}

std::vector<double> VqvaeModel::decode_latents(const Mat& z,
                                               int class_id) const {
  if (z.rows != cfg_.latent_len || z.cols != cfg_.code_dim)
    throw DataError("decode: latent shape mismatch");
  if (class_id < 0 || std::size_t(class_id) >= cfg_.n_classes)
    throw DataError("decode: class id out of range");
  const std::size_t d = cfg_.arch.model_dim;
  const std::size_t l = cfg_.latent_len;
  Mat dec_tokens = dec_in_.forward(params_, z);
  Mat seq = build_decoder_seq(dec_tokens, class_id);
  nn::TransformerStack::Cache cache;
  Mat out = decoder_.forward(params_, seq, cache);
  Mat flat(1, l * d);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t c = 0; c < d; ++c) flat(0, i * d + c) = out(i + 1, c);
  Mat logits = out_head_.forward(params_, flat);
  std::vector<double> xhat(cfg_.n_features);
  for (std::size_t f = 0; f < cfg_.n_features; ++f)
    xhat[f] = sigmoid(logits(0, f));
  return xhat;
}

std::vector<double> VqvaeModel::decode(const std::vector<int>& tokens,
                                       int class_id) const {
  if (tokens.size() != cfg_.latent_len)
    throw DataError("decode: wrong token count");
  Mat z(cfg_.latent_len, cfg_.code_dim);
  auto cb = params_.values(codebook_seg_);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || std::size_t(tokens[i]) >= cfg_.codebook_size)
      throw DataError("decode: token out of range");
    const double* src = cb.data() + std::size_t(tokens[i]) * cfg_.code_dim;
    std::copy(src, src + cfg_.code_dim, z.row(i).begin());
  }
  return decode_latents(z, class_id);
}

std::vector<int> VqvaeModel::tokenize(std::span<const double> x,
                                      int class_id) const {
  Mat z_e = encode(x, class_id);
  return quantize(z_e, codebook(), cfg_.beta).tokens;
}

Codebook VqvaeModel::codebook() const {
  Codebook cb;
  cb.size = cfg_.codebook_size;
  cb.dim = cfg_.code_dim;
  auto v = params_.values(codebook_seg_);
  cb.vectors.assign(v.begin(), v.end());
  cb.ema_decay = cfg_.ema_decay;
  return cb;
}

VqLosses VqvaeModel::forward_train(std::span<const double> x, int class_id,
                                   ForwardCache& cache) const {
  const std::size_t d = cfg_.arch.model_dim;
  const std::size_t l = cfg_.latent_len;
  cache.enc_seq = encode_seq(x, class_id);
  cache.enc_out = encoder_.forward(params_, cache.enc_seq, cache.enc_cache);
  cache.enc_latent_in = Mat(l, d);
  for (std::size_t i = 0; i < l; ++i) {
    auto src = cache.enc_out.row(i + 1);
    std::copy(src.begin(), src.end(), cache.enc_latent_in.row(i).begin());
  }
  cache.z_e = enc_head_.forward(params_, cache.enc_latent_in);
  cache.q = quantize(cache.z_e, codebook(), cfg_.beta);

  cache.dec_head_in = cache.q.z_q;
  cache.dec_tokens = dec_in_.forward(params_, cache.dec_head_in);
  cache.dec_seq = build_decoder_seq(cache.dec_tokens, class_id);
  cache.dec_out = decoder_.forward(params_, cache.dec_seq, cache.dec_cache);
  cache.flat = Mat(1, l * d);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t c = 0; c < d; ++c)
      cache.flat(0, i * d + c) = cache.dec_out(i + 1, c);
  cache.logits = out_head_.forward(params_, cache.flat);
  cache.xhat.resize(cfg_.n_features);
  for (std::size_t f = 0; f < cfg_.n_features; ++f)
    cache.xhat[f] = sigmoid(cache.logits(0, f));
  cache.filled = true;
  return vq_losses(x, cache.xhat, cache.z_e, cache.q.z_q, cfg_.alpha,
                   cfg_.beta);
}

void VqvaeModel::backward_train(std::span<const double> x, int class_id,
                                const ForwardCache& cache, double scale) {
  if (!cache.filled)
    throw TrainingError("vqvae: backward without forward");
  const std::size_t d = cfg_.arch.model_dim;
  const std::size_t l = cfg_.latent_len;
  const std::size_t f_n = cfg_.n_features;

  // Reconstruction: d recon / d logits through the logistic squash.
  Mat dlogits(1, f_n);
  for (std::size_t f = 0; f < f_n; ++f) {
    const double dxhat = 2.0 * (cache.xhat[f] - x[f]) / double(f_n);
    dlogits(0, f) =
        scale * dxhat * cache.xhat[f] * (1.0 - cache.xhat[f]);
  }
  Mat dflat = out_head_.backward(params_, cache.flat, dlogits);

  Mat ddec_out(l + 1, d);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t c = 0; c < d; ++c)
      ddec_out(i + 1, c) = dflat(0, i * d + c);
  Mat ddec_seq = decoder_.backward(params_, cache.dec_cache, ddec_out);

  class_embed_.add_grad(params_, std::size_t(class_id), ddec_seq.row(0));
  dec_pos_.add_grad(params_, 0, ddec_seq.row(0));
  Mat ddec_tokens(l, d);
  for (std::size_t i = 0; i < l; ++i) {
    dec_pos_.add_grad(params_, i + 1, ddec_seq.row(i + 1));
    auto src = ddec_seq.row(i + 1);
    std::copy(src.begin(), src.end(), ddec_tokens.row(i).begin());
  }
  Mat dz_q = dec_in_.backward(params_, cache.dec_head_in, ddec_tokens);

  // Straight-through estimator: the decoder-side gradient is copied across
  // the quantizer onto z_e; the commitment term is added on top.
  Mat dz_e = dz_q;
  const double commit_coeff = scale * cfg_.alpha * cfg_.beta * 2.0 / double(l);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t c = 0; c < cfg_.code_dim; ++c)
      dz_e(i, c) += commit_coeff * (cache.z_e(i, c) - cache.q.z_q(i, c));

  if (!cfg_.ema_decay) {
    // Embedding loss moves the selected codes toward the encoder outputs.
    auto gcb = params_.grads(codebook_seg_);
    const double embed_coeff = scale * cfg_.alpha * 2.0 / double(l);
    for (std::size_t i = 0; i < l; ++i) {
      const std::size_t j = std::size_t(cache.q.tokens[i]);
      double* g = gcb.data() + j * cfg_.code_dim;
      for (std::size_t c = 0; c < cfg_.code_dim; ++c)
        g[c] += embed_coeff * (cache.q.z_q(i, c) - cache.z_e(i, c));
    }
  }

  Mat dlatent_in = enc_head_.backward(params_, cache.enc_latent_in, dz_e);
  Mat denc_out(l + 1, d);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t c = 0; c < d; ++c)
      denc_out(i + 1, c) = dlatent_in(i, c);
  Mat denc_seq = encoder_.backward(params_, cache.enc_cache, denc_out);

  class_embed_.add_grad(params_, std::size_t(class_id), denc_seq.row(0));
  enc_pos_.add_grad(params_, 0, denc_seq.row(0));
  Mat dpatches(1, l * d);
  for (std::size_t i = 0; i < l; ++i) {
    enc_pos_.add_grad(params_, i + 1, denc_seq.row(i + 1));
    for (std::size_t c = 0; c < d; ++c)
      dpatches(0, i * d + c) = denc_seq(i + 1, c);
  }
  Mat xin(1, f_n);
  std::copy(x.begin(), x.end(), xin.a.begin());
  input_proj_.backward(params_, xin, dpatches);
}

double VqvaeModel::forward_identity_loss(std::span<const double> x,
                                         int class_id,
                                         ForwardCache& cache) const {
  const std::size_t d = cfg_.arch.model_dim;
  const std::size_t l = cfg_.latent_len;
  cache.enc_seq = encode_seq(x, class_id);
  cache.enc_out = encoder_.forward(params_, cache.enc_seq, cache.enc_cache);
  cache.enc_latent_in = Mat(l, d);
  for (std::size_t i = 0; i < l; ++i) {
    auto src = cache.enc_out.row(i + 1);
    std::copy(src.begin(), src.end(), cache.enc_latent_in.row(i).begin());
  }
  cache.z_e = enc_head_.forward(params_, cache.enc_latent_in);

  cache.dec_head_in = cache.z_e;  // identity quantizer
  cache.dec_tokens = dec_in_.forward(params_, cache.dec_head_in);
  cache.dec_seq = build_decoder_seq(cache.dec_tokens, class_id);
  cache.dec_out = decoder_.forward(params_, cache.dec_seq, cache.dec_cache);
  cache.flat = Mat(1, l * d);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t c = 0; c < d; ++c)
      cache.flat(0, i * d + c) = cache.dec_out(i + 1, c);
  cache.logits = out_head_.forward(params_, cache.flat);
  cache.xhat.resize(cfg_.n_features);
  for (std::size_t f = 0; f < cfg_.n_features; ++f)
    cache.xhat[f] = sigmoid(cache.logits(0, f));
  cache.filled = true;
  double loss = 0.0;
  for (std::size_t f = 0; f < cfg_.n_features; ++f) {
    double dd = x[f] - cache.xhat[f];
    loss += dd * dd;
  }
  return loss / double(cfg_.n_features);
}

void VqvaeModel::backward_identity(std::span<const double> x, int class_id,
                                   const ForwardCache& cache, double scale) {
  if (!cache.filled)
    throw TrainingError("vqvae: backward without forward");
  const std::size_t d = cfg_.arch.model_dim;
  const std::size_t l = cfg_.latent_len;
  const std::size_t f_n = cfg_.n_features;

  Mat dlogits(1, f_n);
  for (std::size_t f = 0; f < f_n; ++f) {
    const double dxhat = 2.0 * (cache.xhat[f] - x[f]) / double(f_n);
    dlogits(0, f) = scale * dxhat * cache.xhat[f] * (1.0 - cache.xhat[f]);
  }
  Mat dflat = out_head_.backward(params_, cache.flat, dlogits);
  Mat ddec_out(l + 1, d);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t c = 0; c < d; ++c)
      ddec_out(i + 1, c) = dflat(0, i * d + c);
  Mat ddec_seq = decoder_.backward(params_, cache.dec_cache, ddec_out);
  class_embed_.add_grad(params_, std::size_t(class_id), ddec_seq.row(0));
  dec_pos_.add_grad(params_, 0, ddec_seq.row(0));
  Mat ddec_tokens(l, d);
  for (std::size_t i = 0; i < l; ++i) {
    dec_pos_.add_grad(params_, i + 1, ddec_seq.row(i + 1));
    auto src = ddec_seq.row(i + 1);
    std::copy(src.begin(), src.end(), ddec_tokens.row(i).begin());
  }
  Mat dz = dec_in_.backward(params_, cache.dec_head_in, ddec_tokens);

  Mat dlatent_in = enc_head_.backward(params_, cache.enc_latent_in, dz);
  Mat denc_out(l + 1, d);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t c = 0; c < d; ++c)
      denc_out(i + 1, c) = dlatent_in(i, c);
  Mat denc_seq = encoder_.backward(params_, cache.enc_cache, denc_out);
  class_embed_.add_grad(params_, std::size_t(class_id), denc_seq.row(0));
  enc_pos_.add_grad(params_, 0, denc_seq.row(0));
  Mat dpatches(1, l * d);
  for (std::size_t i = 0; i < l; ++i) {
    enc_pos_.add_grad(params_, i + 1, denc_seq.row(i + 1));
    for (std::size_t c = 0; c < d; ++c)
      dpatches(0, i * d + c) = denc_seq(i + 1, c);
  }
  Mat xin(1, f_n);
  std::copy(x.begin(), x.end(), xin.a.begin());
  input_proj_.backward(params_, xin, dpatches);
}

void VqvaeModel::apply_ema_update(const std::vector<double>& batch_counts,
                                  const std::vector<double>& batch_sums) {
  if (!cfg_.ema_decay) return;
  const double gamma = *cfg_.ema_decay;
  const std::size_t k = cfg_.codebook_size;
  const std::size_t d = cfg_.code_dim;
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    ema_size_[j] = gamma * ema_size_[j] + (1.0 - gamma) * batch_counts[j];
    total += ema_size_[j];
    for (std::size_t c = 0; c < d; ++c)
      ema_sum_[j * d + c] =
          gamma * ema_sum_[j * d + c] + (1.0 - gamma) * batch_sums[j * d + c];
  }
  auto cb = params_.values(codebook_seg_);
  for (std::size_t j = 0; j < k; ++j) {
    // Laplace smoothing keeps unused codes from dividing by zero.
    const double n =
        (ema_size_[j] + kEmaEps) / (total + double(k) * kEmaEps) * total;
    for (std::size_t c = 0; c < d; ++c) cb[j * d + c] = ema_sum_[j * d + c] / n;
  }
}

void VqvaeModel::set_ema_state(std::vector<double> size,
                               std::vector<double> sum) {
  if (size.size() != cfg_.codebook_size ||
      sum.size() != cfg_.codebook_size * cfg_.code_dim)
    throw DataError("vqvae: bad EMA state size");
  ema_size_ = std::move(size);
  ema_sum_ = std::move(sum);
}

void VqvaeModel::save(const std::filesystem::path& path) const {
  nn::ModelFile f;
  f.kind = nn::ModelKind::kVqvae;
  f.schema_hash = schema_hash_;
  f.dims = {std::uint32_t(cfg_.n_features),     std::uint32_t(cfg_.n_classes),
            std::uint32_t(cfg_.arch.n_layers),  std::uint32_t(cfg_.arch.n_heads),
            std::uint32_t(cfg_.arch.ff_width),  std::uint32_t(cfg_.arch.model_dim),
            std::uint32_t(cfg_.latent_len),     std::uint32_t(cfg_.codebook_size),
            std::uint32_t(cfg_.code_dim),       std::uint32_t(cfg_.ema_decay ? 1 : 0)};
  f.aux.push_back(cfg_.alpha);
  f.aux.push_back(cfg_.beta);
  f.aux.push_back(cfg_.ema_decay.value_or(0.0));
  // Codebook block: EMA accumulators follow the loss weights.
  f.aux.insert(f.aux.end(), ema_size_.begin(), ema_size_.end());
  f.aux.insert(f.aux.end(), ema_sum_.begin(), ema_sum_.end());
  f.params = params_.flat_values();
  nn::write_model_file(path, f);
}

VqvaeModel VqvaeModel::load(const std::filesystem::path& path) {
  nn::ModelFile f = nn::read_model_file(path);
  if (f.kind != nn::ModelKind::kVqvae)
    throw DataError("not a vqvae model file: " + path.string());
  if (f.dims.size() != 10) throw DataError("vqvae model: bad header");
  VqvaeConfig cfg;
  cfg.n_features = f.dims[0];
  cfg.n_classes = f.dims[1];
  cfg.arch.n_layers = f.dims[2];
  cfg.arch.n_heads = f.dims[3];
  cfg.arch.ff_width = f.dims[4];
  cfg.arch.model_dim = f.dims[5];
  cfg.latent_len = f.dims[6];
  cfg.codebook_size = f.dims[7];
  cfg.code_dim = f.dims[8];
  const bool ema = f.dims[9] != 0;
  const std::size_t k = cfg.codebook_size;
  const std::size_t kd = k * cfg.code_dim;
  if (f.aux.size() != 3 + k + kd)
    throw DataError("vqvae model: bad aux block");
  cfg.alpha = f.aux[0];
  cfg.beta = f.aux[1];
  if (ema) cfg.ema_decay = f.aux[2];
  VqvaeModel model(cfg, 0, f.schema_hash);
  model.params_.set_flat_values(f.params);
  model.set_ema_state({f.aux.begin() + 3, f.aux.begin() + 3 + std::ptrdiff_t(k)},
                      {f.aux.begin() + 3 + std::ptrdiff_t(k), f.aux.end()});
  return model;
}

VqLosses eval_vqvae(const VqvaeModel& model, const Dataset& data) {
  VqLosses sum;
  VqvaeModel::ForwardCache cache;
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    VqLosses l = model.forward_train(data.features.row(i), data.labels[i], cache);
    sum.recon += l.recon;
    sum.embed += l.embed;
    sum.commit += l.commit;
    sum.total += l.total;
  }
  const double n = double(data.n_samples());
  sum.recon /= n;
  sum.embed /= n;
  sum.commit /= n;
  sum.total /= n;
  return sum;
}

VqvaeTrainResult train_vqvae(const Dataset& train, const Dataset& valid,
                             const VqvaeConfig& cfg, const VqvaeHparams& hp,
                             std::uint64_t seed) {
  train.validate();
  valid.validate();
  RngStream root(seed);
  VqvaeTrainResult result{
      VqvaeModel(cfg, root.child("init").root(), train.schema.hash()), {}, 0};
  VqvaeModel& model = result.model;
  nn::AdamState opt(model.params().size(), hp.learning_rate);

  std::vector<std::size_t> order(train.n_samples());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_valid = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = model.params().flat_values();
  std::vector<double> best_ema_size = model.ema_cluster_size();
  std::vector<double> best_ema_sum = model.ema_cluster_sum();
  std::size_t since_improved = 0;

  const std::size_t k = cfg.codebook_size;
  const std::size_t kd = k * cfg.code_dim;
  VqvaeModel::ForwardCache cache;

  for (std::size_t epoch = 0; epoch < hp.max_epochs; ++epoch) {
    RngStream shuffle_rng = root.child("shuffle", epoch);
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      const double scale = 1.0 / double(end - start);
      model.params().zero_grads();
      std::vector<double> counts(k, 0.0), sums(kd, 0.0);
      for (std::size_t bi = start; bi < end; ++bi) {
        const std::size_t i = order[bi];
        VqLosses l =
            model.forward_train(train.features.row(i), train.labels[i], cache);
        if (!std::isfinite(l.total))
          throw TrainingError("vqvae: non-finite loss at epoch " +
                              std::to_string(epoch));
        model.backward_train(train.features.row(i), train.labels[i], cache,
                             scale);
        if (cfg.ema_decay) {
          for (std::size_t p = 0; p < cfg.latent_len; ++p) {
            const std::size_t j = std::size_t(cache.q.tokens[p]);
            counts[j] += 1.0;
            for (std::size_t c = 0; c < cfg.code_dim; ++c)
              sums[j * cfg.code_dim + c] += cache.z_e(p, c);
          }
        }
      }
      optimizer_step(opt, model.params().flat_values(),
                     model.params().flat_grads());
      if (cfg.ema_decay) model.apply_ema_update(counts, sums);
    }

    VqEpochStats stats;
    stats.epoch = epoch;
    stats.train = eval_vqvae(model, train);
    stats.valid = eval_vqvae(model, valid);
    result.history.push_back(stats);
    if (!std::isfinite(stats.train.total) || !std::isfinite(stats.valid.total))
      throw TrainingError("vqvae: non-finite evaluation loss at epoch " +
                          std::to_string(epoch));

    if (stats.valid.total < best_valid - hp.min_delta) {
      best_valid = stats.valid.total;
      best_params = model.params().flat_values();
      best_ema_size = model.ema_cluster_size();
      best_ema_sum = model.ema_cluster_sum();
      result.best_epoch = epoch;
      since_improved = 0;
    } else {
      since_improved += 1;
      if (since_improved >= hp.patience) break;
    }
  }

  model.params().set_flat_values(best_params);
  model.set_ema_state(std::move(best_ema_size), std::move(best_ema_sum));
  return result;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<VqEpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history csv: " + path.string());
  out << "epoch,recon,embed,commit,total,split\n";
  for (const auto& row : history) {
    out << row.epoch << ',' << format_double(row.train.recon) << ','
        << format_double(row.train.embed) << ','
        << format_double(row.train.commit) << ','
        << format_double(row.train.total) << ",train\n";
    out << row.epoch << ',' << format_double(row.valid.recon) << ','
        << format_double(row.valid.embed) << ','
        << format_double(row.valid.commit) << ','
        << format_double(row.valid.total) << ",valid\n";
  }
}

CodebookUsage usage_from_counts(std::vector<std::size_t> counts) {
  CodebookUsage usage;
  usage.counts = std::move(counts);
  double total = 0.0;
  for (auto c : usage.counts) total += double(c);
  double entropy = 0.0;
  std::size_t distinct = 0;
  for (auto c : usage.counts) {
    if (c == 0) continue;
    distinct += 1;
    const double p = double(c) / total;
    entropy -= p * std::log(p);
  }
  usage.perplexity = total == 0.0 ? 0.0 : std::exp(entropy);
  usage.collapsed = distinct < 2 || usage.perplexity < 1.05;
  return usage;
}

CodebookUsage codebook_usage(const VqvaeModel& model, const Dataset& data) {
  std::vector<std::size_t> counts(model.config().codebook_size, 0);
  Codebook cb = model.codebook();
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    Mat z_e = model.encode(data.features.row(i), data.labels[i]);
    auto q = quantize(z_e, cb, model.config().beta);
    for (int t : q.tokens) counts[std::size_t(t)] += 1;
  }
  return usage_from_counts(std::move(counts));
}

}  // namespace nimai
