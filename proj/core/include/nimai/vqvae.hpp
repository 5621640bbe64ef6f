#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "nimai/dataset.hpp"
#include "nimai/matrix.hpp"
#include "nimai/nn/adam.hpp"
#include "nimai/nn/layers.hpp"
#include "nimai/rng.hpp"

namespace nimai {

// Discrete latent vocabulary: K learnable vectors of dimension d.
struct Codebook {
  std::size_t size = 0;  // K
  std::size_t dim = 0;   // d
  std::vector<double> vectors;  // K x d row-major
  std::optional<double> ema_decay;

  std::span<const double> vec(std::size_t j) const {
    return {vectors.data() + j * dim, dim};
  }
  void validate() const;
};

struct QuantizeResult {
  std::vector<int> tokens;  // L nearest-code indices
  Mat z_q;                  // L x d, the selected codebook rows
  double embed_loss = 0.0;
  double commit_loss = 0.0;  // includes the beta factor
};

// Nearest-neighbor assignment with lowest-index tie-break.
//   embed  = mean_i |sg(z_e[i]) - e_t(i)|^2
//   commit = beta * mean_i |z_e[i] - sg(e_t(i))|^2
QuantizeResult quantize(const Mat& z_e, const Codebook& cb, double beta = 1.0);

struct VqLosses {
  double recon = 0.0;
  double embed = 0.0;
  double commit = 0.0;
  double total = 0.0;
};

// recon is the per-feature mean squared error; total = recon + alpha *
// (embed + commit).
VqLosses vq_losses(std::span<const double> x, std::span<const double> xhat,
                   const Mat& z_e, const Mat& z_q, double alpha, double beta);

struct VqvaeConfig {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  nn::TransformerConfig arch;   // shared shape for encoder and decoder
  std::size_t latent_len = 4;   // L
  std::size_t codebook_size = 16;  // K
  std::size_t code_dim = 4;        // d
  double alpha = 1.0;
  double beta = 1.0;
  std::optional<double> ema_decay;  // EMA codebook updates when set

  void validate() const;
};

// Encoder -> quantizer -> decoder with one class-embedding token prepended
// on both sides. The input vector is projected into L patches of model_dim;
// the decoder ends in a logistic squash so outputs stay in [0,1].
class VqvaeModel {
 public:
  VqvaeModel(const VqvaeConfig& cfg, std::uint64_t init_seed,
             std::uint64_t schema_hash);

  const VqvaeConfig& config() const { return cfg_; }
  std::uint64_t schema_hash() const { return schema_hash_; }

  Mat encode(std::span<const double> x, int class_id) const;  // L x d
  std::vector<double> decode(const std::vector<int>& tokens,
                             int class_id) const;
  std::vector<double> decode_latents(const Mat& z, int class_id) const;
  std::vector<int> tokenize(std::span<const double> x, int class_id) const;

  Codebook codebook() const;

  void save(const std::filesystem::path& path) const;
  static VqvaeModel load(const std::filesystem::path& path);

  // Training plumbing; the trainer and the gradient-check tests drive these
  // directly.
  struct ForwardCache {
    Mat enc_seq;
    nn::TransformerStack::Cache enc_cache;
    Mat enc_out;
    Mat enc_latent_in;  // rows 1..L of enc_out
    Mat z_e;
    QuantizeResult q;
    Mat dec_head_in;  // decoder token input, L x d
    Mat dec_tokens;
    Mat dec_seq;
    nn::TransformerStack::Cache dec_cache;
    Mat dec_out;
    Mat flat;
    Mat logits;
    std::vector<double> xhat;
    bool filled = false;
  };

  VqLosses forward_train(std::span<const double> x, int class_id,
                         ForwardCache& cache) const;
  // Accumulates gradients for one sample, scaled by `scale` (1/batch).
  // Applies the straight-through estimator across the quantizer; codebook
  // gradients only in gradient mode.
  void backward_train(std::span<const double> x, int class_id,
                      const ForwardCache& cache, double scale);

  // Identity-quantizer path (z_q := z_e) used to gradient-check encoder and
  // decoder jointly without the non-differentiable step.
  double forward_identity_loss(std::span<const double> x, int class_id,
                               ForwardCache& cache) const;
  void backward_identity(std::span<const double> x, int class_id,
                         const ForwardCache& cache, double scale);

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  nn::Seg codebook_segment() const { return codebook_seg_; }

  // EMA codebook update from one batch of assignments.
  void apply_ema_update(const std::vector<double>& batch_counts,
                        const std::vector<double>& batch_sums);
  const std::vector<double>& ema_cluster_size() const { return ema_size_; }
  const std::vector<double>& ema_cluster_sum() const { return ema_sum_; }
  void set_ema_state(std::vector<double> size, std::vector<double> sum);

 private:
  Mat encode_seq(std::span<const double> x, int class_id) const;
  Mat build_decoder_seq(const Mat& dec_tokens, int class_id) const;

  VqvaeConfig cfg_;
  std::uint64_t schema_hash_ = 0;
  nn::ParamStore params_;
  nn::Dense input_proj_;   // F -> L*D
  nn::EmbeddingTable class_embed_;  // n_classes x D, shared by both sides
  nn::EmbeddingTable enc_pos_, dec_pos_;  // (L+1) x D
  nn::TransformerStack encoder_, decoder_;
  nn::Dense enc_head_;  // D -> d
  nn::Dense dec_in_;    // d -> D
  nn::Dense out_head_;  // L*D -> F
  nn::Seg codebook_seg_;
  std::vector<double> ema_size_;
  std::vector<double> ema_sum_;
};

struct VqvaeHparams {
  std::size_t max_epochs = 2000;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t patience = 50;
  double min_delta = 1e-6;
};

struct VqEpochStats {
  std::size_t epoch = 0;
  VqLosses train;
  VqLosses valid;
};

struct VqvaeTrainResult {
  VqvaeModel model;
  std::vector<VqEpochStats> history;
  std::size_t best_epoch = 0;
};

// Trains with early stopping on validation total loss and returns the
// best-validation checkpoint. Aborts with epoch diagnostics if the loss
// goes non-finite.
VqvaeTrainResult train_vqvae(const Dataset& train, const Dataset& valid,
                             const VqvaeConfig& cfg, const VqvaeHparams& hp,
                             std::uint64_t seed);

VqLosses eval_vqvae(const VqvaeModel& model, const Dataset& data);

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<VqEpochStats>& history);

struct CodebookUsage {
  std::vector<std::size_t> counts;
  double perplexity = 0.0;
  bool collapsed = false;
};

// Perplexity = exp(entropy of the empirical code distribution); collapse
// means fewer than 2 distinct codes used or perplexity below 1.05.
CodebookUsage usage_from_counts(std::vector<std::size_t> counts);

// Empirical code histogram over a dataset.
CodebookUsage codebook_usage(const VqvaeModel& model, const Dataset& data);

}  // namespace nimai
