#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "nimai/dataset.hpp"
#include "nimai/nn/layers.hpp"
#include "nimai/vqvae.hpp"

namespace nimai {

// Sequence of code indices with its class label. The MASK symbol is the
// vocabulary index K and never appears in fully resolved sequences.
struct LatentTokens {
  std::vector<int> tokens;
  int class_id = 0;
};

struct MaskSpec {
  std::vector<std::size_t> positions;  // distinct, ascending
  double ratio = 0.0;
};

// Replaces round(ratio * L) uniformly chosen distinct positions with the
// MASK symbol. Deterministic given the seed.
std::pair<LatentTokens, MaskSpec> mask_tokens(const LatentTokens& tokens,
                                              std::size_t vocab_size,
                                              double ratio,
                                              std::uint64_t seed);

struct MtmConfig {
  std::size_t vocab_size = 0;  // K; MASK symbol id == K
  std::size_t latent_len = 0;  // L
  std::size_t n_classes = 0;
  nn::TransformerConfig arch;

  void validate() const;
};

// Bidirectional predictor over masked latent sequences, conditioned on the
// class label via a prepended embedding token. The output head starts at
// zero, so an untrained model predicts the uniform distribution exactly.
class MtmModel {
 public:
  MtmModel(const MtmConfig& cfg, std::uint64_t init_seed,
           std::uint64_t schema_hash);

  const MtmConfig& config() const { return cfg_; }
  std::uint64_t schema_hash() const { return schema_hash_; }

  // L x K rows of categorical probabilities, each summing to 1.
  Mat forward_probs(const std::vector<int>& tokens, int class_id) const;

  void save(const std::filesystem::path& path) const;
  static MtmModel load(const std::filesystem::path& path);

  struct ForwardCache {
    Mat seq;
    nn::TransformerStack::Cache stack_cache;
    Mat stack_out;
    Mat head_in;
    Mat logits;
    Mat probs;
    std::vector<int> tokens;
    bool filled = false;
  };

  Mat forward_train(const std::vector<int>& tokens, int class_id,
                    ForwardCache& cache) const;
  // dlogits has one row per latent position; rows for unmasked positions
  // must be zero.
  void backward_train(int class_id, const ForwardCache& cache,
                      const Mat& dlogits);

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

 private:
  MtmConfig cfg_;
  std::uint64_t schema_hash_ = 0;
  nn::ParamStore params_;
  nn::EmbeddingTable tok_embed_;   // (K+1) x D
  nn::EmbeddingTable class_embed_;  // n_classes x D
  nn::EmbeddingTable pos_;          // (L+1) x D
  nn::TransformerStack stack_;
  nn::Dense out_head_;  // D -> K
};

// Mean negative log-likelihood over masked positions only. Empty mask sets
// are an error (the mean is undefined).
double mtm_loss(const Mat& probs, const LatentTokens& targets,
                const MaskSpec& spec);

struct MtmHparams {
  std::size_t max_epochs = 500;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t patience = 50;
  double min_delta = 1e-6;
  double min_mask_ratio = 0.15;  // per-batch training ratio ~ U[min, 1]
  // Stack shape override; the VQ-VAE's architecture is reused when absent.
  std::optional<nn::TransformerConfig> arch;
};

struct MtmEpochStats {
  std::size_t epoch = 0;
  double train_ce = 0.0;
  double valid_ce = 0.0;
};

struct MtmTrainResult {
  MtmModel model;
  std::vector<MtmEpochStats> history;
  std::size_t best_epoch = 0;
};

// Trains the prior on (quantized tokens, class) pairs drawn from the
// dataset through a frozen VQ-VAE. Refuses collapsed codebooks. Early
// stopping on validation cross-entropy with fixed validation masks.
MtmTrainResult train_mtm(const VqvaeModel& vqvae, const Dataset& train,
                         const Dataset& valid, const MtmHparams& hp,
                         std::uint64_t seed);

void write_mtm_history_csv(const std::filesystem::path& path,
                           const std::vector<MtmEpochStats>& history);

// Per-round commit counts for resolving n_masked positions in at most
// `steps` rounds: ceil(remaining / rounds_left) each round.
std::vector<std::size_t> fill_schedule(std::size_t n_masked,
                                       std::size_t steps);

// Resolves all MASK positions in `steps` rounds: each round samples every
// remaining masked position and commits the scheduled number of
// highest-confidence draws. Unmasked positions are never altered.
LatentTokens iterative_fill(const MtmModel& model, const LatentTokens& masked,
                            int class_id, std::size_t steps,
                            std::uint64_t seed);

}  // namespace nimai
