#include "nimai/mtm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nimai/csv.hpp"
#include "nimai/nn/adam.hpp"
#include "nimai/nn/model_io.hpp"

namespace nimai {

std::pair<LatentTokens, MaskSpec> mask_tokens(const LatentTokens& tokens,
                                              std::size_t vocab_size,
                                              double ratio,
                                              std::uint64_t seed) {
  if (ratio < 0.0 || ratio > 1.0)
    throw ConfigError("mask_tokens: ratio must be in [0,1]");
  const std::size_t l = tokens.tokens.size();
  const auto n_masked = std::size_t(std::llround(ratio * double(l)));
  RngStream rng = RngStream(seed).child("mask");
  MaskSpec spec;
  spec.ratio = ratio;
  spec.positions = rng.sample_without_replacement(l, n_masked);
  std::sort(spec.positions.begin(), spec.positions.end());
  LatentTokens masked = tokens;
  for (std::size_t p : spec.positions) masked.tokens[p] = int(vocab_size);
  return {masked, spec};
}

void MtmConfig::validate() const {
  arch.validate();
  if (vocab_size < 2) throw ConfigError("mtm: vocabulary needs >= 2 codes");
  if (latent_len < 1) throw ConfigError("mtm: latent_len must be >= 1");
  if (n_classes < 2) throw ConfigError("mtm: need at least 2 classes");
}

MtmModel::MtmModel(const MtmConfig& cfg, std::uint64_t init_seed,
                   std::uint64_t schema_hash)
    : cfg_(cfg), schema_hash_(schema_hash) {
  cfg_.validate();
  const std::size_t d = cfg_.arch.model_dim;
  tok_embed_.reg(params_, "tok_embed", cfg_.vocab_size + 1, d);
  class_embed_.reg(params_, "class_embed", cfg_.n_classes, d);
  pos_.reg(params_, "pos", cfg_.latent_len + 1, d);
  stack_.reg(params_, "stack", cfg_.arch);
  out_head_.reg(params_, "out_head", d, cfg_.vocab_size);

  RngStream rng = RngStream(init_seed).child("mtm-init");
  tok_embed_.init(params_, rng);
  class_embed_.init(params_, rng);
  pos_.init(params_, rng);
  stack_.init(params_, rng);
  // Zero output head: the untrained model emits exactly uniform logits.
  auto w = params_.values(out_head_.w);
  std::fill(w.begin(), w.end(), 0.0);
  auto b = params_.values(out_head_.b);
  std::fill(b.begin(), b.end(), 0.0);
}

Mat MtmModel::forward_train(const std::vector<int>& tokens, int class_id,
                            ForwardCache& cache) const {
  if (tokens.size() != cfg_.latent_len)
    throw DataError("mtm: wrong sequence length");
  if (class_id < 0 || std::size_t(class_id) >= cfg_.n_classes)
    throw DataError("mtm: class id out of range");
  const std::size_t d = cfg_.arch.model_dim;
  const std::size_t l = cfg_.latent_len;
  cache.tokens = tokens;
  cache.seq = Mat(l + 1, d);
  auto cls = class_embed_.row(params_, std::size_t(class_id));
  auto p0 = pos_.row(params_, 0);
  for (std::size_t c = 0; c < d; ++c) cache.seq(0, c) = cls[c] + p0[c];
  for (std::size_t i = 0; i < l; ++i) {
    const int t = tokens[i];
    if (t < 0 || std::size_t(t) > cfg_.vocab_size)
      throw DataError("mtm: token id out of range");
    auto emb = tok_embed_.row(params_, std::size_t(t));
    auto pi = pos_.row(params_, i + 1);
    for (std::size_t c = 0; c < d; ++c) cache.seq(i + 1, c) = emb[c] + pi[c];
  }
  cache.stack_out = stack_.forward(params_, cache.seq, cache.stack_cache);
  cache.head_in = Mat(l, d);
  for (std::size_t i = 0; i < l; ++i) {
    auto src = cache.stack_out.row(i + 1);
    std::copy(src.begin(), src.end(), cache.head_in.row(i).begin());
  }
  cache.logits = out_head_.forward(params_, cache.head_in);
  cache.probs = Mat(l, cfg_.vocab_size);
  for (std::size_t i = 0; i < l; ++i) {
    double row_max = -1e300;
    for (std::size_t k = 0; k < cfg_.vocab_size; ++k)
      row_max = std::max(row_max, cache.logits(i, k));
    double denom = 0.0;
    for (std::size_t k = 0; k < cfg_.vocab_size; ++k) {
      cache.probs(i, k) = std::exp(cache.logits(i, k) - row_max);
      denom += cache.probs(i, k);
    }
    for (std::size_t k = 0; k < cfg_.vocab_size; ++k)
      cache.probs(i, k) /= denom;
  }
  cache.filled = true;
  return cache.probs;
}

Mat MtmModel::forward_probs(const std::vector<int>& tokens,
                            int class_id) const {
  ForwardCache cache;
  return forward_train(tokens, class_id, cache);
}

void MtmModel::backward_train(int class_id, const ForwardCache& cache,
                              const Mat& dlogits) {
  if (!cache.filled) throw TrainingError("mtm: backward without forward");
  const std::size_t d = cfg_.arch.model_dim;
  const std::size_t l = cfg_.latent_len;
  Mat dhead_in = out_head_.backward(params_, cache.head_in, dlogits);
  Mat dstack_out(l + 1, d);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t c = 0; c < d; ++c)
      dstack_out(i + 1, c) = dhead_in(i, c);
  Mat dseq = stack_.backward(params_, cache.stack_cache, dstack_out);
  class_embed_.add_grad(params_, std::size_t(class_id), dseq.row(0));
  pos_.add_grad(params_, 0, dseq.row(0));
  for (std::size_t i = 0; i < l; ++i) {
    pos_.add_grad(params_, i + 1, dseq.row(i + 1));
    tok_embed_.add_grad(params_, std::size_t(cache.tokens[i]),
                        dseq.row(i + 1));
  }
}

double mtm_loss(const Mat& probs, const LatentTokens& targets,
                const MaskSpec& spec) {
  if (spec.positions.empty())
    throw ConfigError("mtm_loss: empty mask set, mean undefined");
  if (probs.rows != targets.tokens.size())
    throw ConfigError("mtm_loss: shape mismatch");
  double sum = 0.0;
  for (std::size_t p : spec.positions) {
    const int y = targets.tokens[p];
    if (y < 0 || std::size_t(y) >= probs.cols)
      throw ConfigError("mtm_loss: target token out of range");
    sum -= std::log(std::max(probs(p, std::size_t(y)), 1e-300));
  }
  return sum / double(spec.positions.size());
}

void MtmModel::save(const std::filesystem::path& path) const {
  nn::ModelFile f;
  f.kind = nn::ModelKind::kMtm;
  f.schema_hash = schema_hash_;
  f.dims = {std::uint32_t(cfg_.vocab_size),    std::uint32_t(cfg_.latent_len),
            std::uint32_t(cfg_.n_classes),     std::uint32_t(cfg_.arch.n_layers),
            std::uint32_t(cfg_.arch.n_heads),  std::uint32_t(cfg_.arch.ff_width),
            std::uint32_t(cfg_.arch.model_dim)};
  f.params = params_.flat_values();
  nn::write_model_file(path, f);
}

MtmModel MtmModel::load(const std::filesystem::path& path) {
  nn::ModelFile f = nn::read_model_file(path);
  if (f.kind != nn::ModelKind::kMtm)
    throw DataError("not an mtm model file: " + path.string());
  if (f.dims.size() != 7) throw DataError("mtm model: bad header");
  MtmConfig cfg;
  cfg.vocab_size = f.dims[0];
  cfg.latent_len = f.dims[1];
  cfg.n_classes = f.dims[2];
  cfg.arch.n_layers = f.dims[3];
  cfg.arch.n_heads = f.dims[4];
  cfg.arch.ff_width = f.dims[5];
  cfg.arch.model_dim = f.dims[6];
  MtmModel model(cfg, 0, f.schema_hash);
  model.params_.set_flat_values(f.params);
  return model;
}

namespace {

struct TokenizedSet {
  std::vector<LatentTokens> rows;
};

TokenizedSet tokenize_dataset(const VqvaeModel& vqvae, const Dataset& data) {
  TokenizedSet out;
  out.rows.reserve(data.n_samples());
  for (std::size_t i = 0; i < data.n_samples(); ++i)
    out.rows.push_back(
        {vqvae.tokenize(data.features.row(i), data.labels[i]),
         data.labels[i]});
  return out;
}

double eval_mtm_ce(const MtmModel& model, const TokenizedSet& set,
                   const std::vector<MaskSpec>& masks,
                   const std::vector<LatentTokens>& masked_rows) {
  double sum = 0.0;
  std::size_t counted = 0;
  MtmModel::ForwardCache cache;
  for (std::size_t i = 0; i < set.rows.size(); ++i) {
    if (masks[i].positions.empty()) continue;
    Mat probs = model.forward_train(masked_rows[i].tokens,
                                    set.rows[i].class_id, cache);
    sum += mtm_loss(probs, set.rows[i], masks[i]);
    counted += 1;
  }
  return counted == 0 ? 0.0 : sum / double(counted);
}

}  // namespace

MtmTrainResult train_mtm(const VqvaeModel& vqvae, const Dataset& train,
                         const Dataset& valid, const MtmHparams& hp,
                         std::uint64_t seed) {
  train.validate();
  valid.validate();
  CodebookUsage usage = codebook_usage(vqvae, train);
  if (usage.collapsed)
    throw TrainingError(
        "train_mtm: refusing collapsed codebook (a prior over fewer than 2 "
        "codes is degenerate)");

  const auto& vcfg = vqvae.config();
  MtmConfig cfg;
  cfg.vocab_size = vcfg.codebook_size;
  cfg.latent_len = vcfg.latent_len;
  cfg.n_classes = vcfg.n_classes;
  cfg.arch = hp.arch.value_or(vcfg.arch);

  RngStream root(seed);
  MtmTrainResult result{
      MtmModel(cfg, root.child("init").root(), vqvae.schema_hash()), {}, 0};
  MtmModel& model = result.model;

  TokenizedSet train_tok = tokenize_dataset(vqvae, train);
  TokenizedSet valid_tok = tokenize_dataset(vqvae, valid);

  // Fixed validation masks so cross-entropy is comparable across epochs;
  // ratios follow the same U[min,1] law as training.
  RngStream val_rng = root.child("valid-mask");
  std::vector<MaskSpec> val_masks(valid_tok.rows.size());
  std::vector<LatentTokens> val_masked(valid_tok.rows.size());
  for (std::size_t i = 0; i < valid_tok.rows.size(); ++i) {
    double r = val_rng.uniform(hp.min_mask_ratio, 1.0);
    auto [masked, spec] =
        mask_tokens(valid_tok.rows[i], cfg.vocab_size, r,
                    val_rng.child("sample", i).root());
    if (spec.positions.empty()) {
      // Round-down can empty very short sequences; force one position.
      std::tie(masked, spec) =
          mask_tokens(valid_tok.rows[i], cfg.vocab_size, 1.0,
                      val_rng.child("sample", i).root());
    }
    val_masks[i] = std::move(spec);
    val_masked[i] = std::move(masked);
  }

  nn::AdamState opt(model.params().size(), hp.learning_rate);
  std::vector<std::size_t> order(train_tok.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_valid = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = model.params().flat_values();
  std::size_t since_improved = 0;
  MtmModel::ForwardCache cache;

  for (std::size_t epoch = 0; epoch < hp.max_epochs; ++epoch) {
    RngStream epoch_rng = root.child("epoch", epoch);
    epoch_rng.shuffle(order);
    double train_ce_sum = 0.0;
    std::size_t train_ce_count = 0;
    for (std::size_t start = 0; start < order.size();
         start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      // One masking ratio per batch, uniform over [min, 1].
      const double ratio = epoch_rng.uniform(hp.min_mask_ratio, 1.0);
      model.params().zero_grads();
      std::size_t batch_masked = 0;
      struct Pending {
        std::size_t row;
        MaskSpec spec;
        LatentTokens masked;
      };
      std::vector<Pending> pending;
      for (std::size_t bi = start; bi < end; ++bi) {
        const std::size_t i = order[bi];
        auto [masked, spec] =
            mask_tokens(train_tok.rows[i], cfg.vocab_size, ratio,
                        epoch_rng.child("mask", i).root());
        if (spec.positions.empty()) continue;
        batch_masked += spec.positions.size();
        pending.push_back({i, std::move(spec), std::move(masked)});
      }
      if (pending.empty()) continue;
      for (const auto& p : pending) {
        const auto& target = train_tok.rows[p.row];
        Mat probs =
            model.forward_train(p.masked.tokens, target.class_id, cache);
        double ce = mtm_loss(probs, target, p.spec);
        if (!std::isfinite(ce))
          throw TrainingError("train_mtm: non-finite loss at epoch " +
                              std::to_string(epoch));
        train_ce_sum += ce;
        train_ce_count += 1;
        Mat dlogits(cfg.latent_len, cfg.vocab_size);
        const double inv = 1.0 / double(batch_masked);
        for (std::size_t pos : p.spec.positions) {
          const auto y = std::size_t(target.tokens[pos]);
          for (std::size_t k = 0; k < cfg.vocab_size; ++k)
            dlogits(pos, k) =
                (probs(pos, k) - (k == y ? 1.0 : 0.0)) * inv;
        }
        model.backward_train(target.class_id, cache, dlogits);
      }
      optimizer_step(opt, model.params().flat_values(),
                     model.params().flat_grads());
    }

    MtmEpochStats stats;
    stats.epoch = epoch;
    stats.train_ce =
        train_ce_count == 0 ? 0.0 : train_ce_sum / double(train_ce_count);
    stats.valid_ce = eval_mtm_ce(model, valid_tok, val_masks, val_masked);
    result.history.push_back(stats);

    if (stats.valid_ce < best_valid - hp.min_delta) {
      best_valid = stats.valid_ce;
      best_params = model.params().flat_values();
      result.best_epoch = epoch;
      since_improved = 0;
    } else {
      since_improved += 1;
      if (since_improved >= hp.patience) break;
    }
  }

  model.params().set_flat_values(best_params);
  return result;
}

void write_mtm_history_csv(const std::filesystem::path& path,
                           const std::vector<MtmEpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history csv: " + path.string());
  out << "epoch,cross_entropy,split\n";
  for (const auto& row : history) {
    out << row.epoch << ',' << format_double(row.train_ce) << ",train\n";
    out << row.epoch << ',' << format_double(row.valid_ce) << ",valid\n";
  }
}

std::vector<std::size_t> fill_schedule(std::size_t n_masked,
                                       std::size_t steps) {
  if (steps < 1) throw ConfigError("fill_schedule: steps must be >= 1");
  std::vector<std::size_t> out;
  std::size_t remaining = n_masked;
  std::size_t rounds_left = steps;
  while (remaining > 0) {
    const auto commit = std::size_t(
        std::ceil(double(remaining) / double(rounds_left)));
    out.push_back(commit);
    remaining -= std::min(commit, remaining);
    if (rounds_left > 1) rounds_left -= 1;
  }
  return out;
}

LatentTokens iterative_fill(const MtmModel& model, const LatentTokens& masked,
                            int class_id, std::size_t steps,
                            std::uint64_t seed) {
  if (steps < 1) throw ConfigError("iterative_fill: steps must be >= 1");
  const auto& cfg = model.config();
  if (masked.tokens.size() != cfg.latent_len)
    throw DataError("iterative_fill: wrong sequence length");
  const int mask_id = int(cfg.vocab_size);

  LatentTokens current = masked;
  current.class_id = class_id;
  std::vector<std::size_t> remaining;
  for (std::size_t i = 0; i < current.tokens.size(); ++i)
    if (current.tokens[i] == mask_id) remaining.push_back(i);
  if (remaining.empty()) return current;

  RngStream rng = RngStream(seed).child("fill");
  const std::vector<std::size_t> schedule =
      fill_schedule(remaining.size(), steps);
  for (std::size_t round = 0; !remaining.empty(); ++round) {
    Mat probs = model.forward_probs(current.tokens, class_id);
    struct Draw {
      std::size_t pos;
      int token;
      double confidence;
    };
    std::vector<Draw> draws;
    draws.reserve(remaining.size());
    for (std::size_t pos : remaining) {
      // Invert the CDF with a single uniform; temperature 1.0.
      const double u = rng.uniform();
      double acc = 0.0;
      int chosen = int(cfg.vocab_size) - 1;
      for (std::size_t k = 0; k < cfg.vocab_size; ++k) {
        acc += probs(pos, k);
        if (u < acc) {
          chosen = int(k);
          break;
        }
      }
      draws.push_back({pos, chosen, probs(pos, std::size_t(chosen))});
    }
    std::stable_sort(draws.begin(), draws.end(), [](const Draw& a,
                                                    const Draw& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      return a.pos < b.pos;
    });
    const std::size_t commit_n = schedule[round];
    for (std::size_t i = 0; i < commit_n && i < draws.size(); ++i)
      current.tokens[draws[i].pos] = draws[i].token;
    remaining.clear();
    for (std::size_t i = 0; i < current.tokens.size(); ++i)
      if (current.tokens[i] == mask_id) remaining.push_back(i);
  }
  return current;
}

}  // namespace nimai
