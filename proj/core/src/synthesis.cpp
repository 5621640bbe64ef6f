#include "nimai/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"
#include "nimai/csv.hpp"

namespace nimai {

void SynthesisRequest::validate() const {
  if (count < 1) throw ConfigError("synthesis: count must be >= 1");
  if (mode == ConditioningMode::kSample) {
    if (!anchor_row)
      throw ConfigError("synthesis: sample mode requires an anchor");
    if (masking_ratio <= 0.0 || masking_ratio > 1.0)
      throw ConfigError("synthesis: sample mode requires ratio in (0,1]");
  }
}

void SyntheticBatch::append(std::span<const double> row, int label,
                            ProvenanceRow prov) {
  if (features.rows == 0) features.cols = row.size();
  if (row.size() != features.cols)
    throw GenerationError("synthetic batch: row width mismatch");
  features.a.insert(features.a.end(), row.begin(), row.end());
  features.rows += 1;
  labels.push_back(label);
  provenance.push_back(std::move(prov));
}

namespace {

void check_models(const VqvaeModel& vqvae, const MtmModel& mtm) {
  if (vqvae.config().codebook_size != mtm.config().vocab_size ||
      vqvae.config().latent_len != mtm.config().latent_len ||
      vqvae.config().n_classes != mtm.config().n_classes)
    throw GenerationError("synthesis: vqvae and mtm models do not agree");
  if (vqvae.schema_hash() != mtm.schema_hash())
    throw GenerationError("synthesis: models were trained on different data");
}

}  // namespace

std::vector<double> nimai_s(const VqvaeModel& vqvae, const MtmModel& mtm,
                            std::span<const double> anchor, int class_id,
                            double ratio, std::uint64_t seed,
                            std::size_t fill_steps) {
  check_models(vqvae, mtm);
  if (ratio <= 0.0 || ratio > 1.0)
    throw GenerationError("nimai_s: masking ratio must be in (0,1]");
  Mat z_e = vqvae.encode(anchor, class_id);
  QuantizeResult q = quantize(z_e, vqvae.codebook(), vqvae.config().beta);
  LatentTokens tokens{q.tokens, class_id};
  RngStream rng(seed);
  auto [masked, spec] = mask_tokens(tokens, mtm.config().vocab_size, ratio,
                                    rng.child("mask").root());
  if (spec.positions.empty())
    return vqvae.decode(tokens.tokens, class_id);  // reconstruction limit
  LatentTokens filled = iterative_fill(mtm, masked, class_id, fill_steps,
                                       rng.child("synth").root());
  return vqvae.decode(filled.tokens, class_id);
}

std::vector<double> nimai_c(const VqvaeModel& vqvae, const MtmModel& mtm,
                            int class_id, std::uint64_t seed,
                            std::size_t fill_steps) {
  check_models(vqvae, mtm);
  const auto& cfg = mtm.config();
  LatentTokens masked;
  masked.class_id = class_id;
  masked.tokens.assign(cfg.latent_len, int(cfg.vocab_size));
  RngStream rng(seed);
  LatentTokens filled = iterative_fill(mtm, masked, class_id, fill_steps,
                                       rng.child("synth").root());
  return vqvae.decode(filled.tokens, class_id);
}

SyntheticBatch generate_balanced_nimai_s(const VqvaeModel& vqvae,
                                         const MtmModel& mtm,
                                         const Dataset& train,
                                         const BalancePlan& plan,
                                         double ratio, std::uint64_t seed,
                                         std::size_t fill_steps) {
  SyntheticBatch batch;
  batch.features.cols = vqvae.config().n_features;
  RngStream root(seed);
  std::uint64_t row_seed_index = 0;
  for (const auto& [cls, want] : plan.synthetic_counts) {
    if (want == 0) continue;
    auto anchors = rows_of_class(train, cls);
    if (anchors.empty())
      throw GenerationError("nimai-s balancing: class " + std::to_string(cls) +
                            " has no anchors");
    RngStream order = root.child("anchors", std::uint64_t(cls));
    order.shuffle(anchors);
    for (std::size_t i = 0; i < want; ++i, ++row_seed_index) {
      const std::size_t anchor = anchors[i % anchors.size()];
      const std::uint64_t row_seed = root.child("row", row_seed_index).root();
      auto x = nimai_s(vqvae, mtm, train.features.row(anchor), cls, ratio,
                       row_seed, fill_steps);
      batch.append(x, cls, {"nimai-s", anchor, ratio, row_seed});
    }
  }
  return batch;
}

SyntheticBatch generate_balanced_nimai_c(const VqvaeModel& vqvae,
                                         const MtmModel& mtm,
                                         const BalancePlan& plan,
                                         std::uint64_t seed,
                                         std::size_t fill_steps) {
  SyntheticBatch batch;
  batch.features.cols = vqvae.config().n_features;
  RngStream root(seed);
  std::uint64_t row_seed_index = 0;
  for (const auto& [cls, want] : plan.synthetic_counts) {
    for (std::size_t i = 0; i < want; ++i, ++row_seed_index) {
      const std::uint64_t row_seed = root.child("row", row_seed_index).root();
      auto x = nimai_c(vqvae, mtm, cls, row_seed, fill_steps);
      batch.append(x, cls, {"nimai-c", std::nullopt, 1.0, row_seed});
    }
  }
  return batch;
}

SyntheticBatch hybrid_generate(const VqvaeModel& vqvae, const MtmModel& mtm,
                               const Mat& uncertain_features,
                               const std::vector<int>& uncertain_labels,
                               std::size_t multiplier, const BalancePlan& plan,
                               double ratio, std::uint64_t seed,
                               std::size_t fill_steps) {
  if (uncertain_features.rows != uncertain_labels.size())
    throw GenerationError("hybrid_generate: anchor rows/labels mismatch");
  if (multiplier < 1)
    throw GenerationError("hybrid_generate: multiplier must be >= 1");
  if (uncertain_labels.empty() && plan.total() == 0)
    throw GenerationError("hybrid_generate: nothing to generate");

  SyntheticBatch batch;
  batch.features.cols = vqvae.config().n_features;
  RngStream root(seed);

  // Anchored rows first: multiplier passes over the uncertain set.
  std::map<int, std::size_t> emitted;
  std::uint64_t row_seed_index = 0;
  const std::size_t n_anchored = multiplier * uncertain_labels.size();
  for (std::size_t i = 0; i < n_anchored; ++i, ++row_seed_index) {
    const std::size_t a = i % uncertain_labels.size();
    const int cls = uncertain_labels[a];
    const std::uint64_t row_seed = root.child("hybrid-s", row_seed_index).root();
    auto x = nimai_s(vqvae, mtm, uncertain_features.row(a), cls, ratio,
                     row_seed, fill_steps);
    batch.append(x, cls, {"nimai-s", a, ratio, row_seed});
    emitted[cls] += 1;
  }

  // Remaining per-class quota via class conditioning.
  for (const auto& [cls, want] : plan.synthetic_counts) {
    const std::size_t have = emitted.count(cls) ? emitted.at(cls) : 0;
    for (std::size_t i = have; i < want; ++i, ++row_seed_index) {
      const std::uint64_t row_seed = root.child("hybrid-c", row_seed_index).root();
      auto x = nimai_c(vqvae, mtm, cls, row_seed, fill_steps);
      batch.append(x, cls, {"nimai-c", std::nullopt, 1.0, row_seed});
    }
  }
  return batch;
}

SyntheticBatch smote_generate(const Dataset& data, int class_id,
                              std::size_t count, std::size_t k,
                              std::uint64_t seed) {
  auto members = rows_of_class(data, class_id);
  if (members.size() < 2)
    throw GenerationError("smote: class " + std::to_string(class_id) +
                          " has fewer than 2 samples");
  const std::size_t k_eff = std::min(k, members.size() - 1);

  // k nearest same-class neighbors per member, Euclidean on the normalized
  // features, excluding the point itself.
  std::vector<std::vector<std::size_t>> neighbors(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> dists;
    dists.reserve(members.size() - 1);
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (j == i) continue;
      dists.push_back({squared_distance(data.features.row(members[i]),
                                        data.features.row(members[j])),
                       j});
    }
    std::sort(dists.begin(), dists.end());
    neighbors[i].reserve(k_eff);
    for (std::size_t j = 0; j < k_eff; ++j)
      neighbors[i].push_back(dists[j].second);
  }

  SyntheticBatch batch;
  batch.features.cols = data.features.cols;
  RngStream rng = RngStream(seed).child("smote");
  std::vector<double> row(data.features.cols);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t i = rng.index(members.size());
    const std::size_t j = neighbors[i][rng.index(k_eff)];
    const double lambda = rng.uniform();
    auto xi = data.features.row(members[i]);
    auto xj = data.features.row(members[j]);
    for (std::size_t c = 0; c < row.size(); ++c)
      row[c] = xi[c] + lambda * (xj[c] - xi[c]);
    batch.append(row, class_id, {"smote", members[i], lambda, seed});
  }
  return batch;
}

Dataset augment(const Dataset& real, const SyntheticBatch& batch) {
  real.validate();
  if (batch.size() == 0) return real;
  if (batch.features.cols != real.features.cols)
    throw DataError("augment: schema mismatch (feature width)");
  for (int l : batch.labels)
    if (l < 0 || std::size_t(l) >= real.schema.n_classes())
      throw DataError("augment: synthetic label out of schema range");
  return concat(real, batch.features, batch.labels);
}

void write_batch_csv(const std::filesystem::path& path,
                     const SyntheticBatch& batch, const Schema& schema) {
  Dataset view;
  view.schema = schema;
  view.features = batch.features;
  view.labels = batch.labels;
  write_csv(path, view);
}

void write_provenance_json(const std::filesystem::path& path,
                           const SyntheticBatch& batch) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : batch.provenance) {
    nlohmann::json r;
    r["mode"] = p.mode;
    if (p.anchor_row)
      r["anchor_row"] = *p.anchor_row;
    else
      r["anchor_row"] = nullptr;
    r["ratio"] = p.ratio;
    r["seed"] = p.seed;
    rows.push_back(std::move(r));
  }
  nlohmann::json j;
  j["format"] = "nimai-provenance";
  j["version"] = 1;
  j["rows"] = std::move(rows);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write provenance: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace nimai
