#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nimai/balance.hpp"
#include "nimai/dataset.hpp"
#include "nimai/mtm.hpp"
#include "nimai/vqvae.hpp"

namespace nimai {

inline constexpr std::size_t kDefaultFillSteps = 8;

enum class ConditioningMode { kSample, kClass, kHybrid };

struct SynthesisRequest {
  ConditioningMode mode = ConditioningMode::kClass;
  int target_class = 0;
  double masking_ratio = 0.5;              // sample mode
  std::optional<std::size_t> anchor_row;   // sample mode
  std::size_t count = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ProvenanceRow {
  std::string mode;  // "nimai-s" | "nimai-c" | "smote"
  std::optional<std::size_t> anchor_row;
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticBatch {
  Mat features;  // all values in [0,1]
  std::vector<int> labels;
  std::vector<ProvenanceRow> provenance;

  std::size_t size() const { return labels.size(); }
  void append(std::span<const double> row, int label, ProvenanceRow prov);
};

// Sample-conditioned generation: encode the anchor, mask round(r*L) latent
// positions, fill them back in, decode with the anchor's class. With r=1.0
// every position is masked and the call is identical to nimai_c under the
// same seed.
std::vector<double> nimai_s(const VqvaeModel& vqvae, const MtmModel& mtm,
                            std::span<const double> anchor, int class_id,
                            double ratio, std::uint64_t seed,
                            std::size_t fill_steps = kDefaultFillSteps);

// Class-conditioned generation: fill a fully masked sequence given only c.
std::vector<double> nimai_c(const VqvaeModel& vqvae, const MtmModel& mtm,
                            int class_id, std::uint64_t seed,
                            std::size_t fill_steps = kDefaultFillSteps);

// Executes a balance plan with sample conditioning, cycling through the
// receiving class's rows in shuffled order as anchors.
SyntheticBatch generate_balanced_nimai_s(const VqvaeModel& vqvae,
                                         const MtmModel& mtm,
                                         const Dataset& train,
                                         const BalancePlan& plan,
                                         double ratio, std::uint64_t seed,
                                         std::size_t fill_steps = kDefaultFillSteps);

SyntheticBatch generate_balanced_nimai_c(const VqvaeModel& vqvae,
                                         const MtmModel& mtm,
                                         const BalancePlan& plan,
                                         std::uint64_t seed,
                                         std::size_t fill_steps = kDefaultFillSteps);

// Hybrid recovery generation: m sample-conditioned rows per uncertain
// anchor, then class-conditioned rows to top classes up to the plan.
// Anchored rows count toward their class's quota while capacity remains but
// are emitted even when they exceed it.
SyntheticBatch hybrid_generate(const VqvaeModel& vqvae, const MtmModel& mtm,
                               const Mat& uncertain_features,
                               const std::vector<int>& uncertain_labels,
                               std::size_t multiplier, const BalancePlan& plan,
                               double ratio, std::uint64_t seed,
                               std::size_t fill_steps = kDefaultFillSteps);

// Linear-interpolation baseline: x + lambda * (nn_k(x) - x) within class c,
// Euclidean neighbors, k capped at class size - 1.
SyntheticBatch smote_generate(const Dataset& data, int class_id,
                              std::size_t count, std::size_t k,
                              std::uint64_t seed);

template <typename T>
struct RejectionOutcome {
  std::vector<T> accepted;
  std::size_t attempts = 0;
  double acceptance_rate = 0.0;
  bool cap_reached = false;
};

// Draws from `generate` until `wanted` samples pass `predicate` or `cap`
// attempts are spent. Zero acceptances at the cap is an error; otherwise a
// capped run returns the partial results with cap_reached set.
template <typename T>
RejectionOutcome<T> rejection_sample(const std::function<T()>& generate,
                                     const std::function<bool(const T&)>& predicate,
                                     std::size_t wanted, std::size_t cap) {
  if (cap < 1) throw ConfigError("rejection_sample: cap must be >= 1");
  RejectionOutcome<T> out;
  while (out.accepted.size() < wanted && out.attempts < cap) {
    T candidate = generate();
    out.attempts += 1;
    if (predicate(candidate)) out.accepted.push_back(std::move(candidate));
  }
  out.cap_reached = out.accepted.size() < wanted;
  out.acceptance_rate =
      out.attempts == 0 ? 0.0
                        : double(out.accepted.size()) / double(out.attempts);
  if (out.cap_reached && out.accepted.empty())
    throw GenerationError("rejection_sample: cap of " + std::to_string(cap) +
                          " attempts exhausted with zero acceptances");
  return out;
}

// Concatenation, real rows first. Schemas must match; the batch's
// provenance is the sidecar manifest.
Dataset augment(const Dataset& real, const SyntheticBatch& batch);

void write_batch_csv(const std::filesystem::path& path,
                     const SyntheticBatch& batch, const Schema& schema);
void write_provenance_json(const std::filesystem::path& path,
                           const SyntheticBatch& batch);

}  // namespace nimai
