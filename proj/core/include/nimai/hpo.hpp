#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "nimai/dataset.hpp"
#include "nimai/mtm.hpp"
#include "nimai/vqvae.hpp"

namespace nimai {

// One searchable dimension: a finite choice set or a real interval
// (optionally sampled on a log scale).
struct ChoiceDomain {
  std::vector<double> options;
};
struct IntervalDomain {
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;
};

struct Dimension {
  std::string name;
  std::variant<ChoiceDomain, IntervalDomain> domain;
};

struct SearchSpace {
  std::vector<Dimension> dims;

  // Architecture and quantizer spaces. Loss weights are sampled
  // log-uniformly on (1,50); the EMA decay uniformly on (0,1). The latent
  // length is exposed directly as a small power of two.
  static SearchSpace vqvae_default();
  static SearchSpace mtm_default();

  void validate() const;
};

using TrialConfigMap = std::map<std::string, double>;

std::uint64_t config_hash(const TrialConfigMap& config);

struct TrialOutcome {
  double objective = 0.0;
  bool collapsed = false;
  bool failed = false;
};

using ObjectiveFn =
    std::function<TrialOutcome(const TrialConfigMap&, std::size_t budget)>;

struct LedgerRow {
  std::size_t trial = 0;
  TrialConfigMap config;
  std::size_t rung = 0;        // 1-based
  std::size_t budget = 0;      // epochs granted at this rung
  double objective = 0.0;
  bool collapsed = false;
  bool failed = false;
};

struct SearchResult {
  TrialConfigMap best;
  double best_objective = 0.0;
  bool found = false;
  std::vector<LedgerRow> ledger;
};

// Serial deterministic ASHA: a trial finishing rung r is promoted
// immediately when its objective ranks in the top ceil(n_r / eta) of the
// results recorded at that rung so far. Collapsed and failed trials are
// never promoted and never selected as best; ties on the objective break
// by config hash.
SearchResult asha_search(const SearchSpace& space, const ObjectiveFn& objective,
                         const std::vector<std::size_t>& rung_budgets,
                         std::size_t eta, std::size_t n_trials,
                         std::uint64_t seed);

// Stage-1 objective: train a VQ-VAE for `budget` epochs and return the
// validation embedding + commitment loss; collapsed codebooks are flagged.
TrialOutcome stage1_vqvae_objective(const TrialConfigMap& config,
                                    const Dataset& train, const Dataset& valid,
                                    std::size_t budget, std::size_t model_dim,
                                    std::uint64_t seed);

// Stage-2 objective: masked cross-entropy of an MTM trained on latents of
// the frozen stage-1 winner.
TrialOutcome stage2_mtm_objective(const TrialConfigMap& config,
                                  const VqvaeModel& vqvae,
                                  const Dataset& train, const Dataset& valid,
                                  std::size_t budget, std::uint64_t seed);

VqvaeConfig vqvae_config_from_trial(const TrialConfigMap& config,
                                    std::size_t n_features,
                                    std::size_t n_classes,
                                    std::size_t model_dim);

void write_ledger_csv(const std::filesystem::path& path,
                      const std::vector<LedgerRow>& ledger);
void write_best_config_json(const std::filesystem::path& path,
                            const SearchResult& stage1,
                            const SearchResult& stage2);

}  // namespace nimai
