#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nimai/eval/classifier.hpp"
#include "nimai/eval/trials.hpp"
#include "nimai/synthesis.hpp"

namespace nimai {

// Post-deployment setting: ordered monthly test batches with one training
// month; recovery is evaluated on later months.
struct DriftScenario {
  std::vector<Dataset> months;
  std::size_t train_month = 0;

  void validate() const;
};

struct RecoveryConfig {
  double probe_fraction = 0.01;   // random share of the month to score
  double confidence_lo = 0.3;
  double confidence_hi = 0.7;
  std::size_t multiplier = 5;     // anchored rows per uncertain sample
  std::size_t budget = 64;        // labeling cap
  double sample_ratio = 0.5;      // masking ratio for anchored generation

  void validate() const;
};

struct UncertainSet {
  Mat features;
  std::vector<int> labels;               // simulated labeling
  std::vector<std::size_t> source_rows;  // rows of the probed month
};

// Draws a seeded probe subset of the month (without replacement), keeps
// rows whose confidence falls inside [lo, hi] and truncates to the budget.
// Confidence is the positive-class probability for binary tasks and the
// max class probability otherwise.
UncertainSet uncertainty_select(const Classifier& clf, const Dataset& batch,
                                const RecoveryConfig& config,
                                std::uint64_t seed);

// Hybrid recovery: anchored generation on U plus class-conditioned
// balancing, concatenated onto the real training set. The generators are
// frozen; nothing is retrained here.
Dataset recover(const VqvaeModel& vqvae, const MtmModel& mtm,
                const Dataset& real, const UncertainSet& uncertain,
                const BalancePlan& plan, const RecoveryConfig& config,
                std::uint64_t seed);

struct StrategyOutcome {
  std::string strategy;
  std::size_t target_month = 0;
  // Prior month whose uncertainty samples were labeled; npos for
  // strategies that use none.
  std::size_t prior_month = std::size_t(-1);
  double mean_f = 0.0;
  double std_f = 0.0;
  std::vector<double> per_seed_f;
  std::size_t labeled_count = 0;
};

struct DriftReport {
  std::vector<StrategyOutcome> detail;  // every (strategy, target, prior)
  std::vector<StrategyOutcome> best;    // best prior month per strategy
};

// Runs {no-recovery, insomnia-style, nimai-c, nimai-hybrid} for each target
// month, labeling uncertainty samples from each prior month in turn. The
// insomnia-style arm retrains on real + U with the exact U rows the hybrid
// arm consumed.
DriftReport compare_strategies(const DriftScenario& scenario,
                               const VqvaeModel& vqvae, const MtmModel& mtm,
                               const ClassifierFactory& classifier,
                               const RecoveryConfig& config,
                               std::span<const std::size_t> target_months,
                               std::span<const std::uint64_t> seeds,
                               std::size_t workers = 1);

void write_drift_detail_csv(const std::filesystem::path& path,
                            const DriftReport& report);
void write_drift_summary_csv(const std::filesystem::path& path,
                             const DriftReport& report);

// Scenario manifest: JSON listing month CSV paths plus the training and
// recovery months.
struct ScenarioManifest {
  std::vector<std::filesystem::path> month_csvs;
  std::size_t train_month = 0;
  std::vector<std::size_t> recovery_months;
};

ScenarioManifest load_scenario_manifest(const std::filesystem::path& path);
void save_scenario_manifest(const std::filesystem::path& path,
                            const ScenarioManifest& manifest);

}  // namespace nimai
