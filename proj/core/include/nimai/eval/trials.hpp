#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "nimai/eval/classifier.hpp"
#include "nimai/eval/metrics.hpp"
#include "nimai/synthesis.hpp"

namespace nimai {

struct MetricSpec {
  // Macro F by default; set focus_class for the single-class convention.
  std::optional<int> focus_class;
  bool exclude_small_classes = false;
  std::size_t small_class_threshold = 20;
};

double score_classifier(const Classifier& clf, const Dataset& test,
                        const MetricSpec& metric);

struct TrialsConfig {
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
  std::function<SyntheticBatch(std::uint64_t seed)> generator;
  ClassifierFactory classifier;
  MetricSpec metric;
  std::size_t workers = 1;
};

struct TrialResult {
  std::vector<std::uint64_t> seeds;
  std::vector<double> f_real;
  std::vector<double> f_aug;
  std::vector<double> delta_g;
  double mean_dg = 0.0;
  double std_dg = 0.0;
  double cv = 0.0;
  bool reliable = false;
};

// One trial per seed: regenerate the synthetic batch, retrain the
// classifier on the real and on the augmented set with identical
// hyperparameters and seed, evaluate both on the fixed test set.
TrialResult run_trials(const TrialsConfig& config,
                       std::span<const std::uint64_t> seeds);

// Validation-set selection of the sample-conditioning masking ratio.
double select_masking_ratio(const VqvaeModel& vqvae, const MtmModel& mtm,
                            const Dataset& train, const Dataset& valid,
                            std::span<const double> grid,
                            const ClassifierFactory& classifier,
                            const MetricSpec& metric, std::uint64_t seed);

}  // namespace nimai
