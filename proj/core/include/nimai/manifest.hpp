#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nimai/dataset.hpp"
#include "nimai/drift.hpp"
#include "nimai/mtm.hpp"
#include "nimai/vqvae.hpp"

namespace nimai {

// Experiment manifest: one JSON file driving every CLI command. Parsing is
// strict; unknown keys are rejected rather than ignored.

struct DatasetSection {
  std::filesystem::path train_csv;
  std::optional<std::filesystem::path> valid_csv;
  std::optional<std::filesystem::path> test_csv;
  Schema schema;
  bool normalize = true;
  // Fraction of train carved out as validation when no valid_csv is given.
  double valid_fraction = 0.2;
};

struct ModelsSection {
  std::optional<std::filesystem::path> vqvae_path;
  std::optional<std::filesystem::path> mtm_path;
};

struct VqvaeSection {
  VqvaeConfig config;  // n_features/n_classes filled from the schema
  VqvaeHparams hparams;
};

struct MtmSection {
  std::optional<nn::TransformerConfig> arch;
  MtmHparams hparams;
};

enum class GeneratorKind { kNimaiS, kNimaiC, kNimaiHybrid, kSmote };

struct GeneratorSection {
  GeneratorKind kind = GeneratorKind::kNimaiC;
  std::optional<double> masking_ratio;  // selected on validation when absent
  std::vector<double> ratio_grid = {0.25, 0.5, 0.75, 1.0};
  std::size_t smote_k = 5;
  std::size_t hybrid_multiplier = 5;
  std::size_t fill_steps = 8;
};

struct TrialsSection {
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> focus_class;  // single-class F when set
  bool exclude_small_classes = false;
  // Feature names for the entropy/skewness shift report; empty disables it.
  std::vector<std::string> feature_shift;
};

struct ClassifierSection {
  std::string kind = "builtin";  // or "external"
  std::size_t epochs = 500;
  double l2_penalty = 1e-4;
  double learning_rate = 0.05;
  std::string command;  // external only
};

struct DriftSection {
  std::filesystem::path scenario;  // scenario manifest path
  RecoveryConfig recovery;
  std::vector<std::size_t> target_months;
  std::vector<std::uint64_t> seeds;
};

struct HpoSection {
  std::size_t n_trials = 12;
  std::size_t eta = 3;
  std::vector<std::size_t> rung_budgets = {10, 30, 90};
  std::size_t subsample_cap = 10000;
  std::size_t model_dim = 16;
  std::size_t stage2_trials = 6;
};

struct ReportInput {
  std::string technique;
  std::filesystem::path trials_csv;
  bool failed = false;  // model failure: reported as an x mark
};

struct ReportSection {
  std::vector<ReportInput> inputs;
  bool bonferroni = false;
};

struct AugmentSection {
  std::filesystem::path synthetic_csv;
};

struct ExperimentManifest {
  int schema_version = 1;
  std::uint64_t seed = 0;
  std::optional<DatasetSection> dataset;
  std::optional<ModelsSection> models;
  std::optional<VqvaeSection> vqvae;
  std::optional<MtmSection> mtm;
  std::optional<GeneratorSection> generator;
  std::optional<TrialsSection> trials;
  std::optional<ClassifierSection> classifier;
  std::optional<DriftSection> drift;
  std::optional<HpoSection> hpo;
  std::optional<ReportSection> report;
  std::optional<AugmentSection> augment;

  // Canonical resolved JSON (paths absolute), embedded in run metadata so a
  // run can be replayed from anywhere.
  nlohmann::json resolved;

  static ExperimentManifest load(const std::filesystem::path& path);
  static ExperimentManifest from_json(nlohmann::json j,
                                      const std::filesystem::path& base_dir);
};

std::string generator_kind_name(GeneratorKind kind);

}  // namespace nimai
