#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "nimai/dataset.hpp"

namespace nimai {

// Downstream classifier adapter: fit on a training set, emit per-class
// probabilities whose rows sum to 1.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Dataset& train, std::uint64_t seed) = 0;
  virtual Mat predict_proba(const Mat& features) const = 0;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

struct BuiltinClassifierOptions {
  std::size_t epochs = 500;
  double l2_penalty = 1e-4;
  double learning_rate = 0.05;
};

// Multinomial linear softmax model trained full-batch with the substrate
// optimizer. Deterministic per seed.
ClassifierFactory builtin_classifier(
    const BuiltinClassifierOptions& opts = {});

// External-process protocol: the harness writes train/test CSVs plus a JSON
// job description into the working directory, invokes `command <job.json>`,
// and reads back a CSV of per-class probabilities (header = class names).
struct ExternalClassifierSpec {
  std::string command;
  std::filesystem::path workdir;
};

ClassifierFactory external_classifier(const ExternalClassifierSpec& spec);

std::vector<int> argmax_rows(const Mat& probs);

}  // namespace nimai
