#include "nimai/eval/classifier.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "nimai/csv.hpp"
#include "nimai/nn/adam.hpp"
#include "nimai/nn/layers.hpp"
#include "nimai/rng.hpp"

namespace nimai {

std::vector<int> argmax_rows(const Mat& probs) {
  std::vector<int> out(probs.rows);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols; ++c)
      if (probs(r, c) > probs(r, best)) best = c;
    out[r] = int(best);
  }
  return out;
}

namespace {

class SoftmaxLinear final : public Classifier {
 public:
  explicit SoftmaxLinear(BuiltinClassifierOptions opts) : opts_(opts) {}

  void fit(const Dataset& train, std::uint64_t seed) override {
    train.validate();
    n_features_ = train.features.cols;
    n_classes_ = train.schema.n_classes();
    params_ = nn::ParamStore();
    head_.reg(params_, "head", n_features_, n_classes_);
    RngStream rng = RngStream(seed).child("classifier-init");
    head_.init(params_, rng);

    nn::AdamState opt(params_.size(), opts_.learning_rate);
    const std::size_t n = train.n_samples();
    const double inv_n = 1.0 / double(n);
    for (std::size_t epoch = 0; epoch < opts_.epochs; ++epoch) {
      params_.zero_grads();
      Mat logits = head_.forward(params_, train.features);
      Mat dlogits(n, n_classes_);
      for (std::size_t r = 0; r < n; ++r) {
        double row_max = logits(r, 0);
        for (std::size_t c = 1; c < n_classes_; ++c)
          row_max = std::max(row_max, logits(r, c));
        double denom = 0.0;
        for (std::size_t c = 0; c < n_classes_; ++c)
          denom += std::exp(logits(r, c) - row_max);
        const auto y = std::size_t(train.labels[r]);
        for (std::size_t c = 0; c < n_classes_; ++c) {
          const double p = std::exp(logits(r, c) - row_max) / denom;
          dlogits(r, c) = (p - (c == y ? 1.0 : 0.0)) * inv_n;
        }
      }
      head_.backward(params_, train.features, dlogits);
      // L2 penalty on the weights only.
      auto wv = params_.values(head_.w);
      auto gw = params_.grads(head_.w);
      for (std::size_t i = 0; i < wv.size(); ++i)
        gw[i] += 2.0 * opts_.l2_penalty * wv[i];
      optimizer_step(opt, params_.flat_values(), params_.flat_grads());
    }
    fitted_ = true;
  }

  Mat predict_proba(const Mat& features) const override {
    if (!fitted_) throw TrainingError("classifier: predict before fit");
    if (features.cols != n_features_)
      throw DataError("classifier: feature width mismatch");
    Mat logits = head_.forward(params_, features);
    Mat probs(features.rows, n_classes_);
    for (std::size_t r = 0; r < features.rows; ++r) {
      double row_max = logits(r, 0);
      for (std::size_t c = 1; c < n_classes_; ++c)
        row_max = std::max(row_max, logits(r, c));
      double denom = 0.0;
      for (std::size_t c = 0; c < n_classes_; ++c) {
        probs(r, c) = std::exp(logits(r, c) - row_max);
        denom += probs(r, c);
      }
      for (std::size_t c = 0; c < n_classes_; ++c) probs(r, c) /= denom;
    }
    return probs;
  }

 private:
  BuiltinClassifierOptions opts_;
  nn::ParamStore params_;
  nn::Dense head_;
  std::size_t n_features_ = 0, n_classes_ = 0;
  bool fitted_ = false;
};

class ExternalProcess final : public Classifier {
 public:
  explicit ExternalProcess(ExternalClassifierSpec spec)
      : spec_(std::move(spec)) {}

  void fit(const Dataset& train, std::uint64_t seed) override {
    train_ = train;
    seed_ = seed;
    fitted_ = true;
  }

  Mat predict_proba(const Mat& features) const override {
    if (!fitted_) throw TrainingError("external classifier: predict before fit");
    static std::atomic<std::uint64_t> counter{0};
    const std::uint64_t job_id = counter.fetch_add(1);
    namespace fs = std::filesystem;
    fs::create_directories(spec_.workdir);
    const std::string tag = "job" + std::to_string(job_id);
    const fs::path train_csv = spec_.workdir / (tag + "_train.csv");
    const fs::path test_csv = spec_.workdir / (tag + "_test.csv");
    const fs::path out_csv = spec_.workdir / (tag + "_probabilities.csv");
    const fs::path job_json = spec_.workdir / (tag + ".json");

    write_csv(train_csv, train_);
    Dataset test_view;
    test_view.schema = train_.schema;
    test_view.features = features;
    test_view.labels.assign(features.rows, 0);  // placeholder labels
    write_csv(test_csv, test_view);

    nlohmann::json job;
    job["format"] = "nimai-external-job";
    job["version"] = 1;
    job["train_csv"] = train_csv.string();
    job["test_csv"] = test_csv.string();
    job["output_csv"] = out_csv.string();
    job["class_names"] = train_.schema.class_names;
    job["label_column"] = train_.schema.label_name;
    job["seed"] = seed_;
    {
      std::ofstream out(job_json);
      if (!out)
        throw DataError("cannot write job file: " + job_json.string());
      out << job.dump(2) << '\n';
    }

    const std::string cmdline = spec_.command + " " + job_json.string();
    const int rc = std::system(cmdline.c_str());
    if (rc != 0)
      throw TrainingError("external classifier command failed (exit " +
                          std::to_string(rc) + "): " + cmdline);
    return read_probabilities(out_csv, features.rows);
  }

 private:
  Mat read_probabilities(const std::filesystem::path& path,
                         std::size_t expected_rows) const {
    std::ifstream in(path);
    if (!in)
      throw DataError("external classifier produced no output: " +
                      path.string());
    std::string line;
    if (!std::getline(in, line))
      throw DataError("empty probabilities file: " + path.string());
    const std::size_t k = train_.schema.n_classes();
    Mat probs(expected_rows, k);
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (row >= expected_rows)
        throw DataError("probabilities file has too many rows");
      std::size_t start = 0;
      for (std::size_t c = 0; c < k; ++c) {
        std::size_t comma = line.find(',', start);
        std::string cell = line.substr(
            start, comma == std::string::npos ? std::string::npos
                                              : comma - start);
        probs(row, c) = std::stod(cell);
        start = comma == std::string::npos ? line.size() : comma + 1;
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) sum += probs(row, c);
      if (std::abs(sum - 1.0) > 1e-6)
        throw DataError("probabilities row " + std::to_string(row + 1) +
                        " sums to " + std::to_string(sum));
      for (std::size_t c = 0; c < k; ++c) probs(row, c) /= sum;
      row += 1;
    }
    if (row != expected_rows)
      throw DataError("probabilities file has too few rows");
    return probs;
  }

  ExternalClassifierSpec spec_;
  Dataset train_;
  std::uint64_t seed_ = 0;
  bool fitted_ = false;
};

}  // namespace

ClassifierFactory builtin_classifier(const BuiltinClassifierOptions& opts) {
  return [opts]() { return std::make_unique<SoftmaxLinear>(opts); };
}

ClassifierFactory external_classifier(const ExternalClassifierSpec& spec) {
  return [spec]() { return std::make_unique<ExternalProcess>(spec); };
}

}  // namespace nimai
