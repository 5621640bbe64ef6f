#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "nimai/drift.hpp"
#include "nimai/splits.hpp"
#include "nimai/toygen.hpp"

using namespace nimai;

namespace {

// Deterministic classifier answering scripted probabilities by row index.
class ScriptedClassifier final : public Classifier {
 public:
  explicit ScriptedClassifier(std::vector<double> positive_probs)
      : probs_(std::move(positive_probs)) {}
  void fit(const Dataset&, std::uint64_t) override {}
  Mat predict_proba(const Mat& features) const override {
    Mat out(features.rows, 2);
    for (std::size_t r = 0; r < features.rows; ++r) {
      const double p = probs_[r % probs_.size()];
      out(r, 0) = 1.0 - p;
      out(r, 1) = p;
    }
    return out;
  }

 private:
  std::vector<double> probs_;
};

Dataset month_of(std::size_t rows, std::uint64_t seed) {
  Schema schema = make_toy_schema(3, 2);
  return make_gaussian_dataset(
      schema,
      {{{0.3, 0.3, 0.3}, 0.05, rows - rows / 4, 0},
       {{0.7, 0.7, 0.7}, 0.05, rows / 4, 1}},
      seed);
}

}  // namespace

TEST_CASE("uncertainty_select keeps only mid-confidence rows") {
  Dataset month = month_of(300, 1);
  RecoveryConfig config;
  config.probe_fraction = 1.0;  // probe everything for the interval tests
  config.budget = 1000;

  SUBCASE("an always-confident classifier yields an empty set") {
    ScriptedClassifier clf({0.99});
    UncertainSet u = uncertainty_select(clf, month, config, 5);
    CHECK(u.labels.empty());
  }

  SUBCASE("binary confidences 0.5 and 0.65 pass, 0.9 does not") {
    ScriptedClassifier clf({0.5, 0.65, 0.9});
    UncertainSet u = uncertainty_select(clf, month, config, 5);
    CHECK(u.labels.size() == 200);  // two of every three rows
    for (std::size_t row : u.source_rows) CHECK(row % 3 != 2);
  }

  SUBCASE("budget truncates the selection") {
    ScriptedClassifier clf({0.5});
    config.budget = 7;
    UncertainSet u = uncertainty_select(clf, month, config, 5);
    CHECK(u.labels.size() == 7);
  }
}

TEST_CASE("a one percent probe of a 623-row month holds about 6 rows") {
  Dataset month = month_of(623, 2);
  CHECK(month.n_samples() == 623);
  RecoveryConfig config;  // probe_fraction = 0.01
  config.budget = 1000;
  ScriptedClassifier clf({0.5});  // everything inside the interval
  UncertainSet u = uncertainty_select(clf, month, config, 9);
  CHECK(u.labels.size() == 6);
}

TEST_CASE("uncertainty_select is a pure function of its seed") {
  Dataset month = month_of(400, 3);
  RecoveryConfig config;
  config.probe_fraction = 0.25;
  ScriptedClassifier clf({0.4, 0.8, 0.55});
  UncertainSet a = uncertainty_select(clf, month, config, 11);
  UncertainSet b = uncertainty_select(clf, month, config, 11);
  UncertainSet c = uncertainty_select(clf, month, config, 12);
  CHECK(a.source_rows == b.source_rows);
  CHECK(a.features.a == b.features.a);
  CHECK(a.source_rows != c.source_rows);
}

TEST_CASE("labels attached by selection are the true batch labels") {
  Dataset month = month_of(200, 4);
  RecoveryConfig config;
  config.probe_fraction = 0.5;
  ScriptedClassifier clf({0.5});
  UncertainSet u = uncertainty_select(clf, month, config, 13);
  for (std::size_t i = 0; i < u.source_rows.size(); ++i)
    CHECK(u.labels[i] == month.labels[u.source_rows[i]]);
}

TEST_CASE("recover with an empty uncertain set equals plain balancing") {
  Schema schema = make_toy_schema(4, 2);
  Dataset data = make_gaussian_dataset(
      schema,
      {{{0.25, 0.25, 0.25, 0.25}, 0.05, 60, 0},
       {{0.75, 0.75, 0.75, 0.75}, 0.05, 20, 1}},
      31);
  auto [train, valid] = stratified_split(data, 0.8, 2);

  VqvaeConfig cfg;
  cfg.n_features = 4;
  cfg.n_classes = 2;
  cfg.arch = {1, 2, 12, 8};
  cfg.latent_len = 2;
  cfg.codebook_size = 8;
  cfg.code_dim = 2;
  VqvaeHparams hp;
  hp.max_epochs = 60;
  hp.learning_rate = 3e-3;
  VqvaeTrainResult vq = train_vqvae(train, valid, cfg, hp, 3);
  MtmHparams mhp;
  mhp.max_epochs = 60;
  MtmTrainResult mtm = train_mtm(vq.model, train, valid, mhp, 4);

  std::map<int, std::size_t> counts;
  auto cc = train.class_counts();
  for (std::size_t c = 0; c < cc.size(); ++c) counts[int(c)] = cc[c];
  BalancePlan plan = plan_balance(counts);

  RecoveryConfig config;
  UncertainSet empty;
  empty.features.cols = 4;

  const auto params_before = vq.model.params().flat_values();
  Dataset via_recover =
      recover(vq.model, mtm.model, train, empty, plan, config, 77);
  SyntheticBatch direct =
      generate_balanced_nimai_c(vq.model, mtm.model, plan, 77);
  Dataset via_direct = augment(train, direct);
  CHECK(via_recover.features.a == via_direct.features.a);
  CHECK(via_recover.labels == via_direct.labels);

  // Determinism and frozen generators.
  Dataset again = recover(vq.model, mtm.model, train, empty, plan, config, 77);
  CHECK(again.features.a == via_recover.features.a);
  CHECK(vq.model.params().flat_values() == params_before);
}

TEST_CASE("compare_strategies ties at F=1 when nothing drifted") {
  // Clusters far apart, no drift: every arm fits a perfect classifier.
  ToyDriftSpec spec;
  spec.n_features = 3;
  spec.n_months = 3;
  spec.rows_per_month = 120;
  spec.majority_center = 0.2;
  spec.minority_center = 0.8;
  spec.sigma = 0.03;
  spec.drift_month = 2;
  spec.drift_shift = 0.0;
  DriftScenario scenario = make_drift_scenario(spec, 5);

  VqvaeConfig cfg;
  cfg.n_features = 3;
  cfg.n_classes = 2;
  cfg.arch = {1, 2, 12, 8};
  cfg.latent_len = 2;
  cfg.codebook_size = 8;
  cfg.code_dim = 2;
  VqvaeHparams hp;
  hp.max_epochs = 80;
  hp.learning_rate = 3e-3;
  auto [train, valid] = stratified_split(scenario.months[0], 0.8, 2);
  VqvaeTrainResult vq = train_vqvae(train, valid, cfg, hp, 3);
  MtmHparams mhp;
  mhp.max_epochs = 80;
  MtmTrainResult mtm = train_mtm(vq.model, train, valid, mhp, 4);

  RecoveryConfig config;
  config.probe_fraction = 0.2;
  std::vector<std::size_t> targets = {2};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  DriftReport report =
      compare_strategies(scenario, vq.model, mtm.model, builtin_classifier(),
                         config, targets, seeds);
  CHECK(report.best.size() == 4);
  for (const auto& row : report.best)
    CHECK(row.mean_f == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("insomnia and hybrid consume identical labeled sets") {
  ToyDriftSpec spec;
  spec.n_features = 4;
  spec.n_months = 3;
  spec.rows_per_month = 200;
  spec.sigma = 0.08;
  spec.drift_month = 1;
  spec.drift_shift = -0.2;
  DriftScenario scenario = make_drift_scenario(spec, 6);

  auto [train, valid] = stratified_split(scenario.months[0], 0.8, 2);
  VqvaeConfig cfg;
  cfg.n_features = 4;
  cfg.n_classes = 2;
  cfg.arch = {1, 2, 12, 8};
  cfg.latent_len = 2;
  cfg.codebook_size = 8;
  cfg.code_dim = 2;
  VqvaeHparams hp;
  hp.max_epochs = 40;
  VqvaeTrainResult vq = train_vqvae(train, valid, cfg, hp, 3);
  MtmHparams mhp;
  mhp.max_epochs = 40;
  MtmTrainResult mtm = train_mtm(vq.model, train, valid, mhp, 4);

  RecoveryConfig config;
  config.probe_fraction = 0.3;
  config.budget = 16;
  std::vector<std::size_t> targets = {2};
  std::vector<std::uint64_t> seeds = {5, 6};
  DriftReport report =
      compare_strategies(scenario, vq.model, mtm.model, builtin_classifier(),
                         config, targets, seeds);
  // Detail rows for the two labeled strategies share prior month and
  // labeled count per (target, prior).
  std::map<std::size_t, std::size_t> insomnia_labeled, hybrid_labeled;
  for (const auto& row : report.detail) {
    if (row.strategy == "insomnia-style")
      insomnia_labeled[row.prior_month] = row.labeled_count;
    if (row.strategy == "nimai-hybrid")
      hybrid_labeled[row.prior_month] = row.labeled_count;
  }
  CHECK(!insomnia_labeled.empty());
  CHECK(insomnia_labeled == hybrid_labeled);
}

TEST_CASE("scenario manifests round trip") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "nimai_test_drift";
  fs::create_directories(dir);
  ScenarioManifest manifest;
  manifest.month_csvs = {dir / "m0.csv", dir / "m1.csv"};
  manifest.train_month = 0;
  manifest.recovery_months = {1};
  save_scenario_manifest(dir / "scenario.json", manifest);
  ScenarioManifest back = load_scenario_manifest(dir / "scenario.json");
  CHECK(back.month_csvs == manifest.month_csvs);
  CHECK(back.train_month == 0);
  CHECK(back.recovery_months == manifest.recovery_months);
}
