#include "nimai/eval/trials.hpp"

#include <thread>

#include "nimai/balance.hpp"

namespace nimai {

double score_classifier(const Classifier& clf, const Dataset& test,
                        const MetricSpec& metric) {
  Mat probs = clf.predict_proba(test.features);
  std::vector<int> preds = argmax_rows(probs);
  if (metric.focus_class)
    return single_class_f(preds, test.labels, *metric.focus_class);
  std::set<int> excluded;
  if (metric.exclude_small_classes)
    excluded = small_classes(test.labels, metric.small_class_threshold);
  return macro_f(preds, test.labels, excluded);
}

namespace {

struct TrialOutput {
  double f_real = 0.0;
  double f_aug = 0.0;
};

TrialOutput run_one_trial(const TrialsConfig& config, std::uint64_t seed) {
  SyntheticBatch batch = config.generator(seed);
  Dataset augmented = augment(*config.train, batch);
  const std::uint64_t clf_seed = RngStream(seed).child("classifier").root();

  auto real_clf = config.classifier();
  real_clf->fit(*config.train, clf_seed);
  auto aug_clf = config.classifier();
  aug_clf->fit(augmented, clf_seed);

  TrialOutput out;
  out.f_real = score_classifier(*real_clf, *config.test, config.metric);
  out.f_aug = score_classifier(*aug_clf, *config.test, config.metric);
  return out;
}

}  // namespace

TrialResult run_trials(const TrialsConfig& config,
                       std::span<const std::uint64_t> seeds) {
  if (!config.train || !config.test)
    throw ConfigError("run_trials: train and test sets are required");
  if (!config.generator || !config.classifier)
    throw ConfigError("run_trials: generator and classifier are required");
  if (seeds.empty()) throw ConfigError("run_trials: no seeds");

  TrialResult result;
  result.seeds.assign(seeds.begin(), seeds.end());
  result.f_real.resize(seeds.size());
  result.f_aug.resize(seeds.size());
  result.delta_g.resize(seeds.size());

  std::vector<std::string> failures(seeds.size());
  auto work = [&](std::size_t i) {
    try {
      TrialOutput out = run_one_trial(config, seeds[i]);
      result.f_real[i] = out.f_real;
      result.f_aug[i] = out.f_aug;
      result.delta_g[i] = out.f_aug == out.f_real
                              ? 0.0
                              : delta_g(out.f_real, out.f_aug);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(config.workers, seeds.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < seeds.size();
             i = next.fetch_add(1))
          work(i);
      });
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (!failures[i].empty())
      throw TrainingError("trial with seed " + std::to_string(seeds[i]) +
                          " failed: " + failures[i]);

  result.mean_dg = mean_of(result.delta_g);
  result.std_dg = sample_std(result.delta_g);
  CvResult cv = cv_reliability(result.mean_dg, result.std_dg);
  result.cv = cv.cv;
  result.reliable = cv.reliable;
  return result;
}

double select_masking_ratio(const VqvaeModel& vqvae, const MtmModel& mtm,
                            const Dataset& train, const Dataset& valid,
                            std::span<const double> grid,
                            const ClassifierFactory& classifier,
                            const MetricSpec& metric, std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("select_masking_ratio: empty grid");
  std::map<int, std::size_t> counts;
  auto cc = train.class_counts();
  for (std::size_t c = 0; c < cc.size(); ++c) counts[int(c)] = cc[c];
  BalancePlan plan = plan_balance(counts);

  double best_ratio = grid[0];
  double best_f = -1.0;
  RngStream root(seed);
  for (double ratio : grid) {
    SyntheticBatch batch = generate_balanced_nimai_s(
        vqvae, mtm, train, plan, ratio, root.child("gen").root());
    Dataset augmented = augment(train, batch);
    auto clf = classifier();
    clf->fit(augmented, root.child("clf").root());
    const double f = score_classifier(*clf, valid, metric);
    if (f > best_f) {
      best_f = f;
      best_ratio = ratio;
    }
  }
  return best_ratio;
}

}  // namespace nimai
