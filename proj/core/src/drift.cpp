#include "nimai/drift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <thread>

#include "json.hpp"
#include "nimai/balance.hpp"
#include "nimai/csv.hpp"

namespace nimai {

void DriftScenario::validate() const {
  if (months.size() < 2)
    throw ConfigError("drift scenario: need at least 2 months");
  if (train_month >= months.size())
    throw ConfigError("drift scenario: training month out of range");
  const auto hash = months[0].schema.hash();
  for (const auto& m : months) {
    m.validate();
    if (m.schema.hash() != hash)
      throw ConfigError("drift scenario: schemas differ across months");
  }
}

void RecoveryConfig::validate() const {
  if (probe_fraction <= 0.0 || probe_fraction > 1.0)
    throw ConfigError("recovery: probe fraction must be in (0,1]");
  if (confidence_lo < 0.0 || confidence_hi > 1.0 ||
      confidence_lo >= confidence_hi)
    throw ConfigError("recovery: confidence interval must satisfy 0 <= lo < hi <= 1");
  if (multiplier < 1) throw ConfigError("recovery: multiplier must be >= 1");
}

UncertainSet uncertainty_select(const Classifier& clf, const Dataset& batch,
                                const RecoveryConfig& config,
                                std::uint64_t seed) {
  config.validate();
  batch.validate();
  const std::size_t n = batch.n_samples();
  auto probe_n = std::size_t(std::llround(config.probe_fraction * double(n)));
  probe_n = std::max<std::size_t>(1, std::min(probe_n, n));
  RngStream rng = RngStream(seed).child("uncertainty-probe");
  std::vector<std::size_t> probe = rng.sample_without_replacement(n, probe_n);
  std::sort(probe.begin(), probe.end());
  if (probe.empty()) throw DataError("uncertainty_select: empty probe subset");

  Mat probe_features(probe.size(), batch.features.cols);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    auto src = batch.features.row(probe[i]);
    std::copy(src.begin(), src.end(), probe_features.row(i).begin());
  }
  Mat probs = clf.predict_proba(probe_features);
  const bool binary = batch.schema.n_classes() == 2;

  UncertainSet out;
  out.features.cols = batch.features.cols;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    double confidence;
    if (binary) {
      confidence = probs(i, 1);  // positive-class probability
    } else {
      confidence = probs(i, 0);
      for (std::size_t c = 1; c < probs.cols; ++c)
        confidence = std::max(confidence, probs(i, c));
    }
    if (confidence < config.confidence_lo || confidence > config.confidence_hi)
      continue;
    if (out.labels.size() >= config.budget) break;
    auto src = batch.features.row(probe[i]);
    out.features.a.insert(out.features.a.end(), src.begin(), src.end());
    out.features.rows += 1;
    out.labels.push_back(batch.labels[probe[i]]);  // simulated labeling
    out.source_rows.push_back(probe[i]);
  }
  return out;
}

Dataset recover(const VqvaeModel& vqvae, const MtmModel& mtm,
                const Dataset& real, const UncertainSet& uncertain,
                const BalancePlan& plan, const RecoveryConfig& config,
                std::uint64_t seed) {
  config.validate();
  SyntheticBatch batch;
  if (uncertain.labels.empty()) {
    batch = generate_balanced_nimai_c(vqvae, mtm, plan, seed);
  } else {
    batch = hybrid_generate(vqvae, mtm, uncertain.features, uncertain.labels,
                            config.multiplier, plan, config.sample_ratio,
                            seed);
  }
  return augment(real, batch);
}

namespace {

BalancePlan plan_for(const Dataset& train) {
  std::map<int, std::size_t> counts;
  auto cc = train.class_counts();
  for (std::size_t c = 0; c < cc.size(); ++c)
    if (cc[c] > 0) counts[int(c)] = cc[c];
  return plan_balance(counts);
}

StrategyOutcome summarize(std::string strategy, std::size_t target,
                          std::size_t prior, std::vector<double> fs,
                          std::size_t labeled) {
  StrategyOutcome o;
  o.strategy = std::move(strategy);
  o.target_month = target;
  o.prior_month = prior;
  o.per_seed_f = std::move(fs);
  o.mean_f = mean_of(o.per_seed_f);
  o.std_f = sample_std(o.per_seed_f);
  o.labeled_count = labeled;
  return o;
}

}  // namespace

DriftReport compare_strategies(const DriftScenario& scenario,
                               const VqvaeModel& vqvae, const MtmModel& mtm,
                               const ClassifierFactory& classifier,
                               const RecoveryConfig& config,
                               std::span<const std::size_t> target_months,
                               std::span<const std::uint64_t> seeds,
                               std::size_t workers) {
  scenario.validate();
  config.validate();
  if (seeds.empty()) throw ConfigError("compare_strategies: no seeds");
  const Dataset& train = scenario.months[scenario.train_month];
  const BalancePlan plan = plan_for(train);
  const MetricSpec metric;  // macro F across strategies

  DriftReport report;
  for (std::size_t target : target_months) {
    if (target >= scenario.months.size() || target == scenario.train_month)
      throw ConfigError("compare_strategies: bad target month " +
                        std::to_string(target));
    const Dataset& test = scenario.months[target];

    // Arms without labeled data run once per target month.
    std::vector<double> f_none(seeds.size()), f_nimai_c(seeds.size());
    std::vector<std::vector<double>> f_insomnia, f_hybrid;
    std::vector<std::size_t> priors;
    for (std::size_t k = scenario.train_month + 1; k < target; ++k)
      priors.push_back(k);
    // A scenario with no intermediate month labels uncertainty samples from
    // the target month itself, mirroring recovery right at detection time.
    if (priors.empty()) priors.push_back(target);
    f_insomnia.assign(priors.size(), std::vector<double>(seeds.size()));
    f_hybrid.assign(priors.size(), std::vector<double>(seeds.size()));
    std::vector<std::vector<std::size_t>> labeled_counts(
        priors.size(), std::vector<std::size_t>(seeds.size()));

    auto run_seed = [&](std::size_t si) {
      const std::uint64_t seed = seeds[si];
      RngStream root(seed);
      const std::uint64_t clf_seed = root.child("classifier").root();

      auto base = classifier();
      base->fit(train, clf_seed);
      f_none[si] = score_classifier(*base, test, metric);

      {
        SyntheticBatch batch = generate_balanced_nimai_c(
            vqvae, mtm, plan, root.child("nimai-c").root());
        Dataset augmented = augment(train, batch);
        auto clf = classifier();
        clf->fit(augmented, clf_seed);
        f_nimai_c[si] = score_classifier(*clf, test, metric);
      }

      for (std::size_t pi = 0; pi < priors.size(); ++pi) {
        const std::size_t k = priors[pi];
        UncertainSet u = uncertainty_select(
            *base, scenario.months[k], config,
            root.child("probe", k).root());
        labeled_counts[pi][si] = u.labels.size();

        // Insomnia-style arm: retrain on real + the same labeled rows.
        {
          Dataset with_u = u.labels.empty()
                               ? train
                               : concat(train, u.features, u.labels);
          auto clf = classifier();
          clf->fit(with_u, clf_seed);
          f_insomnia[pi][si] = score_classifier(*clf, test, metric);
        }
        {
          Dataset augmented = recover(vqvae, mtm, train, u, plan, config,
                                      root.child("recover", k).root());
          auto clf = classifier();
          clf->fit(augmented, clf_seed);
          f_hybrid[pi][si] = score_classifier(*clf, test, metric);
        }
      }
    };

    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min(workers, seeds.size()));
    if (n_workers == 1) {
      for (std::size_t si = 0; si < seeds.size(); ++si) run_seed(si);
    } else {
      std::vector<std::thread> pool;
      std::atomic<std::size_t> next{0};
      for (std::size_t w = 0; w < n_workers; ++w)
        pool.emplace_back([&]() {
          for (std::size_t si = next.fetch_add(1); si < seeds.size();
               si = next.fetch_add(1))
            run_seed(si);
        });
      for (auto& t : pool) t.join();
    }

    StrategyOutcome none_row = summarize("no-recovery", target,
                                         std::size_t(-1), std::move(f_none), 0);
    StrategyOutcome nimai_c_row = summarize(
        "nimai-c", target, std::size_t(-1), std::move(f_nimai_c), 0);
    report.detail.push_back(none_row);
    report.detail.push_back(nimai_c_row);

    // Best prior month per labeled strategy, by mean F.
    std::optional<StrategyOutcome> best_ins, best_hyb;
    for (std::size_t pi = 0; pi < priors.size(); ++pi) {
      const std::size_t max_labeled = *std::max_element(
          labeled_counts[pi].begin(), labeled_counts[pi].end());
      StrategyOutcome ins = summarize("insomnia-style", target, priors[pi],
                                      std::move(f_insomnia[pi]), max_labeled);
      StrategyOutcome hyb = summarize("nimai-hybrid", target, priors[pi],
                                      std::move(f_hybrid[pi]), max_labeled);
      if (!best_ins || ins.mean_f > best_ins->mean_f) best_ins = ins;
      if (!best_hyb || hyb.mean_f > best_hyb->mean_f) best_hyb = hyb;
      report.detail.push_back(std::move(ins));
      report.detail.push_back(std::move(hyb));
    }
    report.best.push_back(std::move(none_row));
    report.best.push_back(std::move(nimai_c_row));
    report.best.push_back(std::move(*best_ins));
    report.best.push_back(std::move(*best_hyb));
  }
  return report;
}

namespace {

std::string prior_str(std::size_t prior) {
  return prior == std::size_t(-1) ? std::string("-")
                                  : std::to_string(prior);
}

}  // namespace

void write_drift_detail_csv(const std::filesystem::path& path,
                            const DriftReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write drift detail: " + path.string());
  out << "strategy,month,prior_month,mean_f,std_f,labeled\n";
  for (const auto& row : report.detail) {
    out << row.strategy << ',' << row.target_month << ','
        << prior_str(row.prior_month) << ',' << format_double(row.mean_f)
        << ',' << format_double(row.std_f) << ',' << row.labeled_count
        << '\n';
  }
}

void write_drift_summary_csv(const std::filesystem::path& path,
                             const DriftReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write drift summary: " + path.string());
  out << "strategy,month,mean_f,std_f\n";
  for (const auto& row : report.best) {
    out << row.strategy << ',' << row.target_month << ','
        << format_double(row.mean_f) << ',' << format_double(row.std_f)
        << '\n';
  }
}

ScenarioManifest load_scenario_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario manifest: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario manifest parse error: " +
                      std::string(e.what()));
  }
  ScenarioManifest m;
  for (const auto& p : j.at("months")) m.month_csvs.push_back(p.get<std::string>());
  m.train_month = j.at("train_month").get<std::size_t>();
  for (const auto& r : j.at("recovery_months"))
    m.recovery_months.push_back(r.get<std::size_t>());
  return m;
}

void save_scenario_manifest(const std::filesystem::path& path,
                            const ScenarioManifest& manifest) {
  nlohmann::json j;
  auto months = nlohmann::json::array();
  for (const auto& p : manifest.month_csvs) months.push_back(p.string());
  j["months"] = months;
  j["train_month"] = manifest.train_month;
  j["recovery_months"] = manifest.recovery_months;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scenario manifest: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace nimai
