#include "nimai/experiment.hpp"

#include <fstream>
#include <iostream>
#include <map>

#include "nimai/balance.hpp"
#include "nimai/csv.hpp"
#include "nimai/eval/feature_shift.hpp"
#include "nimai/eval/stats.hpp"
#include "nimai/eval/trials.hpp"
#include "nimai/hpo.hpp"
#include "nimai/normalizer.hpp"
#include "nimai/splits.hpp"
#include "nimai/synthesis.hpp"

namespace nimai {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct LoadedData {
  Dataset train;
  Dataset valid;
  std::optional<Dataset> test;
  Normalizer normalizer;
};

std::uint64_t effective_seed(const RunOptions& o) {
  return o.seed_override.value_or(o.manifest.seed);
}

const DatasetSection& need_dataset(const ExperimentManifest& m) {
  if (!m.dataset) throw ConfigError("this command needs a dataset section");
  return *m.dataset;
}

// Ingests per the manifest: normalizer fit on training rows only, then
// applied everywhere. A missing validation split is carved from train.
LoadedData load_data(const RunOptions& o) {
  const DatasetSection& ds = need_dataset(o.manifest);
  Dataset train_raw = ingest_csv(ds.train_csv, ds.schema);
  std::optional<Dataset> valid_raw, test_raw;
  if (ds.valid_csv) valid_raw = ingest_csv(*ds.valid_csv, ds.schema);
  if (ds.test_csv) test_raw = ingest_csv(*ds.test_csv, ds.schema);

  if (!valid_raw) {
    auto [tr, va] = stratified_split(
        train_raw, 1.0 - ds.valid_fraction,
        RngStream(effective_seed(o)).child("valid-split").root());
    train_raw = std::move(tr);
    valid_raw = std::move(va);
  }

  LoadedData out;
  out.normalizer = fit_normalizer(train_raw);
  if (ds.normalize) {
    out.train = apply_normalizer(out.normalizer, train_raw);
    out.valid = apply_normalizer(out.normalizer, *valid_raw);
    if (test_raw) out.test = apply_normalizer(out.normalizer, *test_raw);
  } else {
    out.train = std::move(train_raw);
    out.valid = std::move(*valid_raw);
    out.test = std::move(test_raw);
  }
  return out;
}

std::uint64_t manifest_config_hash(const std::string& command,
                                   const RunOptions& o) {
  std::uint64_t h = fnv1a(command);
  h = fnv1a(o.manifest.resolved.dump(), h);
  h = fnv1a_u64(o.seed_override ? *o.seed_override + 1 : 0, h);
  return h;
}

void write_run_metadata(const std::string& command, const RunOptions& o) {
  json meta;
  meta["format"] = "nimai-run-metadata";
  meta["version"] = 1;
  meta["tool_version"] = kToolVersion;
  meta["command"] = command;
  if (o.seed_override)
    meta["seed_override"] = *o.seed_override;
  else
    meta["seed_override"] = nullptr;
  meta["workers"] = o.workers;
  meta["config_hash"] = hex64(manifest_config_hash(command, o));
  meta["manifest"] = o.manifest.resolved;
  std::ofstream out(o.out_dir / "run_metadata.json");
  if (!out) throw DataError("cannot write run metadata");
  out << meta.dump(2) << '\n';
}

ClassifierFactory make_classifier(const ExperimentManifest& m,
                                  const fs::path& out_dir) {
  ClassifierSection c = m.classifier.value_or(ClassifierSection{});
  if (c.kind == "external") {
    ExternalClassifierSpec spec;
    spec.command = c.command;
    spec.workdir = out_dir / "external";
    return external_classifier(spec);
  }
  BuiltinClassifierOptions opts;
  opts.epochs = c.epochs;
  opts.l2_penalty = c.l2_penalty;
  opts.learning_rate = c.learning_rate;
  return builtin_classifier(opts);
}

MetricSpec make_metric(const ExperimentManifest& m, const Schema& schema) {
  MetricSpec spec;
  if (m.trials && m.trials->focus_class) {
    const int id = schema.class_id(*m.trials->focus_class);
    if (id < 0)
      throw ConfigError("metric focus class '" + *m.trials->focus_class +
                        "' not in schema");
    spec.focus_class = id;
  }
  if (m.trials) spec.exclude_small_classes = m.trials->exclude_small_classes;
  return spec;
}

struct ModelPair {
  VqvaeModel vqvae;
  MtmModel mtm;
};

// Loads frozen models when paths are given; otherwise trains them from the
// manifest's hyperparameter sections.
ModelPair obtain_models(const RunOptions& o, const LoadedData& data,
                        bool write_artifacts) {
  const ExperimentManifest& m = o.manifest;
  if (m.models && m.models->vqvae_path && m.models->mtm_path) {
    VqvaeModel vq = VqvaeModel::load(*m.models->vqvae_path);
    MtmModel mtm = MtmModel::load(*m.models->mtm_path);
    if (vq.schema_hash() != data.train.schema.hash())
      throw DataError("vqvae model was trained on a different schema");
    return {std::move(vq), std::move(mtm)};
  }

  VqvaeSection vs = m.vqvae.value_or(VqvaeSection{});
  vs.config.n_features = data.train.schema.n_features();
  vs.config.n_classes = data.train.schema.n_classes();
  const std::uint64_t seed = effective_seed(o);
  VqvaeTrainResult vq = train_vqvae(data.train, data.valid, vs.config,
                                    vs.hparams,
                                    RngStream(seed).child("vqvae").root());
  MtmSection ms = m.mtm.value_or(MtmSection{});
  MtmTrainResult mtm = train_mtm(vq.model, data.train, data.valid, ms.hparams,
                                 RngStream(seed).child("mtm").root());
  if (write_artifacts) {
    vq.model.save(o.out_dir / "vqvae.bin");
    mtm.model.save(o.out_dir / "mtm.bin");
    write_history_csv(o.out_dir / "vqvae_history.csv", vq.history);
    write_mtm_history_csv(o.out_dir / "mtm_history.csv", mtm.history);
  }
  return {std::move(vq.model), std::move(mtm.model)};
}

BalancePlan balance_plan_of(const Dataset& train) {
  std::map<int, std::size_t> counts;
  auto cc = train.class_counts();
  for (std::size_t c = 0; c < cc.size(); ++c)
    if (cc[c] > 0) counts[int(c)] = cc[c];
  return plan_balance(counts);
}

// Builds the per-seed generator used by eval trials.
std::function<SyntheticBatch(std::uint64_t)> make_generator(
    const RunOptions& o, const GeneratorSection& g, const LoadedData& data,
    const std::optional<ModelPair>& models, double chosen_ratio) {
  const Dataset& train = data.train;
  BalancePlan plan = balance_plan_of(train);
  switch (g.kind) {
    case GeneratorKind::kNimaiS:
      return [&models, &train, plan, chosen_ratio, g](std::uint64_t seed) {
        return generate_balanced_nimai_s(models->vqvae, models->mtm, train,
                                         plan, chosen_ratio, seed,
                                         g.fill_steps);
      };
    case GeneratorKind::kNimaiC:
      return [&models, plan, g](std::uint64_t seed) {
        return generate_balanced_nimai_c(models->vqvae, models->mtm, plan,
                                         seed, g.fill_steps);
      };
    case GeneratorKind::kSmote:
      return [&train, plan, g](std::uint64_t seed) {
        SyntheticBatch batch;
        batch.features.cols = train.features.cols;
        RngStream root(seed);
        for (const auto& [cls, want] : plan.synthetic_counts) {
          if (want == 0) continue;
          SyntheticBatch part = smote_generate(
              train, cls, want, g.smote_k,
              root.child("smote", std::uint64_t(cls)).root());
          for (std::size_t r = 0; r < part.size(); ++r)
            batch.append(part.features.row(r), part.labels[r],
                         part.provenance[r]);
        }
        return batch;
      };
    case GeneratorKind::kNimaiHybrid:
      throw ConfigError(
          "nimai-hybrid generates from uncertainty samples; use the drift "
          "command");
  }
  throw ConfigError("unreachable generator kind");
}

double resolve_ratio(const RunOptions& o, const GeneratorSection& g,
                     const LoadedData& data,
                     const std::optional<ModelPair>& models) {
  if (g.kind != GeneratorKind::kNimaiS) return 1.0;
  if (g.masking_ratio) return *g.masking_ratio;
  MetricSpec metric = make_metric(o.manifest, data.train.schema);
  return select_masking_ratio(models->vqvae, models->mtm, data.train,
                              data.valid, g.ratio_grid,
                              make_classifier(o.manifest, o.out_dir), metric,
                              RngStream(effective_seed(o)).child("ratio").root());
}

// ---- commands ----

void cmd_ingest(const RunOptions& o) {
  LoadedData data = load_data(o);
  save_normalizer(o.out_dir / "normalizer.json", data.normalizer);
  write_csv(o.out_dir / "train.csv", data.train);
  write_csv(o.out_dir / "valid.csv", data.valid);
  if (data.test) write_csv(o.out_dir / "test.csv", *data.test);
}

void cmd_train(const RunOptions& o) {
  LoadedData data = load_data(o);
  obtain_models(o, data, /*write_artifacts=*/true);
}

void cmd_synth(const RunOptions& o) {
  if (!o.manifest.generator)
    throw ConfigError("synth needs a generator section");
  LoadedData data = load_data(o);
  const GeneratorSection& g = *o.manifest.generator;
  std::optional<ModelPair> models;
  if (g.kind != GeneratorKind::kSmote)
    models = obtain_models(o, data, /*write_artifacts=*/false);
  const double ratio = resolve_ratio(o, g, data, models);
  auto generator = make_generator(o, g, data, models, ratio);
  SyntheticBatch batch =
      generator(RngStream(effective_seed(o)).child("synth").root());
  write_batch_csv(o.out_dir / "synthetic.csv", batch, data.train.schema);
  write_provenance_json(o.out_dir / "provenance.json", batch);
}

void cmd_augment(const RunOptions& o) {
  if (!o.manifest.augment)
    throw ConfigError("augment needs an augment section");
  LoadedData data = load_data(o);
  Dataset synthetic =
      ingest_csv(o.manifest.augment->synthetic_csv, data.train.schema);
  SyntheticBatch batch;
  batch.features = synthetic.features;
  batch.labels = synthetic.labels;
  batch.provenance.assign(batch.labels.size(), {"imported", std::nullopt, 0.0,
                                                effective_seed(o)});
  Dataset augmented = augment(data.train, batch);
  write_csv(o.out_dir / "augmented.csv", augmented);
  json manifest;
  manifest["format"] = "nimai-augment-manifest";
  manifest["version"] = 1;
  manifest["real_rows"] = data.train.n_samples();
  manifest["synthetic_rows"] = batch.size();
  manifest["synthetic_csv"] = o.manifest.augment->synthetic_csv.string();
  std::ofstream mo(o.out_dir / "augment_manifest.json");
  mo << manifest.dump(2) << '\n';
}

void write_trials_csv(const fs::path& path, const TrialResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trials csv: " + path.string());
  out << "seed,f_real,f_aug,delta_g\n";
  for (std::size_t i = 0; i < result.seeds.size(); ++i)
    out << result.seeds[i] << ',' << format_double(result.f_real[i]) << ','
        << format_double(result.f_aug[i]) << ','
        << format_double(result.delta_g[i]) << '\n';
}

void write_trial_report(const fs::path& csv_path, const fs::path& txt_path,
                        const std::string& technique,
                        const TrialResult& result) {
  Mark mark = classify_mark(result.mean_dg, result.std_dg);
  {
    std::ofstream out(csv_path);
    out << "technique,mean_dg,std_dg,cv,mark\n";
    out << technique << ',' << format_double(result.mean_dg) << ','
        << format_double(result.std_dg) << ',' << format_double(result.cv)
        << ',' << mark_symbol(mark) << '\n';
  }
  {
    std::ofstream out(txt_path);
    out << "technique        mean dG    std     mark\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-16s %7.2f (%5.2f)  %s\n",
                  technique.c_str(), 100.0 * result.mean_dg,
                  100.0 * result.std_dg, mark_glyph(mark).c_str());
    out << buf;
  }
}

void cmd_eval(const RunOptions& o) {
  if (!o.manifest.generator || !o.manifest.trials)
    throw ConfigError("eval needs generator and trials sections");
  LoadedData data = load_data(o);
  if (!data.test) throw ConfigError("eval needs dataset.test_csv");
  const GeneratorSection& g = *o.manifest.generator;
  std::optional<ModelPair> models;
  if (g.kind != GeneratorKind::kSmote)
    models = obtain_models(o, data, /*write_artifacts=*/false);
  const double ratio = resolve_ratio(o, g, data, models);

  TrialsConfig config;
  config.train = &data.train;
  config.test = &*data.test;
  config.generator = make_generator(o, g, data, models, ratio);
  config.classifier = make_classifier(o.manifest, o.out_dir);
  config.metric = make_metric(o.manifest, data.train.schema);
  config.workers = o.workers;

  TrialResult result = run_trials(config, o.manifest.trials->seeds);
  write_trials_csv(o.out_dir / "trials.csv", result);
  write_trial_report(o.out_dir / "report.csv", o.out_dir / "report.txt",
                     generator_kind_name(g.kind), result);
  if (g.kind == GeneratorKind::kNimaiS) {
    json extra;
    extra["masking_ratio"] = ratio;
    std::ofstream out(o.out_dir / "ratio.json");
    out << extra.dump(2) << '\n';
  }

  // Optional entropy/skewness shift over a named feature subset, computed
  // on the first seed's augmentation.
  if (!o.manifest.trials->feature_shift.empty()) {
    std::vector<std::size_t> subset;
    for (const auto& name : o.manifest.trials->feature_shift) {
      bool found = false;
      for (std::size_t fidx = 0; fidx < data.train.schema.n_features(); ++fidx)
        if (data.train.schema.feature_names[fidx] == name) {
          subset.push_back(fidx);
          found = true;
        }
      if (!found)
        throw ConfigError("feature_shift: unknown feature '" + name + "'");
    }
    SyntheticBatch batch = config.generator(o.manifest.trials->seeds[0]);
    Dataset augmented = augment(data.train, batch);
    FeatureShiftReport shift =
        feature_shift_report(data.train, augmented, subset);
    std::ofstream out(o.out_dir / "feature_shift.csv");
    out << "feature,entropy_before,entropy_after,skew_before,skew_after\n";
    for (const auto& row : shift.rows)
      out << data.train.schema.feature_names[row.feature] << ','
          << format_double(row.entropy_before) << ','
          << format_double(row.entropy_after) << ','
          << format_double(row.skew_before) << ','
          << format_double(row.skew_after) << '\n';
    out << "aggregate_pct," << format_double(shift.entropy_change_pct) << ",,"
        << format_double(shift.abs_skew_reduction_pct) << ",\n";
  }
}

void cmd_drift(const RunOptions& o) {
  if (!o.manifest.drift) throw ConfigError("drift needs a drift section");
  const DriftSection& d = *o.manifest.drift;
  const DatasetSection& ds = need_dataset(o.manifest);
  ScenarioManifest scenario_manifest = load_scenario_manifest(d.scenario);

  DriftScenario scenario;
  scenario.train_month = scenario_manifest.train_month;
  for (const auto& p : scenario_manifest.month_csvs)
    scenario.months.push_back(ingest_csv(p, ds.schema));
  if (ds.normalize) {
    Normalizer norm =
        fit_normalizer(scenario.months[scenario.train_month]);
    for (auto& m : scenario.months) m = apply_normalizer(norm, m);
  }
  scenario.validate();

  LoadedData pseudo;
  pseudo.train = scenario.months[scenario.train_month];
  {
    auto [tr, va] = stratified_split(
        pseudo.train, 1.0 - ds.valid_fraction,
        RngStream(effective_seed(o)).child("valid-split").root());
    pseudo.train = std::move(tr);
    pseudo.valid = std::move(va);
  }
  ModelPair models = obtain_models(o, pseudo, /*write_artifacts=*/true);

  std::vector<std::size_t> targets = d.target_months;
  if (targets.empty()) targets = scenario_manifest.recovery_months;
  if (targets.empty())
    throw ConfigError("drift: no target months configured");

  DriftReport report = compare_strategies(
      scenario, models.vqvae, models.mtm, make_classifier(o.manifest, o.out_dir),
      d.recovery, targets, d.seeds, o.workers);
  write_drift_detail_csv(o.out_dir / "drift_detail.csv", report);
  write_drift_summary_csv(o.out_dir / "drift_summary.csv", report);
}

void cmd_hpo(const RunOptions& o) {
  if (!o.manifest.hpo) throw ConfigError("hpo needs an hpo section");
  const HpoSection& h = *o.manifest.hpo;
  LoadedData data = load_data(o);
  const std::uint64_t seed = effective_seed(o);
  Dataset train = stratified_subsample(
      data.train, h.subsample_cap, RngStream(seed).child("subsample").root());

  SearchResult stage1 = asha_search(
      SearchSpace::vqvae_default(),
      [&](const TrialConfigMap& cfg, std::size_t budget) {
        return stage1_vqvae_objective(
            cfg, train, data.valid, budget, h.model_dim,
            RngStream(seed).child("stage1", config_hash(cfg)).root());
      },
      h.rung_budgets, h.eta, h.n_trials, RngStream(seed).child("asha1").root());
  write_ledger_csv(o.out_dir / "hpo_stage1_ledger.csv", stage1.ledger);

  // Retrain the stage-1 winner at the top budget; stage 2 searches against
  // this frozen model.
  VqvaeConfig best_cfg = vqvae_config_from_trial(
      stage1.best, train.schema.n_features(), train.schema.n_classes(),
      h.model_dim);
  VqvaeHparams hp;
  hp.max_epochs = h.rung_budgets.back();
  hp.patience = h.rung_budgets.back();
  VqvaeTrainResult winner =
      train_vqvae(train, data.valid, best_cfg, hp,
                  RngStream(seed).child("stage1-winner").root());

  SearchResult stage2 = asha_search(
      SearchSpace::mtm_default(),
      [&](const TrialConfigMap& cfg, std::size_t budget) {
        return stage2_mtm_objective(
            cfg, winner.model, train, data.valid, budget,
            RngStream(seed).child("stage2", config_hash(cfg)).root());
      },
      h.rung_budgets, h.eta, h.stage2_trials,
      RngStream(seed).child("asha2").root());
  write_ledger_csv(o.out_dir / "hpo_stage2_ledger.csv", stage2.ledger);
  write_best_config_json(o.out_dir / "best_config.json", stage1, stage2);
}

struct TechniqueTrials {
  std::string technique;
  std::vector<double> delta_g;
  bool failed = false;
};

std::vector<double> read_delta_column(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trials csv: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw DataError("empty trials csv: " + path.string());
  // Header is seed,f_real,f_aug,delta_g.
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto pos = line.rfind(',');
    if (pos == std::string::npos)
      throw DataError("bad trials row: " + line);
    out.push_back(std::stod(line.substr(pos + 1)));
  }
  if (out.empty()) throw DataError("trials csv has no rows: " + path.string());
  return out;
}

void cmd_report(const RunOptions& o) {
  if (!o.manifest.report) throw ConfigError("report needs a report section");
  const ReportSection& r = *o.manifest.report;

  std::vector<TechniqueTrials> rows;
  for (const auto& input : r.inputs) {
    TechniqueTrials row;
    row.technique = input.technique;
    row.failed = input.failed;
    if (!input.failed) row.delta_g = read_delta_column(input.trials_csv);
    rows.push_back(std::move(row));
  }

  // Marks table per the CV rule; failures carry an x.
  {
    std::ofstream csv(o.out_dir / "report.csv");
    std::ofstream txt(o.out_dir / "report.txt");
    csv << "technique,mean_dg,std_dg,cv,mark\n";
    txt << "technique        mean dG    std     mark\n";
    for (const auto& row : rows) {
      if (row.failed) {
        csv << row.technique << ",,,," << mark_symbol(Mark::kFailure) << '\n';
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-16s %7s %7s   %s\n",
                      row.technique.c_str(), "", "",
                      mark_glyph(Mark::kFailure).c_str());
        txt << buf;
        continue;
      }
      const double mean = mean_of(row.delta_g);
      const double stddev = sample_std(row.delta_g);
      CvResult cv = cv_reliability(mean, stddev);
      Mark mark = classify_mark(mean, stddev);
      csv << row.technique << ',' << format_double(mean) << ','
          << format_double(stddev) << ',' << format_double(cv.cv) << ','
          << mark_symbol(mark) << '\n';
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%-16s %7.2f (%5.2f)  %s\n",
                    row.technique.c_str(), 100.0 * mean, 100.0 * stddev,
                    mark_glyph(mark).c_str());
      txt << buf;
    }
  }

  // Ranking over the reliable techniques: Kruskal-Wallis, then Dunn when
  // the omnibus test is significant.
  std::vector<std::string> ranked_names;
  std::vector<std::vector<double>> groups;
  for (const auto& row : rows) {
    if (row.failed) continue;
    const double mean = mean_of(row.delta_g);
    const double stddev = sample_std(row.delta_g);
    if (!cv_reliability(mean, stddev).reliable) continue;
    ranked_names.push_back(row.technique);
    groups.push_back(row.delta_g);
  }
  json ranking;
  ranking["format"] = "nimai-ranking";
  ranking["version"] = 1;
  if (groups.size() >= 2) {
    KruskalWallisResult kw = kruskal_wallis(groups);
    ranking["kruskal_wallis"] = {{"h", kw.h}, {"p", kw.p}, {"df", kw.df}};
    if (kw.p < 0.05) {
      DunnResult dunn =
          dunn_test(groups, 0.05,
                    r.bonferroni ? DunnAdjustment::kBonferroni
                                 : DunnAdjustment::kNone);
      json pairs = json::array();
      for (std::size_t a = 0; a < groups.size(); ++a)
        for (std::size_t b = a + 1; b < groups.size(); ++b)
          pairs.push_back({{"a", ranked_names[a]},
                           {"b", ranked_names[b]},
                           {"z", dunn.z(a, b)},
                           {"p", dunn.p(a, b)}});
      ranking["dunn"] = std::move(pairs);
      // Order by mean rank of the pooled delta-G values.
      std::vector<std::pair<double, std::string>> means;
      for (std::size_t i = 0; i < groups.size(); ++i)
        means.push_back({mean_of(groups[i]), ranked_names[i]});
      std::sort(means.begin(), means.end(),
                [](auto& a, auto& b) { return a.first > b.first; });
      json order = json::array();
      for (auto& [mean, name] : means) order.push_back(name);
      ranking["ranking"] = std::move(order);
    } else {
      ranking["ranking"] = "no significant difference";
    }
  } else {
    ranking["ranking"] = "fewer than 2 reliable techniques";
  }
  std::ofstream out(o.out_dir / "ranking.json");
  out << ranking.dump(2) << '\n';
}

}  // namespace

void run_command(const std::string& command, const RunOptions& options) {
  fs::create_directories(options.out_dir);
  if (command == "ingest") cmd_ingest(options);
  else if (command == "train") cmd_train(options);
  else if (command == "synth") cmd_synth(options);
  else if (command == "augment") cmd_augment(options);
  else if (command == "eval") cmd_eval(options);
  else if (command == "drift") cmd_drift(options);
  else if (command == "hpo") cmd_hpo(options);
  else if (command == "report") cmd_report(options);
  else throw ConfigError("unknown command: " + command);
  write_run_metadata(command, options);
}

void replay_run(const std::filesystem::path& metadata_path,
                const std::filesystem::path& out_dir) {
  std::ifstream in(metadata_path);
  if (!in) throw ConfigError("cannot open run metadata: " + metadata_path.string());
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw ConfigError("run metadata parse error: " + std::string(e.what()));
  }
  if (meta.value("format", "") != "nimai-run-metadata")
    throw ConfigError("not a run metadata file: " + metadata_path.string());

  RunOptions options;
  // Paths inside the stored manifest were already resolved at record time.
  options.manifest = ExperimentManifest::from_json(meta.at("manifest"), "/");
  options.out_dir = out_dir;
  if (!meta.at("seed_override").is_null())
    options.seed_override = meta.at("seed_override").get<std::uint64_t>();
  options.workers = meta.value("workers", 1);
  run_command(meta.at("command").get<std::string>(), options);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfigError;
  if (dynamic_cast<const DataError*>(&e)) return kExitDataError;
  if (dynamic_cast<const TrainingError*>(&e)) return kExitTrainingError;
  if (dynamic_cast<const GenerationError*>(&e)) return kExitGenerationError;
  return kExitConfigError;
}

}  // namespace nimai
