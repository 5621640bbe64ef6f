#include "nimai/manifest.hpp"

#include <fstream>
#include <set>

namespace nimai {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object())
    throw ConfigError("manifest: " + context + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("manifest: unknown key '" + it.key() + "' in " +
                        context);
  }
}

std::filesystem::path resolve(const std::string& p,
                              const std::filesystem::path& base) {
  std::filesystem::path path(p);
  if (path.is_absolute()) return path;
  return std::filesystem::absolute(base / path);
}

Schema parse_schema(const json& j) {
  check_keys(j, {"features", "label", "classes", "integer_features"},
             "dataset.schema");
  Schema s;
  s.feature_names = j.at("features").get<std::vector<std::string>>();
  s.label_name = j.at("label").get<std::string>();
  s.class_names = j.at("classes").get<std::vector<std::string>>();
  if (j.contains("integer_features")) {
    auto flagged = j.at("integer_features").get<std::vector<std::string>>();
    s.integer_features.assign(s.feature_names.size(), false);
    for (const auto& name : flagged) {
      bool found = false;
      for (std::size_t i = 0; i < s.feature_names.size(); ++i)
        if (s.feature_names[i] == name) {
          s.integer_features[i] = true;
          found = true;
        }
      if (!found)
        throw ConfigError("manifest: integer feature '" + name +
                          "' not in feature list");
    }
  }
  s.validate();
  return s;
}

DatasetSection parse_dataset(const json& j,
                             const std::filesystem::path& base) {
  check_keys(j,
             {"train_csv", "valid_csv", "test_csv", "schema", "normalize",
              "valid_fraction"},
             "dataset");
  DatasetSection d;
  d.train_csv = resolve(j.at("train_csv").get<std::string>(), base);
  if (j.contains("valid_csv"))
    d.valid_csv = resolve(j.at("valid_csv").get<std::string>(), base);
  if (j.contains("test_csv"))
    d.test_csv = resolve(j.at("test_csv").get<std::string>(), base);
  d.schema = parse_schema(j.at("schema"));
  d.normalize = j.value("normalize", true);
  d.valid_fraction = j.value("valid_fraction", 0.2);
  if (d.valid_fraction <= 0.0 || d.valid_fraction >= 1.0)
    throw ConfigError("manifest: valid_fraction must be in (0,1)");
  return d;
}

VqvaeSection parse_vqvae(const json& j) {
  check_keys(j,
             {"model_dim", "heads", "layers", "ff_width", "latent_len",
              "codebook_size", "code_dim", "alpha", "beta", "ema_decay",
              "epochs", "batch_size", "learning_rate", "patience",
              "min_delta"},
             "vqvae");
  VqvaeSection v;
  v.config.arch.model_dim = j.value("model_dim", 16);
  v.config.arch.n_heads = j.value("heads", 2);
  v.config.arch.n_layers = j.value("layers", 1);
  v.config.arch.ff_width = j.value("ff_width", 32);
  v.config.latent_len = j.value("latent_len", 4);
  v.config.codebook_size = j.value("codebook_size", 32);
  v.config.code_dim = j.value("code_dim", 4);
  v.config.alpha = j.value("alpha", 1.0);
  v.config.beta = j.value("beta", 1.0);
  if (j.contains("ema_decay") && !j.at("ema_decay").is_null())
    v.config.ema_decay = j.at("ema_decay").get<double>();
  v.hparams.max_epochs = j.value("epochs", 2000);
  v.hparams.batch_size = j.value("batch_size", 32);
  v.hparams.learning_rate = j.value("learning_rate", 1e-3);
  v.hparams.patience = j.value("patience", 50);
  v.hparams.min_delta = j.value("min_delta", 1e-6);
  return v;
}

MtmSection parse_mtm(const json& j) {
  check_keys(j,
             {"model_dim", "heads", "layers", "ff_width", "epochs",
              "batch_size", "learning_rate", "patience", "min_delta",
              "min_mask_ratio"},
             "mtm");
  MtmSection m;
  if (j.contains("model_dim") || j.contains("heads") || j.contains("layers") ||
      j.contains("ff_width")) {
    nn::TransformerConfig arch;
    arch.model_dim = j.value("model_dim", 16);
    arch.n_heads = j.value("heads", 2);
    arch.n_layers = j.value("layers", 2);
    arch.ff_width = j.value("ff_width", 64);
    m.arch = arch;
  }
  m.hparams.max_epochs = j.value("epochs", 500);
  m.hparams.batch_size = j.value("batch_size", 32);
  m.hparams.learning_rate = j.value("learning_rate", 1e-3);
  m.hparams.patience = j.value("patience", 50);
  m.hparams.min_delta = j.value("min_delta", 1e-6);
  m.hparams.min_mask_ratio = j.value("min_mask_ratio", 0.15);
  m.hparams.arch = m.arch;
  return m;
}

GeneratorSection parse_generator(const json& j) {
  check_keys(j,
             {"kind", "masking_ratio", "ratio_grid", "smote_k",
              "hybrid_multiplier", "fill_steps"},
             "generator");
  GeneratorSection g;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "nimai-s") g.kind = GeneratorKind::kNimaiS;
  else if (kind == "nimai-c") g.kind = GeneratorKind::kNimaiC;
  else if (kind == "nimai-hybrid") g.kind = GeneratorKind::kNimaiHybrid;
  else if (kind == "smote") g.kind = GeneratorKind::kSmote;
  else throw ConfigError("manifest: unknown generator kind '" + kind + "'");
  if (j.contains("masking_ratio") && !j.at("masking_ratio").is_null())
    g.masking_ratio = j.at("masking_ratio").get<double>();
  if (j.contains("ratio_grid"))
    g.ratio_grid = j.at("ratio_grid").get<std::vector<double>>();
  g.smote_k = j.value("smote_k", 5);
  g.hybrid_multiplier = j.value("hybrid_multiplier", 5);
  g.fill_steps = j.value("fill_steps", 8);
  return g;
}

TrialsSection parse_trials(const json& j) {
  check_keys(j, {"seeds", "metric", "exclude_small_classes", "feature_shift"},
             "trials");
  TrialsSection t;
  t.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (t.seeds.empty()) throw ConfigError("manifest: trials.seeds is empty");
  std::set<std::uint64_t> uniq(t.seeds.begin(), t.seeds.end());
  if (uniq.size() != t.seeds.size())
    throw ConfigError("manifest: trial seeds must be distinct");
  const std::string metric = j.value("metric", "macro");
  if (metric.rfind("class:", 0) == 0) {
    t.focus_class = metric.substr(6);
  } else if (metric != "macro") {
    throw ConfigError("manifest: metric must be 'macro' or 'class:<name>'");
  }
  t.exclude_small_classes = j.value("exclude_small_classes", false);
  if (j.contains("feature_shift"))
    t.feature_shift = j.at("feature_shift").get<std::vector<std::string>>();
  return t;
}

ClassifierSection parse_classifier(const json& j) {
  check_keys(j, {"kind", "epochs", "l2_penalty", "learning_rate", "command"},
             "classifier");
  ClassifierSection c;
  c.kind = j.value("kind", "builtin");
  if (c.kind != "builtin" && c.kind != "external")
    throw ConfigError("manifest: classifier kind must be builtin or external");
  c.epochs = j.value("epochs", 500);
  c.l2_penalty = j.value("l2_penalty", 1e-4);
  c.learning_rate = j.value("learning_rate", 0.05);
  c.command = j.value("command", "");
  if (c.kind == "external" && c.command.empty())
    throw ConfigError("manifest: external classifier needs a command");
  return c;
}

DriftSection parse_drift(const json& j, const std::filesystem::path& base) {
  check_keys(j,
             {"scenario", "probe_fraction", "confidence", "multiplier",
              "budget", "sample_ratio", "target_months", "seeds"},
             "drift");
  DriftSection d;
  d.scenario = resolve(j.at("scenario").get<std::string>(), base);
  d.recovery.probe_fraction = j.value("probe_fraction", 0.01);
  if (j.contains("confidence")) {
    auto iv = j.at("confidence").get<std::vector<double>>();
    if (iv.size() != 2)
      throw ConfigError("manifest: drift.confidence must be [lo, hi]");
    d.recovery.confidence_lo = iv[0];
    d.recovery.confidence_hi = iv[1];
  }
  d.recovery.multiplier = j.value("multiplier", 5);
  d.recovery.budget = j.value("budget", 64);
  d.recovery.sample_ratio = j.value("sample_ratio", 0.5);
  d.recovery.validate();
  if (j.contains("target_months"))
    d.target_months = j.at("target_months").get<std::vector<std::size_t>>();
  d.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (d.seeds.empty()) throw ConfigError("manifest: drift.seeds is empty");
  return d;
}

HpoSection parse_hpo(const json& j) {
  check_keys(j,
             {"n_trials", "eta", "rung_budgets", "subsample_cap", "model_dim",
              "stage2_trials"},
             "hpo");
  HpoSection h;
  h.n_trials = j.value("n_trials", 12);
  h.eta = j.value("eta", 3);
  if (j.contains("rung_budgets"))
    h.rung_budgets = j.at("rung_budgets").get<std::vector<std::size_t>>();
  h.subsample_cap = j.value("subsample_cap", 10000);
  h.model_dim = j.value("model_dim", 16);
  h.stage2_trials = j.value("stage2_trials", 6);
  return h;
}

ReportSection parse_report(const json& j, const std::filesystem::path& base) {
  check_keys(j, {"inputs", "bonferroni"}, "report");
  ReportSection r;
  for (const auto& item : j.at("inputs")) {
    check_keys(item, {"technique", "trials_csv", "failed"}, "report.inputs[]");
    ReportInput input;
    input.technique = item.at("technique").get<std::string>();
    if (item.contains("trials_csv"))
      input.trials_csv = resolve(item.at("trials_csv").get<std::string>(), base);
    input.failed = item.value("failed", false);
    if (!input.failed && input.trials_csv.empty())
      throw ConfigError("manifest: report input needs trials_csv or failed");
    r.inputs.push_back(std::move(input));
  }
  if (r.inputs.empty()) throw ConfigError("manifest: report.inputs is empty");
  r.bonferroni = j.value("bonferroni", false);
  return r;
}

AugmentSection parse_augment(const json& j,
                             const std::filesystem::path& base) {
  check_keys(j, {"synthetic_csv"}, "augment");
  AugmentSection a;
  a.synthetic_csv = resolve(j.at("synthetic_csv").get<std::string>(), base);
  return a;
}

json resolve_paths_in_json(json j, const std::filesystem::path& base) {
  // Mirrors the resolution done by the section parsers so the embedded
  // manifest in run metadata is location-independent.
  auto fix = [&](json& node, const char* key) {
    if (node.contains(key) && node.at(key).is_string())
      node[key] = resolve(node.at(key).get<std::string>(), base).string();
  };
  if (j.contains("dataset")) {
    fix(j["dataset"], "train_csv");
    fix(j["dataset"], "valid_csv");
    fix(j["dataset"], "test_csv");
  }
  if (j.contains("models")) {
    fix(j["models"], "vqvae_path");
    fix(j["models"], "mtm_path");
  }
  if (j.contains("drift")) fix(j["drift"], "scenario");
  if (j.contains("augment")) fix(j["augment"], "synthetic_csv");
  if (j.contains("report") && j["report"].contains("inputs"))
    for (auto& item : j["report"]["inputs"]) fix(item, "trials_csv");
  return j;
}

}  // namespace

std::string generator_kind_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kNimaiS: return "nimai-s";
    case GeneratorKind::kNimaiC: return "nimai-c";
    case GeneratorKind::kNimaiHybrid: return "nimai-hybrid";
    case GeneratorKind::kSmote: return "smote";
  }
  return "?";
}

ExperimentManifest ExperimentManifest::from_json(
    nlohmann::json j, const std::filesystem::path& base_dir) {
  check_keys(j,
             {"schema_version", "seed", "dataset", "models", "vqvae", "mtm",
              "generator", "trials", "classifier", "drift", "hpo", "report",
              "augment"},
             "manifest (top level)");
  ExperimentManifest m;
  if (!j.contains("schema_version"))
    throw ConfigError("manifest: schema_version is required");
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != 1)
    throw ConfigError("manifest: unsupported schema_version " +
                      std::to_string(m.schema_version));
  m.seed = j.value("seed", 0);
  if (j.contains("dataset")) m.dataset = parse_dataset(j.at("dataset"), base_dir);
  if (j.contains("models")) {
    check_keys(j.at("models"), {"vqvae_path", "mtm_path"}, "models");
    ModelsSection ms;
    if (j.at("models").contains("vqvae_path"))
      ms.vqvae_path =
          resolve(j.at("models").at("vqvae_path").get<std::string>(), base_dir);
    if (j.at("models").contains("mtm_path"))
      ms.mtm_path =
          resolve(j.at("models").at("mtm_path").get<std::string>(), base_dir);
    m.models = ms;
  }
  if (j.contains("vqvae")) m.vqvae = parse_vqvae(j.at("vqvae"));
  if (j.contains("mtm")) m.mtm = parse_mtm(j.at("mtm"));
  if (j.contains("generator")) m.generator = parse_generator(j.at("generator"));
  if (j.contains("trials")) m.trials = parse_trials(j.at("trials"));
  if (j.contains("classifier"))
    m.classifier = parse_classifier(j.at("classifier"));
  if (j.contains("drift")) m.drift = parse_drift(j.at("drift"), base_dir);
  if (j.contains("hpo")) m.hpo = parse_hpo(j.at("hpo"));
  if (j.contains("report")) m.report = parse_report(j.at("report"), base_dir);
  if (j.contains("augment")) m.augment = parse_augment(j.at("augment"), base_dir);
  m.resolved = resolve_paths_in_json(std::move(j), base_dir);
  return m;
}

ExperimentManifest ExperimentManifest::load(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest parse error: " + std::string(e.what()));
  }
  return from_json(std::move(j), path.parent_path());
}

}  // namespace nimai
