#include "nimai/hpo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"
#include "nimai/csv.hpp"
#include "nimai/rng.hpp"

namespace nimai {

SearchSpace SearchSpace::vqvae_default() {
  SearchSpace s;
  s.dims = {
      {"heads", ChoiceDomain{{2, 4, 8, 16}}},
      {"ff_width", ChoiceDomain{{16, 32, 64, 128, 256, 512}}},
      {"layers", ChoiceDomain{{1, 2, 4}}},
      {"codebook_size", ChoiceDomain{{32, 64, 96, 128, 256, 512, 1024}}},
      {"code_dim", ChoiceDomain{{2, 4, 6, 12, 16, 24, 32, 48}}},
      {"latent_len", ChoiceDomain{{2, 4, 8, 16, 32}}},
      {"alpha", IntervalDomain{1.0, 50.0, true}},
      {"beta", IntervalDomain{1.0, 50.0, true}},
      {"ema_decay", IntervalDomain{0.0, 1.0, false}},
  };
  return s;
}

SearchSpace SearchSpace::mtm_default() {
  SearchSpace s;
  s.dims = {
      {"heads", ChoiceDomain{{2, 4, 8, 16}}},
      {"ff_width", ChoiceDomain{{16, 32, 64, 128, 256, 512}}},
      {"layers", ChoiceDomain{{1, 2, 4}}},
  };
  return s;
}

void SearchSpace::validate() const {
  if (dims.empty()) throw ConfigError("search space: no dimensions");
  for (const auto& d : dims) {
    if (d.name.empty()) throw ConfigError("search space: unnamed dimension");
    if (const auto* c = std::get_if<ChoiceDomain>(&d.domain)) {
      if (c->options.empty())
        throw ConfigError("search space: empty choice set for " + d.name);
    } else {
      const auto& iv = std::get<IntervalDomain>(d.domain);
      if (!(iv.lo < iv.hi))
        throw ConfigError("search space: bad interval for " + d.name);
      if (iv.log_scale && iv.lo <= 0.0)
        throw ConfigError("search space: log interval needs lo > 0 for " +
                          d.name);
    }
  }
}

std::uint64_t config_hash(const TrialConfigMap& config) {
  std::uint64_t h = kFnvOffset;
  for (const auto& [k, v] : config) {
    h = fnv1a(k, h);
    h = fnv1a_u64(std::bit_cast<std::uint64_t>(v), h);
  }
  return h;
}

namespace {

TrialConfigMap sample_config(const SearchSpace& space, RngStream& rng) {
  TrialConfigMap config;
  for (const auto& d : space.dims) {
    if (const auto* c = std::get_if<ChoiceDomain>(&d.domain)) {
      config[d.name] = c->options[rng.index(c->options.size())];
    } else {
      const auto& iv = std::get<IntervalDomain>(d.domain);
      if (iv.log_scale) {
        config[d.name] =
            std::exp(rng.uniform(std::log(iv.lo), std::log(iv.hi)));
      } else {
        config[d.name] = rng.uniform(iv.lo, iv.hi);
      }
    }
  }
  return config;
}

}  // namespace

SearchResult asha_search(const SearchSpace& space, const ObjectiveFn& objective,
                         const std::vector<std::size_t>& rung_budgets,
                         std::size_t eta, std::size_t n_trials,
                         std::uint64_t seed) {
  space.validate();
  if (rung_budgets.empty()) throw ConfigError("asha: no rungs");
  if (eta < 2) throw ConfigError("asha: eta must be >= 2");
  if (n_trials < 1) throw ConfigError("asha: need at least one trial");

  struct Trial {
    TrialConfigMap config;
    std::size_t highest_rung = 0;  // 1-based; 0 = not evaluated yet
    double objective = 0.0;        // at highest completed rung
    bool dead = false;             // collapsed or failed
  };
  const std::size_t n_rungs = rung_budgets.size();
  std::vector<Trial> trials;
  // Completed (objective, trial) per rung, and which were promoted out.
  std::vector<std::vector<std::pair<double, std::size_t>>> rung_done(n_rungs);
  std::vector<std::vector<bool>> promoted(n_rungs);

  SearchResult result;
  RngStream root(seed);

  auto evaluate = [&](std::size_t t, std::size_t rung) {
    Trial& trial = trials[t];
    TrialOutcome outcome = objective(trial.config, rung_budgets[rung]);
    result.ledger.push_back({t, trial.config, rung + 1, rung_budgets[rung],
                             outcome.objective, outcome.collapsed,
                             outcome.failed});
    if (outcome.failed || outcome.collapsed) {
      trial.dead = true;
      return;
    }
    trial.highest_rung = rung + 1;
    trial.objective = outcome.objective;
    rung_done[rung].push_back({outcome.objective, t});
    promoted[rung].push_back(false);
  };

  // Serial ASHA: one evaluation per step. Promote from the highest rung
  // that has a promotable trial (in the top floor(n/eta) of its rung's
  // completed results); otherwise start a fresh configuration at rung 1.
  auto find_promotable = [&]() -> std::pair<std::size_t, std::size_t> {
    for (std::size_t rung = n_rungs - 1; rung-- > 0;) {
      auto& done = rung_done[rung];
      const auto top_k = std::size_t(double(done.size()) / double(eta));
      if (top_k == 0) continue;
      // Rank the rung's results; ties break by trial id for determinism.
      std::vector<std::size_t> order(done.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (done[a].first != done[b].first) return done[a].first < done[b].first;
        return done[a].second < done[b].second;
      });
      for (std::size_t r = 0; r < top_k; ++r) {
        const std::size_t idx = order[r];
        if (!promoted[rung][idx]) {
          promoted[rung][idx] = true;
          return {done[idx].second, rung + 1};
        }
      }
    }
    return {std::size_t(-1), 0};
  };

  while (true) {
    auto [t, rung] = find_promotable();
    if (t != std::size_t(-1)) {
      evaluate(t, rung);
      continue;
    }
    if (trials.size() < n_trials) {
      RngStream trial_rng = root.child("trial", trials.size());
      trials.push_back({sample_config(space, trial_rng), 0, 0.0, false});
      evaluate(trials.size() - 1, 0);
      continue;
    }
    break;  // nothing promotable, no budget for new trials
  }

  for (std::size_t t = 0; t < trials.size(); ++t) {
    const Trial& trial = trials[t];
    if (trial.dead || trial.highest_rung == 0) continue;
    const bool better =
        !result.found || trial.objective < result.best_objective ||
        (trial.objective == result.best_objective &&
         config_hash(trial.config) < config_hash(result.best));
    if (better) {
      result.best = trial.config;
      result.best_objective = trial.objective;
      result.found = true;
    }
  }
  if (!result.found)
    throw TrainingError("asha: every trial failed or collapsed");
  return result;
}

VqvaeConfig vqvae_config_from_trial(const TrialConfigMap& config,
                                    std::size_t n_features,
                                    std::size_t n_classes,
                                    std::size_t model_dim) {
  auto need = [&](const char* key) {
    auto it = config.find(key);
    if (it == config.end())
      throw ConfigError("trial config missing key: " + std::string(key));
    return it->second;
  };
  VqvaeConfig cfg;
  cfg.n_features = n_features;
  cfg.n_classes = n_classes;
  cfg.arch.model_dim = model_dim;
  cfg.arch.n_heads = std::size_t(need("heads"));
  cfg.arch.ff_width = std::size_t(need("ff_width"));
  cfg.arch.n_layers = std::size_t(need("layers"));
  cfg.codebook_size = std::size_t(need("codebook_size"));
  cfg.code_dim = std::size_t(need("code_dim"));
  cfg.latent_len = std::size_t(need("latent_len"));
  cfg.alpha = need("alpha");
  cfg.beta = need("beta");
  if (auto it = config.find("ema_decay"); it != config.end()) {
    // Decay at the interval edges falls back to gradient updates.
    if (it->second > 0.0 && it->second < 1.0) cfg.ema_decay = it->second;
  }
  return cfg;
}

TrialOutcome stage1_vqvae_objective(const TrialConfigMap& config,
                                    const Dataset& train, const Dataset& valid,
                                    std::size_t budget, std::size_t model_dim,
                                    std::uint64_t seed) {
  TrialOutcome out;
  try {
    VqvaeConfig cfg = vqvae_config_from_trial(
        config, train.schema.n_features(), train.schema.n_classes(),
        model_dim);
    VqvaeHparams hp;
    hp.max_epochs = budget;
    hp.patience = budget;  // the rung budget is the stopping rule here
    VqvaeTrainResult trained = train_vqvae(train, valid, cfg, hp, seed);
    VqLosses losses = eval_vqvae(trained.model, valid);
    out.objective = losses.embed + losses.commit;
    out.collapsed = codebook_usage(trained.model, train).collapsed;
  } catch (const std::exception&) {
    out.failed = true;
  }
  return out;
}

TrialOutcome stage2_mtm_objective(const TrialConfigMap& config,
                                  const VqvaeModel& vqvae,
                                  const Dataset& train, const Dataset& valid,
                                  std::size_t budget, std::uint64_t seed) {
  TrialOutcome out;
  try {
    auto need = [&](const char* key) {
      auto it = config.find(key);
      if (it == config.end())
        throw ConfigError("trial config missing key: " + std::string(key));
      return it->second;
    };
    MtmHparams hp;
    hp.max_epochs = budget;
    hp.patience = budget;
    nn::TransformerConfig arch = vqvae.config().arch;
    arch.n_heads = std::size_t(need("heads"));
    arch.ff_width = std::size_t(need("ff_width"));
    arch.n_layers = std::size_t(need("layers"));
    hp.arch = arch;
    MtmTrainResult trained = train_mtm(vqvae, train, valid, hp, seed);
    out.objective = trained.history.empty()
                        ? 0.0
                        : trained.history[trained.best_epoch].valid_ce;
  } catch (const std::exception&) {
    out.failed = true;
  }
  return out;
}

void write_ledger_csv(const std::filesystem::path& path,
                      const std::vector<LedgerRow>& ledger) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write ledger: " + path.string());
  // Union of config keys across rows, sorted, for stable columns.
  std::set<std::string> keys;
  for (const auto& row : ledger)
    for (const auto& [k, v] : row.config) keys.insert(k);
  out << "trial,rung,budget,objective,collapsed,failed";
  for (const auto& k : keys) out << ',' << k;
  out << '\n';
  for (const auto& row : ledger) {
    out << row.trial << ',' << row.rung << ',' << row.budget << ','
        << format_double(row.objective) << ',' << (row.collapsed ? 1 : 0)
        << ',' << (row.failed ? 1 : 0);
    for (const auto& k : keys) {
      out << ',';
      auto it = row.config.find(k);
      if (it != row.config.end()) out << format_double(it->second);
    }
    out << '\n';
  }
}

void write_best_config_json(const std::filesystem::path& path,
                            const SearchResult& stage1,
                            const SearchResult& stage2) {
  nlohmann::json j;
  j["format"] = "nimai-best-config";
  j["version"] = 1;
  j["stage1"] = {{"objective", stage1.best_objective},
                 {"config", stage1.best}};
  j["stage2"] = {{"objective", stage2.best_objective},
                 {"config", stage2.best}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write best config: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace nimai
