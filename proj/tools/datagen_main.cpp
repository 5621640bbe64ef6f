// Seeded toy-data generator: writes the Gaussian-cluster CSVs and scenario
// manifests used by the demos in the README. Not part of the experiment
// surface proper.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nimai/csv.hpp"
#include "nimai/drift.hpp"
#include "nimai/toygen.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"nimai-datagen: seeded Gaussian toy datasets"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  std::uint64_t seed = 7;

  auto* imb = app.add_subcommand("imbalanced",
                                 "Two-class imbalanced cluster dataset");
  std::size_t features = 16, majority = 500, minority = 25, test_rows = 2000;
  double overlap = 0.18;
  imb->add_option("--out", out_dir)->required();
  imb->add_option("--seed", seed);
  imb->add_option("--features", features);
  imb->add_option("--majority", majority);
  imb->add_option("--minority", minority);
  imb->add_option("--test-rows", test_rows);
  imb->add_option("--overlap", overlap,
                  "Cluster sigma; larger means more class overlap");

  auto* drift = app.add_subcommand("drift", "Monthly drift scenario");
  nimai::ToyDriftSpec spec;
  drift->add_option("--out", out_dir)->required();
  drift->add_option("--seed", seed);
  drift->add_option("--months", spec.n_months);
  drift->add_option("--rows", spec.rows_per_month);
  drift->add_option("--drift-month", spec.drift_month);
  drift->add_option("--shift", spec.drift_shift);

  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out_dir);

  try {
    if (imb->parsed()) {
      nimai::Schema schema = nimai::make_toy_schema(features, 2);
      std::vector<double> c0(features, 0.38), c1(features, 0.62);
      nimai::Dataset train = nimai::make_gaussian_dataset(
          schema,
          {{c0, overlap, majority, 0}, {c1, overlap, minority, 1}}, seed);
      nimai::Dataset test = nimai::make_gaussian_dataset(
          schema,
          {{c0, overlap, test_rows / 2, 0}, {c1, overlap, test_rows / 2, 1}},
          seed + 1);
      nimai::write_csv(fs::path(out_dir) / "train.csv", train);
      nimai::write_csv(fs::path(out_dir) / "test.csv", test);
      std::cout << "wrote train.csv (" << train.n_samples() << " rows) and "
                << "test.csv (" << test.n_samples() << " rows)\n";
    } else {
      nimai::DriftScenario scenario = nimai::make_drift_scenario(spec, seed);
      nimai::ScenarioManifest manifest;
      manifest.train_month = scenario.train_month;
      for (std::size_t m = 0; m < scenario.months.size(); ++m) {
        fs::path p = fs::path(out_dir) / ("month" + std::to_string(m) + ".csv");
        nimai::write_csv(p, scenario.months[m]);
        manifest.month_csvs.push_back(p);
      }
      for (std::size_t m = spec.drift_month; m < spec.n_months; ++m)
        manifest.recovery_months.push_back(m);
      nimai::save_scenario_manifest(fs::path(out_dir) / "scenario.json",
                                    manifest);
      std::cout << "wrote " << scenario.months.size()
                << " month CSVs and scenario.json\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
