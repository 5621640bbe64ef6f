#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nimai/experiment.hpp"

namespace {

struct CommonArgs {
  std::string manifest;
  std::string out;
  std::optional<std::uint64_t> seed_override;
  std::size_t workers = 1;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--manifest", args.manifest, "Experiment manifest (JSON)")
      ->required();
  cmd->add_option("--out", args.out, "Output directory")->required();
  cmd->add_option("--seed-override", args.seed_override,
                  "Override the manifest seed");
  cmd->add_option("--workers", args.workers, "Per-trial parallelism");
  cmd->add_flag("--verbose", args.verbose, "Chattier progress output");
}

void emit_error(const std::string& kind, const std::string& message) {
  nlohmann::json diag;
  diag["error"] = kind;
  diag["message"] = message;
  std::cerr << diag.dump() << std::endl;
}

int dispatch(const std::string& command, const CommonArgs& args) {
  try {
    nimai::RunOptions options;
    options.manifest = nimai::ExperimentManifest::load(args.manifest);
    options.out_dir = args.out;
    options.seed_override = args.seed_override;
    options.workers = std::max<std::size_t>(1, args.workers);
    options.verbose = args.verbose;
    nimai::run_command(command, options);
    if (args.verbose)
      std::cerr << command << ": artifacts written to " << args.out
                << std::endl;
    return nimai::kExitOk;
  } catch (const nimai::ConfigError& e) {
    emit_error("config", e.what());
    return nimai::kExitConfigError;
  } catch (const nimai::DataError& e) {
    emit_error("data", e.what());
    return nimai::kExitDataError;
  } catch (const nimai::TrainingError& e) {
    emit_error("training", e.what());
    return nimai::kExitTrainingError;
  } catch (const nimai::GenerationError& e) {
    emit_error("generation", e.what());
    return nimai::kExitGenerationError;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return nimai::kExitConfigError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "nimai: tabular data augmentation with a discrete-latent generative "
      "model, plus its evaluation and drift-recovery harness"};
  app.require_subcommand(1);

  const char* commands[] = {"ingest", "train", "synth", "augment",
                            "eval",   "drift", "hpo",   "report"};
  const char* descriptions[] = {
      "Validate, split and normalize the dataset",
      "Train the VQ-VAE and MTM models",
      "Generate a synthetic batch with provenance",
      "Concatenate real and synthetic data",
      "Run the seeded augmentation trials and report delta-G",
      "Compare drift-recovery strategies on a scenario",
      "Two-stage ASHA hyperparameter search",
      "Marks table and statistical ranking across techniques"};

  CommonArgs args[9];
  for (int i = 0; i < 8; ++i)
    add_common(app.add_subcommand(commands[i], descriptions[i]), args[i]);

  std::string replay_metadata, replay_out;
  CLI::App* replay = app.add_subcommand(
      "replay", "Re-execute a run from its run_metadata.json");
  replay->add_option("--metadata", replay_metadata, "run_metadata.json path")
      ->required();
  replay->add_option("--out", replay_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  for (int i = 0; i < 8; ++i)
    if (app.get_subcommand(commands[i])->parsed())
      return dispatch(commands[i], args[i]);

  if (replay->parsed()) {
    try {
      nimai::replay_run(replay_metadata, replay_out);
      return nimai::kExitOk;
    } catch (const std::exception& e) {
      emit_error("replay", e.what());
      return nimai::exit_code_for(e);
    }
  }
  return nimai::kExitConfigError;
}
