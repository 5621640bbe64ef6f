#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "nimai/manifest.hpp"

namespace nimai {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes carried by the CLI.
enum ExitCode {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitDataError = 2,
  kExitTrainingError = 3,
  kExitGenerationError = 4,
};

struct RunOptions {
  ExperimentManifest manifest;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed_override;
  std::size_t workers = 1;
  bool verbose = false;
};

// Dispatches one subcommand, writes its artifacts plus run_metadata.json
// under out_dir. Throws the error taxonomy from common.hpp on failure.
void run_command(const std::string& command, const RunOptions& options);

// Re-executes the command recorded in a run_metadata.json into a new
// output directory.
void replay_run(const std::filesystem::path& metadata_path,
                const std::filesystem::path& out_dir);

int exit_code_for(const std::exception& e);

}  // namespace nimai
