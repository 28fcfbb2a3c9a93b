#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sasreg/error.hpp"

namespace sasreg::cli {

// Process exit codes. Every error kind maps to exactly one class.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,            // unknown command/flag, malformed flag value, bad config file syntax
  kInvalidParams = 3,    // invalid_argument, dimension_too_small, shape_mismatch
  kIo = 4,               // io, missing_directory
  kData = 5,             // malformed_image, inconsistent_dimensions, empty_dataset
  kCheckpoint = 6,       // checkpoint, schema_mismatch
  kDiverged = 7,         // training_diverged
  kMalformedReport = 8,  // malformed_report
  kInternal = 70,        // anything else
};

int exit_code_for(ErrorKind kind);

struct CommandOutcome {
  int exit_code = kOk;
  std::vector<std::filesystem::path> artifacts_written;
  std::string summary;
};

/// Parses argv (argv[0] is the program name), runs the subcommand and
/// prints the outcome. Returns the process exit code.
int run(int argc, const char* const* argv);

/// Same, with the arguments (without program name) given as strings.
CommandOutcome run(const std::vector<std::string>& args);

}  // namespace sasreg::cli
