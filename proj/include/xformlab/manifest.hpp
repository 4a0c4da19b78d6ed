#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace xformlab {

/// One experiment: a kind, its parameters, and where artifacts go.
struct ExperimentManifest {
  std::string kind;
  nlohmann::json parameters = nlohmann::json::object();
  /// Resolved against the manifest's directory.
  std::filesystem::path output_dir;
  /// Directory that relative CSV paths in `parameters` refer to.
  std::filesystem::path base_dir;
};

const std::vector<std::string>& experiment_kinds();

/// Parses and checks the top-level shape. Without `output_dir` the artifacts go
/// to `<manifest stem>.out` next to the manifest.
ExperimentManifest parse_manifest(const nlohmann::json& document,
                                  const std::filesystem::path& manifest_path);
ExperimentManifest load_manifest(const std::filesystem::path& manifest_path);

enum ExitCode : int { kExitPass = 0, kExitValidation = 2, kExitNumerical = 3 };

struct RunOutcome {
  int exit_code = kExitPass;
  /// Single line: "pass", "check-failed: <names>", "validation-error: <reason>", ...
  std::string message;
  nlohmann::json summary;
};

/// Checks every parameter of the kind without computing anything.
RunOutcome validate_manifest(const std::filesystem::path& manifest_path);

/// Runs the experiment and writes its artifacts plus summary.json, which is
/// written on every path, including failures.
RunOutcome run_manifest(const ExperimentManifest& manifest);
RunOutcome run_manifest_file(const std::filesystem::path& manifest_path);

struct BatchEntry {
  std::filesystem::path manifest;
  RunOutcome outcome;
};

/// Runs every *.json manifest in `dir` (sorted by name) on up to `threads`
/// workers. Manifests that share an output directory with an earlier one fail
/// validation.
std::vector<BatchEntry> run_batch(const std::filesystem::path& dir, int threads);

}  // namespace xformlab
