#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "xformlab/manifest.hpp"

namespace {

int thread_cap() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("XFORMLAB_THREADS");
  if (env == nullptr || *env == '\0') return static_cast<int>(hw);
  try {
    const int v = std::stoi(env);
    if (v >= 1) return v;
  } catch (const std::exception&) {
  }
  std::cerr << "xformlab: ignoring invalid XFORMLAB_THREADS='" << env << "'\n";
  return static_cast<int>(hw);
}

int report(const xformlab::RunOutcome& outcome) {
  (outcome.exit_code == 0 ? std::cout : std::cerr) << outcome.message << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xformlab: transformation-kernel laboratory for the inverse potential problem"};
  app.require_subcommand(1);

  std::string manifest;
  auto* run = app.add_subcommand("run", "Run one experiment manifest");
  run->add_option("manifest", manifest, "Manifest JSON file")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a manifest without running it");
  validate->add_option("manifest", validate_path, "Manifest JSON file")->required();

  std::string dir;
  auto* batch = app.add_subcommand("batch", "Run every *.json manifest in a directory");
  batch->add_option("dir", dir, "Directory of manifests")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : xformlab::kExitValidation;
  }

  if (*run) return report(xformlab::run_manifest_file(manifest));
  if (*validate) return report(xformlab::validate_manifest(validate_path));

  try {
    int worst = 0;
    for (const auto& entry : xformlab::run_batch(dir, thread_cap())) {
      std::cout << entry.manifest.filename().string() << ": " << entry.outcome.message << "\n";
      worst = std::max(worst, entry.outcome.exit_code);
    }
    return worst;
  } catch (const std::exception& e) {
    std::cerr << "validation-error: " << e.what() << "\n";
    return xformlab::kExitValidation;
  }
}
