#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "causal_shap/cli/config.hpp"
#include "causal_shap/shapley.hpp"

namespace cshap::cli {

// Writes a group of files so that either all of them appear or none do:
// contents go to temporaries next to their targets, which are renamed only
// once every temporary has been written.
class AtomicFileSet {
 public:
  void add(std::filesystem::path target, std::string content);
  void commit();

 private:
  std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

struct RunOutput {
  FeatureSpace features;
  std::vector<std::vector<double>> instances;
  std::vector<AttributionReport> reports;
  std::vector<std::filesystem::path> files;
};

// Fits the distribution model and attributes every configured instance.
RunOutput compute_reports(const RunConfig& config);
// compute_reports plus the report files and the long-format sina data.
RunOutput run_explain(const RunConfig& config);

// Exit status for an exception escaping a command: 2 for configuration and
// validation problems, 3 for external predictor failures, 1 otherwise.
int exit_code_for(const std::exception& e);

// Entry point of the command-line tool.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cshap::cli
