#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "varexp/config.hpp"
#include "varexp/report.hpp"

namespace varexp::pipeline {

struct PipelineOptions {
  std::filesystem::path out_dir;
  /// Extraction cache and clone directory; defaults to <out_dir>/.cache.
  std::optional<std::filesystem::path> cache_dir;
  bool use_cache = true;
  /// Overrides the config; 0 means one worker per logical core.
  std::optional<unsigned> jobs;
  /// Per-project ledger.ndjson, files.ndjson, expertise.csv, developers.csv and stats.json.
  bool write_artifacts = true;
};

struct PipelineResult {
  std::vector<report::ProjectReport> reports;  // config order
  /// Artifact paths relative to out_dir, for the manifest.
  std::vector<std::string> artifacts;
  bool all_ok() const;
};

/// One project end to end. Never throws; failures land in the report.
report::ProjectReport analyze_project(const config::ProjectSpec& project, const config::CorpusConfig& config,
                                      const PipelineOptions& options, std::vector<std::string>* artifacts = nullptr);

/// All projects on a bounded worker pool.
PipelineResult run_pipeline(const config::CorpusConfig& config, const PipelineOptions& options);

}  // namespace varexp::pipeline
