#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varexp/config.hpp"
#include "varexp/stats.hpp"

namespace varexp::report {

inline constexpr std::string_view kToolkitVersion = "1.0.0";

struct ProjectReport {
  std::string name;
  bool ok = true;
  std::string error;  // set when !ok

  std::string repo;
  std::string branch;
  std::string head_commit;

  std::size_t commits = 0;  // non-merge
  std::size_t merge_commits = 0;
  std::size_t developers = 0;

  std::size_t files = 0;
  std::size_t variable_files = 0;
  std::vector<std::string> constants;
  long long total_loc = 0;
  long long mandatory_loc = 0;
  long long variable_loc = 0;
  double pct_mandatory = 0.0;
  double pct_variable = 0.0;

  stats::ClassCounts classes;
  std::optional<stats::ConcentrationResult> concentration;  // Specialists and Mixed only
  std::size_t evaluated_files = 0;
  std::vector<stats::EvaluationResult> evaluations;
  std::vector<stats::AssociationResult> associations;
  std::vector<std::string> diagnostics;

  variability::GuardPolicy guard_policy;
  stats::Aggregation aggregation = stats::Aggregation::Micro;
  config::GiniBasis gini_basis = config::GiniBasis::Touches;
  std::vector<std::string> source_extensions;

  double class_pct(stats::DevClass cls) const;
  /// The evaluation for `metric` under the configured aggregation, if any.
  const stats::EvaluationResult* primary_evaluation(expertise::Metric metric) const;
};

std::string report_json(const ProjectReport& report);
/// Concentration statistics with Lorenz points as arrays.
std::string stats_json(const ProjectReport& report);

/// One row per project: repository, variability, class, concentration and evaluation columns, 6 decimals.
std::string summary_csv(std::span<const ProjectReport> reports);

struct ManifestEntry {
  std::string path;  // relative to the output directory, '/' separated
  std::string sha256;
  std::size_t bytes = 0;
};

struct Formats {
  bool json = true;
  bool csv = true;
};

/// Writes <out>/<project>/report.json, <out>/summary.csv and
/// <out>/manifest.json. The manifest also hashes `extra_artifacts` (paths
/// relative to `out_dir`). Throws IoFailure.
std::vector<ManifestEntry> emit_reports(std::span<const ProjectReport> reports,
                                        const std::filesystem::path& out_dir, Formats formats = {},
                                        std::span<const std::string> extra_artifacts = {});

struct ScreeningDecision {
  std::string name;
  bool included = false;
  std::vector<std::string> reasons;
};

/// Included iff developers > min_developers and constants >= min_constants.
std::vector<ScreeningDecision> screen_corpus(std::span<const ProjectReport> reports, int min_developers,
                                             int min_constants);

/// Reads the reports back from an `analyze` output directory.
std::vector<ProjectReport> load_reports(const std::filesystem::path& out_dir);
ProjectReport parse_report_json(std::string_view json_text);

/// Cross-project analyses; needs at least three successful projects.
std::optional<std::string> corpus_json(std::span<const ProjectReport> reports);

}  // namespace varexp::report
