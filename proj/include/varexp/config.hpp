#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "varexp/stats.hpp"
#include "varexp/variability.hpp"

namespace varexp::config {

struct ProjectSpec {
  std::string name;
  std::string repo;  // local path (relative to the config file) or clone URL
  std::optional<std::string> branch;
  std::optional<std::string> pinned_commit;
};

/// Which per-developer quantity the concentration statistics run over.
enum class GiniBasis { Touches, Commits };
std::string_view to_string(GiniBasis basis);

struct CorpusConfig {
  std::vector<ProjectSpec> projects;
  variability::GuardPolicy guard_policy;
  std::vector<std::string> source_extensions;  // empty means the default set
  stats::Aggregation aggregation = stats::Aggregation::Micro;
  int min_developers = 30;
  int min_constants = 50;
  GiniBasis gini_basis = GiniBasis::Touches;
  unsigned jobs = 0;  // 0: one worker per logical core
  std::filesystem::path base_dir;  // directory of the config file
  std::optional<std::filesystem::path> cache_dir;
};

/// Throws InvalidConfig with the offending key in the message.
CorpusConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
CorpusConfig load_config(const std::filesystem::path& file);

bool is_remote(std::string_view repo);

}  // namespace varexp::config
