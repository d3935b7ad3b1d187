#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "varexp/miner.hpp"

namespace varexp::miner {

/// One NDJSON line per (commit, file change). Commits without any source file
/// change are kept as a single line with null path so the stream round-trips.
std::string serialize_history(const std::vector<CommitRecord>& records);
std::vector<CommitRecord> parse_history(std::string_view ndjson);

std::string history_cache_key(std::string_view repo_id, std::string_view head_commit,
                              const SourceFilter& filter);

/// On-disk extraction cache: <root>/<key>/history.ndjson.
class HistoryCache {
 public:
  explicit HistoryCache(std::filesystem::path root) : root_(std::move(root)) {}

  std::filesystem::path location(std::string_view key) const;
  std::optional<std::vector<CommitRecord>> load(std::string_view key) const;
  void store(std::string_view key, const std::vector<CommitRecord>& records) const;

 private:
  std::filesystem::path root_;
};

}  // namespace varexp::miner
