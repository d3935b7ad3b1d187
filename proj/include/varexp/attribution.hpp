#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "varexp/miner.hpp"
#include "varexp/variability.hpp"

/// Ground truth: who touched variable and mandatory code, per file.
namespace varexp::attribution {

struct TouchRecord {
  miner::DeveloperId developer;
  std::string path;
  std::string commit_hash;
  int variable_lines = 0;
  int mandatory_lines = 0;
};

/// Read access to file images at arbitrary revisions, already classified.
class SnapshotSource {
 public:
  virtual ~SnapshotSource() = default;

  /// `rev` is a commit name (e.g. "<hash>" or "<hash>^"). Throws SnapshotUnavailable.
  virtual std::shared_ptr<const variability::VariabilityMap> map_at(std::string_view rev,
                                                                   std::string_view path) = 0;
};

/// Backed by `git cat-file --batch`; maps are memoized by blob id, so a blob
/// is parsed at most once.
class GitSnapshotSource final : public SnapshotSource {
 public:
  GitSnapshotSource(const miner::Repository& repo, variability::GuardPolicy policy);

  std::shared_ptr<const variability::VariabilityMap> map_at(std::string_view rev,
                                                           std::string_view path) override;

  std::size_t parsed_blobs() const { return memo_.size(); }

 private:
  miner::BlobReader reader_;
  variability::GuardPolicy policy_;
  std::unordered_map<std::string, std::shared_ptr<const variability::VariabilityMap>> memo_;
};

/// Snapshot source over literal texts; used for tests and replay.
class InMemorySnapshotSource final : public SnapshotSource {
 public:
  explicit InMemorySnapshotSource(variability::GuardPolicy policy = {}) : policy_(policy) {}

  void add(std::string rev, std::string path, std::string text);

  std::shared_ptr<const variability::VariabilityMap> map_at(std::string_view rev,
                                                           std::string_view path) override;

 private:
  variability::GuardPolicy policy_;
  std::map<std::pair<std::string, std::string>, std::shared_ptr<const variability::VariabilityMap>>
      maps_;
};

/// Pre-image lines that are pure removals. Within one hunk the first
/// min(deleted, added) deletions pair with additions as modifications; the
/// remaining deletions are unpaired.
std::vector<int> unpaired_deletions(const miner::FileChange& change);

/// Additions are classified against the post-image, unpaired deletions
/// against the first-parent pre-image. Throws SnapshotUnavailable.
std::vector<TouchRecord> attribute_commit(const miner::CommitRecord& record,
                                          SnapshotSource& snapshots,
                                          const miner::SourceFilter& filter = {});

struct DevFileStats {
  int variable_touches = 0;
  int mandatory_touches = 0;
  int commit_count = 0;
  bool first_author = false;
};

struct FileStats {
  std::string path;  // latest path, following renames
  int total_commits = 0;
  std::set<std::string> changed_by;
  std::set<std::string> variable_contributors;
  std::optional<std::string> first_author;
  bool alive = true;  // false when the last event deleted the file
};

struct LedgerOptions {
  /// Fold only the history up to and including this commit.
  std::optional<std::string> up_to_commit;
};

class ContributionLedger;

ContributionLedger build_ledger(std::span<const TouchRecord> touches,
                                std::span<const miner::CommitRecord> history,
                                const LedgerOptions& options);

class ContributionLedger {
 public:
  using EntryKey = std::pair<std::string, std::string>;  // (path, developer_key)

  const std::map<std::string, FileStats>& files() const { return files_; }
  const std::map<EntryKey, DevFileStats>& entries() const { return entries_; }
  const std::map<std::string, miner::DeveloperId>& developers() const { return developers_; }

  bool has_file(std::string_view path) const;
  /// Throws UnknownPath.
  const FileStats& file(std::string_view path) const;
  /// (developer_key, stats) for every developer who changed `path`. Throws UnknownPath.
  std::vector<std::pair<std::string, DevFileStats>> contributors(std::string_view path) const;

  /// Records for `ledger.ndjson` / `files.ndjson`, sorted by path then developer.
  std::string entries_ndjson() const;
  std::string files_ndjson() const;

 private:
  friend ContributionLedger build_ledger(std::span<const TouchRecord>,
                                         std::span<const miner::CommitRecord>,
                                         const LedgerOptions&);

  std::map<std::string, FileStats> files_;
  std::map<EntryKey, DevFileStats> entries_;
  std::map<std::string, miner::DeveloperId> developers_;
};

/// Pure fold over the two streams. `history` must be in extraction order
/// (parents before children); renames carry a file's identity forward.
/// Throws InconsistentStreams when a touch names a commit or file change
/// absent from `history`.
ContributionLedger build_ledger(std::span<const TouchRecord> touches,
                                std::span<const miner::CommitRecord> history,
                                const LedgerOptions& options = {});

}  // namespace varexp::attribution
