#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "varexp/process.hpp"

/// Extraction of per-line change history from a Git repository.
namespace varexp::miner {

struct DeveloperId {
  std::string key;  // lowercase, non-empty
  std::string display_name;
  std::set<std::string> emails;

  friend bool operator==(const DeveloperId& a, const DeveloperId& b) { return a.key == b.key; }
};

enum class ChangeKind { Added, Modified, Deleted, Renamed };
enum class LineKind { Addition, Deletion };

std::string_view to_string(ChangeKind kind);
std::optional<ChangeKind> parse_change_kind(std::string_view s);

/// line_number is the post-image line for additions and the pre-image line for
/// deletions. A textual modification is a deletion plus an addition.
struct LineChange {
  LineKind kind = LineKind::Addition;
  int line_number = 1;
  std::string content;
};

struct FileChange {
  std::string path;
  ChangeKind change_kind = ChangeKind::Modified;
  std::optional<std::string> old_path;  // set iff change_kind == Renamed
  std::vector<LineChange> line_changes;  // deletions first, then additions

  /// Path of the pre-image (old_path for renames, path otherwise).
  const std::string& pre_image_path() const { return old_path ? *old_path : path; }
};

struct CommitRecord {
  std::string commit_hash;
  DeveloperId author;
  std::int64_t timestamp = 0;  // author time, UTC seconds
  int parent_count = 0;
  std::vector<FileChange> file_changes;
};

class SourceFilter {
 public:
  SourceFilter();
  explicit SourceFilter(std::vector<std::string> extensions);

  bool accepts(std::string_view path) const;
  const std::vector<std::string>& extensions() const { return extensions_; }

  static const std::vector<std::string>& default_extensions();

 private:
  std::vector<std::string> extensions_;
};

bool is_source_file(std::string_view path, const SourceFilter& filter = SourceFilter{});

/// Email-keyed identity; falls back to the name when the email is blank.
/// Throws EmptyIdentity when both are blank.
DeveloperId normalize_identity(std::string_view raw_name, std::string_view raw_email);

/// Handle on a local repository; every git call goes through here so that
/// user configuration cannot change the output format.
class Repository {
 public:
  /// Throws RepositoryNotFound.
  explicit Repository(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }

  /// Full hash of `rev`; throws BranchNotFound when it does not name a commit.
  std::string resolve_commit(std::string_view rev) const;

  /// The branch HEAD points at, or "HEAD" when detached.
  std::string default_branch() const;

  /// Every blob path in the tree of `commit`, sorted.
  std::vector<std::string> list_files(std::string_view commit) const;

  std::size_t count_merges(std::string_view rev) const;

  std::vector<std::string> git_argv(std::vector<std::string> args) const;
  process::RunOptions run_options() const;
  process::RunResult git(std::vector<std::string> args) const;

 private:
  std::filesystem::path path_;
};

struct ExtractionStats {
  std::size_t commits = 0;
  std::size_t merge_commits = 0;
  std::vector<std::string> warnings;
};

using CommitSink = std::function<void(CommitRecord&&)>;

/// Streams every non-merge commit reachable from `branch`, parents before
/// children (ties by timestamp), oldest first. Merge commits are traversed
/// but never emitted.
ExtractionStats extract_history(const Repository& repo, std::string_view branch,
                                const SourceFilter& filter, const CommitSink& sink);

std::vector<CommitRecord> extract_history(const Repository& repo, std::string_view branch,
                                          const SourceFilter& filter,
                                          ExtractionStats* stats = nullptr);

/// Persistent `git cat-file --batch` session.
class BlobReader {
 public:
  struct Blob {
    std::string object_id;
    std::string text;  // lossy UTF-8
  };

  explicit BlobReader(const Repository& repo);
  ~BlobReader();
  BlobReader(const BlobReader&) = delete;
  BlobReader& operator=(const BlobReader&) = delete;

  /// `spec` is any object name git accepts, e.g. "<commit>:<path>".
  /// Returns nullopt for missing objects and non-blobs.
  std::optional<Blob> lookup(std::string_view spec);

  bool commit_exists(std::string_view commit);

 private:
  process::BatchProcess process_;
};

/// Throws CommitNotFound or PathAbsentAtCommit.
std::string snapshot_file(BlobReader& reader, std::string_view commit, std::string_view path);
std::string snapshot_file(const Repository& repo, std::string_view commit, std::string_view path);

}  // namespace varexp::miner
