#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

/// Scripted synthetic repositories with fully known history, built through
/// `git fast-import` so that commit hashes are reproducible.
namespace varexp::fixtures {

struct Author {
  std::string name;
  std::string email;
};

enum class OpKind { Create, Insert, Delete, Replace, DeleteFile, Rename };

/// Line numbers are 1-based and refer to the file as it stands when the op runs.
struct Op {
  OpKind kind = OpKind::Insert;
  std::string path;
  int line = 0;                    // Insert: new lines start here; Delete/Replace: first old line
  int count = 0;                   // Delete/Replace: number of old lines
  std::vector<std::string> lines;  // Create/Insert/Replace
  std::string new_path;            // Rename
};

struct ScriptedCommit {
  std::string branch = "main";
  Author author;
  std::string message;
  std::vector<Op> ops;
  /// Branch merged into `branch`; a merge carries no ops.
  std::optional<std::string> merge_from;
  /// Branch this commit's branch is forked from when it does not exist yet.
  std::optional<std::string> fork_from;
};

struct ScriptedRepo {
  std::string name;
  std::vector<ScriptedCommit> commits;
};

using Tree = std::map<std::string, std::vector<std::string>>;

/// Applies ops to a tree. Throws std::invalid_argument on out-of-range edits.
void apply_ops(Tree& tree, std::span<const Op> ops);

/// The three hand-written repositories used by the end-to-end oracle.
std::vector<ScriptedRepo> scripted_corpus();

/// Procedural repository of `commits` commits; same seed, same history.
ScriptedRepo synthetic_repo(const std::string& name, int commits, std::uint32_t seed);

/// Writes `repo` as a fresh Git repository at `dir` with HEAD on main.
void materialize(const ScriptedRepo& repo, const std::filesystem::path& dir);

/// JSON description of the scripts, consumed by the independent oracle.
std::string scripts_json(std::span<const ScriptedRepo> repos);

struct GeneratedCorpus {
  std::vector<std::string> names;
  std::filesystem::path config;  // analysis config listing every generated repo
};

/// Builds <out>/repos/<name> for each scripted repo (plus "large" when
/// requested), <out>/fixtures.json and <out>/config.json.
GeneratedCorpus generate(const std::filesystem::path& out, std::optional<int> large_commits = {});

}  // namespace varexp::fixtures
