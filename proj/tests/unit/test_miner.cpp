#include <doctest.h>

#include <algorithm>

#include "support.hpp"
#include "varexp/error.hpp"
#include "varexp/history_cache.hpp"
#include "varexp/miner.hpp"
#include "varexp/process.hpp"
#include "varexp/text.hpp"

using namespace varexp;
using namespace varexp::miner;

namespace {

const FileChange* find_change(const CommitRecord& r, const std::string& path) {
  for (const auto& c : r.file_changes)
    if (c.path == path) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("identity normalization") {
  CHECK(normalize_identity("Dave", " Dave@Example.org ").key == "dave@example.org");
  CHECK(normalize_identity("Build Bot", "").key == "build bot");
  CHECK_THROWS_AS(normalize_identity("  ", " "), Error);
}

TEST_CASE("source filter") {
  const SourceFilter f;
  CHECK(f.accepts("src/a.c"));
  CHECK(f.accepts("include/X.HPP"));
  CHECK(f.accepts("lib/t.inl"));
  CHECK_FALSE(f.accepts("README.md"));
  CHECK_FALSE(f.accepts("src/.c"));
  CHECK_FALSE(f.accepts("Makefile.cmake"));
  const SourceFilter only_c({".c"});
  CHECK_FALSE(only_c.accepts("a.h"));
}

TEST_CASE("missing repository and branch") {
  testsupport::TempDir empty("norepo");
  CHECK_THROWS_AS(Repository(empty.path()), Error);
  Repository repo(testsupport::scripted_repo("alpha"));
  try {
    repo.resolve_commit("no-such-branch");
    FAIL("expected BranchNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BranchNotFound);
  }
}

TEST_CASE("history of the alpha fixture") {
  Repository repo(testsupport::scripted_repo("alpha"));
  CHECK(repo.default_branch() == "main");
  ExtractionStats stats;
  const auto history = extract_history(repo, "main", SourceFilter{}, &stats);
  REQUIRE(history.size() == 13);
  CHECK(stats.merge_commits == 1);
  CHECK(repo.count_merges("main") == 1);

  // Oldest first, author time ascending.
  CHECK(std::is_sorted(history.begin(), history.end(),
                       [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }));
  CHECK(history.front().parent_count == 0);
  CHECK(history.front().author.key == "alice@example.org");
  // README.md is filtered, so the root commit changes two source files.
  REQUIRE(history.front().file_changes.size() == 2);
  const auto* core = find_change(history.front(), "src/core.c");
  REQUIRE(core);
  CHECK(core->change_kind == ChangeKind::Added);
  CHECK(core->line_changes.size() == 9);

  // Mixed-case email folds into the same developer.
  CHECK(history[4].author.key == "dave@example.org");

  // Side-branch commits are present, the merge is not.
  CHECK(std::count_if(history.begin(), history.end(),
                      [](const auto& r) { return r.author.key == "erin@example.org"; }) == 3);

  SUBCASE("replace of one line by five") {
    const auto* net = find_change(history[4], "src/net.c");
    REQUIRE(net);
    REQUIRE(net->line_changes.size() == 6);
    CHECK(net->line_changes[0].kind == LineKind::Deletion);
    CHECK(net->line_changes[0].line_number == 3);
    CHECK(net->line_changes[0].content == "  return port;");
    for (int i = 1; i <= 5; ++i) {
      CHECK(net->line_changes[static_cast<std::size_t>(i)].kind == LineKind::Addition);
      CHECK(net->line_changes[static_cast<std::size_t>(i)].line_number == i + 2);
    }
  }
  SUBCASE("pure rename carries no line changes") {
    const auto it = std::find_if(history.begin(), history.end(), [](const auto& r) {
      return !r.file_changes.empty() && r.file_changes[0].change_kind == ChangeKind::Renamed;
    });
    REQUIRE(it != history.end());
    CHECK(it->file_changes[0].path == "src/extras.c");
    CHECK(it->file_changes[0].old_path == std::optional<std::string>("src/extra.c"));
    CHECK(it->file_changes[0].line_changes.empty());
  }
  SUBCASE("non-source commit is kept with no file changes") {
    CHECK(std::any_of(history.begin(), history.end(), [](const auto& r) { return r.file_changes.empty(); }));
  }
}

TEST_CASE("deletion and re-creation in beta") {
  Repository repo(testsupport::scripted_repo("beta"));
  const auto history = extract_history(repo, "main", SourceFilter{});
  REQUIRE(history.size() == 11);
  const auto* gone = find_change(history[3], "lib/old.c");
  REQUIRE(gone);
  CHECK(gone->change_kind == ChangeKind::Deleted);
  CHECK(gone->line_changes.size() == 3);
  const auto* moved = find_change(history[5], "include/parse.h");
  REQUIRE(moved);
  CHECK(moved->change_kind == ChangeKind::Renamed);
  CHECK(moved->pre_image_path() == "lib/parse.h");
  REQUIRE(moved->line_changes.size() == 1);
  CHECK(moved->line_changes[0].line_number == 4);
}

TEST_CASE("snapshots") {
  Repository repo(testsupport::scripted_repo("alpha"));
  BlobReader reader(repo);
  const auto head = repo.resolve_commit("main");
  CHECK(snapshot_file(reader, head, "src/util.h") ==
        "#ifndef UTIL_H\n#define UTIL_H\nint util_max(int a, int b);\nint util_min(int a, int b);\n#endif\n");
  try {
    snapshot_file(reader, head, "src/extra.c");
    FAIL("expected PathAbsentAtCommit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PathAbsentAtCommit);
  }
  try {
    snapshot_file(reader, std::string(40, '0'), "src/core.c");
    FAIL("expected CommitNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CommitNotFound);
  }
  CHECK(repo.list_files(head) ==
        std::vector<std::string>{"README.md", "src/core.c", "src/extras.c", "src/net.c", "src/util.h"});
}

TEST_CASE("corrupt object store is reported as CorruptObject") {
  testsupport::TempDir dir("corrupt");
  const auto copy = dir / "repo";
  std::filesystem::copy(testsupport::scripted_repo("gamma"), copy, std::filesystem::copy_options::recursive);
  // Drop one blob that only the history needs.
  Repository repo(copy);
  const auto r = repo.git({"rev-parse", "main~10:src/main.c"});
  REQUIRE(r.ok());
  const std::string oid(varexp::text::trim(r.out));
  std::filesystem::remove(copy / ".git" / "objects" / oid.substr(0, 2) / oid.substr(2));
  try {
    extract_history(repo, "main", SourceFilter{});
    FAIL("expected CorruptObject");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptObject);
  }
}

TEST_CASE("history cache round trip") {
  Repository repo(testsupport::scripted_repo("beta"));
  const auto history = extract_history(repo, "main", SourceFilter{});
  const auto text = serialize_history(history);
  const auto back = parse_history(text);
  REQUIRE(back.size() == history.size());
  CHECK(serialize_history(back) == text);
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].commit_hash == history[i].commit_hash);
    CHECK(back[i].parent_count == history[i].parent_count);
    CHECK(back[i].file_changes.size() == history[i].file_changes.size());
  }

  testsupport::TempDir dir("cache");
  HistoryCache cache(dir.path());
  const auto key = history_cache_key("beta", history.back().commit_hash, SourceFilter{});
  CHECK(key.size() == 32);
  CHECK(key != history_cache_key("beta", history.back().commit_hash, SourceFilter({".c"})));
  CHECK_FALSE(cache.load(key).has_value());
  cache.store(key, history);
  const auto loaded = cache.load(key);
  REQUIRE(loaded.has_value());
  CHECK(serialize_history(*loaded) == text);
}
