#include <doctest.h>

#include "support.hpp"
#include "varexp/attribution.hpp"
#include "varexp/error.hpp"

using namespace varexp;
using namespace varexp::attribution;
using miner::ChangeKind;
using miner::CommitRecord;
using miner::FileChange;
using miner::LineKind;

namespace {

miner::DeveloperId dev(const std::string& key) { return {key, key, {}}; }

CommitRecord commit(const std::string& hash, const std::string& author, std::vector<FileChange> changes) {
  CommitRecord r;
  r.commit_hash = hash;
  r.author = dev(author);
  r.parent_count = 1;
  r.file_changes = std::move(changes);
  return r;
}

FileChange change(const std::string& path, ChangeKind kind, std::vector<miner::LineChange> lines) {
  FileChange c;
  c.path = path;
  c.change_kind = kind;
  c.line_changes = std::move(lines);
  return c;
}

miner::LineChange add(int line) { return {LineKind::Addition, line, ""}; }
miner::LineChange del(int line) { return {LineKind::Deletion, line, ""}; }

}  // namespace

TEST_CASE("addition inside an existing ifdef block is variable") {
  InMemorySnapshotSource snaps;
  snaps.add("c2^", "a.c", "#ifdef X\nint a;\n#endif\n");
  snaps.add("c2", "a.c", "#ifdef X\nint a;\nint b;\n#endif\n");
  const auto touches = attribute_commit(commit("c2", "bob", {change("a.c", ChangeKind::Modified, {add(3)})}), snaps);
  REQUIRE(touches.size() == 1);
  CHECK(touches[0].variable_lines == 1);
  CHECK(touches[0].mandatory_lines == 0);
}

TEST_CASE("deleting a top-level declaration is classified against the pre-image") {
  InMemorySnapshotSource snaps;
  snaps.add("c2^", "a.c", "int a;\nint b;\n");
  snaps.add("c2", "a.c", "int a;\n");
  const auto touches = attribute_commit(commit("c2", "bob", {change("a.c", ChangeKind::Modified, {del(2)})}), snaps);
  REQUIRE(touches.size() == 1);
  CHECK(touches[0].mandatory_lines == 1);
  CHECK(touches[0].variable_lines == 0);
}

TEST_CASE("wrapping mandatory lines in a new ifdef adds two variable directive lines") {
  InMemorySnapshotSource snaps;
  snaps.add("c2^", "a.c", "int a;\nint b;\nint c;\n");
  snaps.add("c2", "a.c", "int a;\n#ifdef Y\nint b;\nint c;\n#endif\n");
  const auto touches =
      attribute_commit(commit("c2", "bob", {change("a.c", ChangeKind::Modified, {add(2), add(5)})}), snaps);
  REQUIRE(touches.size() == 1);
  CHECK(touches[0].variable_lines == 2);
  CHECK(touches[0].mandatory_lines == 0);
}

TEST_CASE("modifications count once, through the addition") {
  InMemorySnapshotSource snaps;
  snaps.add("c2^", "a.c", "#ifdef X\nint a;\n#endif\nint z;\n");
  snaps.add("c2", "a.c", "#ifdef X\nlong a;\n#endif\nint z;\n");
  const auto touches =
      attribute_commit(commit("c2", "bob", {change("a.c", ChangeKind::Modified, {del(2), add(2)})}), snaps);
  REQUIRE(touches.size() == 1);
  CHECK(touches[0].variable_lines + touches[0].mandatory_lines == 1);
}

TEST_CASE("unpaired deletions") {
  SUBCASE("trailing deletions of a hunk are the unpaired ones") {
    auto c = change("a.c", ChangeKind::Modified, {del(2), del(3), del(4), add(2)});
    CHECK(unpaired_deletions(c) == std::vector<int>{3, 4});
  }
  SUBCASE("more additions than deletions leaves nothing") {
    auto c = change("a.c", ChangeKind::Modified, {del(3), add(3), add(4), add(5)});
    CHECK(unpaired_deletions(c).empty());
  }
  SUBCASE("hunks are matched through the running offset") {
    // pre 1..10; insert two lines after 1, delete 5, replace 8 with 8'.
    auto c = change("a.c", ChangeKind::Modified, {del(5), del(8), add(2), add(3), add(9)});
    CHECK(unpaired_deletions(c) == std::vector<int>{5});
  }
  SUBCASE("pure file deletion") {
    auto c = change("a.c", ChangeKind::Deleted, {del(1), del(2), del(3)});
    CHECK(unpaired_deletions(c) == std::vector<int>{1, 2, 3});
  }
}

TEST_CASE("filtered files and empty changes produce nothing") {
  InMemorySnapshotSource snaps;
  snaps.add("c1", "README.md", "x\n");
  CHECK(attribute_commit(commit("c1", "a", {change("README.md", ChangeKind::Added, {add(1)})}), snaps).empty());
  CHECK(attribute_commit(commit("c1", "a", {change("b.c", ChangeKind::Renamed, {})}), snaps).empty());
}

TEST_CASE("missing snapshot propagates") {
  InMemorySnapshotSource snaps;
  try {
    attribute_commit(commit("c9", "a", {change("a.c", ChangeKind::Modified, {add(1)})}), snaps);
    FAIL("expected SnapshotUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SnapshotUnavailable);
  }
}

TEST_CASE("ledger: creator and later variable editor") {
  std::vector<CommitRecord> history{
      commit("c1", "a", {change("f.c", ChangeKind::Added, {add(1), add(2), add(3)})}),
      commit("c2", "b", {change("f.c", ChangeKind::Modified, {add(3)})})};
  std::vector<TouchRecord> touches{{dev("a"), "f.c", "c1", 0, 3}, {dev("b"), "f.c", "c2", 1, 0}};
  const auto ledger = build_ledger(touches, history);
  const auto& f = ledger.file("f.c");
  CHECK(f.total_commits == 2);
  CHECK(f.changed_by == std::set<std::string>{"a", "b"});
  CHECK(f.variable_contributors == std::set<std::string>{"b"});
  CHECK(f.first_author == std::optional<std::string>("a"));
  const auto& a = ledger.entries().at({"f.c", "a"});
  CHECK(a.first_author);
  CHECK(a.mandatory_touches == 3);
  CHECK(ledger.entries().at({"f.c", "b"}).variable_touches == 1);
  CHECK_FALSE(ledger.entries().at({"f.c", "b"}).first_author);
}

TEST_CASE("ledger: one developer, five commits") {
  std::vector<CommitRecord> history;
  std::vector<TouchRecord> touches;
  history.push_back(commit("c0", "a", {change("f.c", ChangeKind::Added, {add(1)})}));
  touches.push_back({dev("a"), "f.c", "c0", 0, 1});
  for (int i = 1; i < 5; ++i) {
    const auto h = "c" + std::to_string(i);
    history.push_back(commit(h, "a", {change("f.c", ChangeKind::Modified, {add(1)})}));
    touches.push_back({dev("a"), "f.c", h, 0, 1});
  }
  const auto ledger = build_ledger(touches, history);
  CHECK(ledger.file("f.c").total_commits == 5);
  CHECK(ledger.entries().at({"f.c", "a"}).commit_count == 5);
}

TEST_CASE("ledger: renames carry identity, re-added paths resume it") {
  std::vector<CommitRecord> history{
      commit("c1", "a", {change("old.c", ChangeKind::Added, {add(1)})}),
      commit("c2", "b", {[] {
               auto c = change("new.c", ChangeKind::Renamed, {});
               c.old_path = "old.c";
               return c;
             }()}),
      commit("c3", "c", {change("new.c", ChangeKind::Deleted, {del(1)})}),
      commit("c4", "d", {change("new.c", ChangeKind::Added, {add(1)})})};
  std::vector<TouchRecord> touches{{dev("a"), "old.c", "c1", 0, 1},
                                   {dev("c"), "new.c", "c3", 0, 1},
                                   {dev("d"), "new.c", "c4", 1, 0}};
  const auto ledger = build_ledger(touches, history);
  CHECK_FALSE(ledger.has_file("old.c"));
  const auto& f = ledger.file("new.c");
  CHECK(f.total_commits == 4);
  CHECK(f.first_author == std::optional<std::string>("a"));
  CHECK(f.alive);
  CHECK(f.changed_by.size() == 4);

  int commits = 0;
  for (const auto& [key, stats] : ledger.contributors("new.c")) commits += stats.commit_count;
  CHECK(commits == f.total_commits);
  CHECK_THROWS_AS(ledger.file("old.c"), Error);
}

TEST_CASE("ledger: historical cut and inconsistent streams") {
  std::vector<CommitRecord> history{commit("c1", "a", {change("f.c", ChangeKind::Added, {add(1)})}),
                                    commit("c2", "b", {change("f.c", ChangeKind::Modified, {add(1)})})};
  std::vector<TouchRecord> touches{{dev("a"), "f.c", "c1", 0, 1}, {dev("b"), "f.c", "c2", 1, 0}};
  const auto early = build_ledger(touches, history, LedgerOptions{"c1"});
  CHECK(early.file("f.c").total_commits == 1);
  CHECK(early.file("f.c").variable_contributors.empty());

  std::vector<TouchRecord> bad{{dev("z"), "f.c", "nope", 1, 0}};
  try {
    build_ledger(bad, history);
    FAIL("expected InconsistentStreams");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InconsistentStreams);
  }
  std::vector<TouchRecord> wrong_path{{dev("a"), "g.c", "c1", 1, 0}};
  CHECK_THROWS_AS(build_ledger(wrong_path, history), Error);
}

TEST_CASE("git-backed attribution on the alpha fixture") {
  miner::Repository repo(testsupport::scripted_repo("alpha"));
  const auto history = miner::extract_history(repo, "main", miner::SourceFilter{});
  GitSnapshotSource snaps(repo, {});
  std::vector<TouchRecord> touches;
  for (const auto& r : history) {
    auto t = attribute_commit(r, snaps);
    touches.insert(touches.end(), t.begin(), t.end());
  }
  // The dave commit replaces one mandatory line by a five-line ifdef and adds a
  // declaration inside the include guard.
  int var = 0, mand = 0;
  for (const auto& t : touches) {
    if (t.commit_hash != history[4].commit_hash) continue;
    var += t.variable_lines;
    mand += t.mandatory_lines;
  }
  CHECK(var == 5);
  CHECK(mand == 1);
  const std::size_t parsed = snaps.parsed_blobs();
  for (const auto& r : history) attribute_commit(r, snaps);
  CHECK(snaps.parsed_blobs() == parsed);  // memoized by blob id

  const auto ledger = build_ledger(touches, history);
  CHECK(ledger.file("src/core.c").variable_contributors ==
        std::set<std::string>{"alice@example.org", "carol@example.org", "dave@example.org"});
  CHECK(ledger.file("src/extras.c").first_author == std::optional<std::string>("erin@example.org"));
}
