#include "varexp/fixtures.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "varexp/error.hpp"
#include "varexp/process.hpp"
#include "varexp/text.hpp"

namespace varexp::fixtures {

namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kEpoch = 1600000000;

std::string_view kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::Create: return "create";
    case OpKind::Insert: return "insert";
    case OpKind::Delete: return "delete";
    case OpKind::Replace: return "replace";
    case OpKind::DeleteFile: return "delete_file";
    case OpKind::Rename: return "rename";
  }
  return "?";
}

Op create(std::string path, std::vector<std::string> lines) {
  return {OpKind::Create, std::move(path), 0, 0, std::move(lines), {}};
}
Op insert(std::string path, int line, std::vector<std::string> lines) {
  return {OpKind::Insert, std::move(path), line, 0, std::move(lines), {}};
}
Op erase(std::string path, int line, int count) {
  return {OpKind::Delete, std::move(path), line, count, {}, {}};
}
Op replace(std::string path, int line, int count, std::vector<std::string> lines) {
  return {OpKind::Replace, std::move(path), line, count, std::move(lines), {}};
}
Op delete_file(std::string path) { return {OpKind::DeleteFile, std::move(path), 0, 0, {}, {}}; }
Op rename(std::string path, std::string new_path) {
  return {OpKind::Rename, std::move(path), 0, 0, {}, std::move(new_path)};
}

ScriptedCommit commit(const Author& author, std::string message, std::vector<Op> ops,
                      std::string branch = "main") {
  ScriptedCommit c;
  c.author = author;
  c.message = std::move(message);
  c.ops = std::move(ops);
  c.branch = std::move(branch);
  return c;
}

std::vector<std::string>& file_of(Tree& tree, const std::string& path) {
  auto it = tree.find(path);
  if (it == tree.end()) throw std::invalid_argument("no such file in fixture tree: " + path);
  return it->second;
}

void check_range(const std::vector<std::string>& lines, int first, int count, const Op& op) {
  if (first < 1 || count < 0 || static_cast<std::size_t>(first - 1 + count) > lines.size())
    throw std::invalid_argument("edit out of range in " + op.path);
}

ScriptedRepo alpha() {
  const Author alice{"Alice Moreau", "alice@example.org"};
  const Author alice_alias{"alice", "ALICE@example.org "};
  const Author bob{"Bob Chen", "bob@example.org"};
  const Author carol{"Carol Diaz", "carol@example.org"};
  const Author dave{"Dave Okafor", "Dave@Example.org"};
  const Author dave_alias{"Dave O.", "dave@example.org"};
  const Author erin{"Erin Walsh", "erin@example.org"};

  ScriptedRepo r;
  r.name = "alpha";
  auto& c = r.commits;
  c.push_back(commit(alice, "core skeleton",
                     {create("src/core.c", {"#include \"util.h\"", "int counter;", "#ifdef ENABLE_LOG",
                                            "static int log_level;", "#endif", "int core_init(void) {",
                                            "  counter = 0;", "  return 0;", "}"}),
                      create("src/util.h", {"#ifndef UTIL_H", "#define UTIL_H",
                                            "int util_max(int a, int b);", "#endif"}),
                      create("README.md", {"# alpha"})}));
  c.push_back(commit(bob, "count init calls", {insert("src/core.c", 8, {"  counter += 1;"})}));
  c.push_back(commit(carol, "log descriptor", {insert("src/core.c", 5, {"static int log_fd;"})}));
  c.push_back(commit(bob, "network stub",
                     {create("src/net.c", {"#include \"util.h\"", "int net_open(int port) {",
                                           "  return port;", "}"})}));
  c.push_back(commit(dave, "ipv6 switch",
                     {replace("src/net.c", 3, 1,
                              {"#ifdef HAVE_IPV6", "  return port + 6;", "#else", "  return -port;",
                               "#endif"}),
                      insert("src/util.h", 4, {"int util_min(int a, int b);"})}));
  auto side = commit(erin, "extra module",
                     {create("src/extra.c", {"int extra_value(void) {", "  return 42;", "}"})}, "side");
  side.fork_from = "main";
  c.push_back(side);
  c.push_back(commit(carol, "ipv4 fallback", {replace("src/net.c", 6, 1, {"  return port - 1;"})}));
  c.push_back(commit(erin, "unused local", {insert("src/extra.c", 2, {"  int unused = 0;"})}, "side"));
  ScriptedCommit merge = commit(alice_alias, "merge side", {});
  merge.merge_from = "side";
  c.push_back(merge);
  c.push_back(commit(alice, "drop counter updates", {erase("src/core.c", 8, 2)}));
  c.push_back(commit(bob, "rename extra", {rename("src/extra.c", "src/extras.c")}));
  c.push_back(commit(erin, "readme title", {replace("README.md", 1, 1, {"# alpha fixture"})}));
  c.push_back(commit(dave_alias, "widen log level",
                     {replace("src/core.c", 4, 1, {"static long log_level;"})}));
  c.push_back(commit(alice_alias, "include util", {insert("src/extras.c", 1, {"#include \"util.h\""})}));
  return r;
}

ScriptedRepo beta() {
  const Author gus{"Gus Pereira", "gus@example.net"};
  const Author hana{"Hana Sato", "hana@example.net"};
  const Author ivan{"Ivan Petrov", "ivan@example.net"};
  const Author judy{"Judy Kim", "judy@example.net"};

  ScriptedRepo r;
  r.name = "beta";
  auto& c = r.commits;
  c.push_back(commit(gus, "parser",
                     {create("lib/parse.c",
                             {"#include <stdio.h>", "#if defined(USE_FAST) && FAST_LEVEL > 2",
                              "#define PARSE_MODE 2", "#elif defined(USE_SAFE)", "#define PARSE_MODE 1",
                              "#else", "#define PARSE_MODE 0", "#endif", "int parse(const char *s) {",
                              "#ifdef TRACE", "  puts(s);", "#endif", "  return PARSE_MODE;", "}"}),
                      create("lib/parse.h", {"#ifndef PARSE_H", "#define PARSE_H",
                                             "int parse(const char *s);", "#endif"})}));
  c.push_back(commit(hana, "disabled reset",
                     {insert("lib/parse.c", 13, {"#if 0", "  s = 0;", "#endif /* disabled */"})}));
  c.push_back(commit(ivan, "old api", {create("lib/old.c", {"int old_api(void) {", "  return 1;", "}"})}));
  c.push_back(commit(gus, "remove old api", {delete_file("lib/old.c")}));
  c.push_back(commit(hana, "restore old api",
                     {create("lib/old.c", {"int old_api(void) {", "  return 2;", "}"})}));
  c.push_back(commit(gus, "public header",
                     {rename("lib/parse.h", "include/parse.h"),
                      insert("include/parse.h", 4, {"int parse_all(const char **v);"})}));
  c.push_back(commit(judy, "trace to stdout",
                     {replace("lib/parse.c", 11, 1, {"  fputs(s, stdout);", "  fputc('\\n', stdout);"})}));
  c.push_back(commit(ivan, "single parse mode", {replace("lib/parse.c", 2, 7, {"#define PARSE_MODE 3"})}));
  c.push_back(commit(judy, "notes", {create("docs/notes.txt", {"notes"})}));
  c.push_back(commit(hana, "old api debug path",
                     {insert("lib/old.c", 2, {"#ifdef OLD_DEBUG", "  return 3;", "#endif"})}));
  c.push_back(commit(ivan, "old api value", {replace("lib/old.c", 5, 1, {"  return 4;"})}));
  return r;
}

// 20 commits on one file: kim makes 19, leo 1, so leo owns exactly 5%.
ScriptedRepo gamma() {
  const Author kim{"Kim Nguyen", "kim@example.com"};
  const Author leo{"Leo Rossi", "leo@example.com"};

  ScriptedRepo r;
  r.name = "gamma";
  const std::string path = "src/main.c";
  Tree tree;
  auto add = [&](ScriptedCommit c) {
    apply_ops(tree, c.ops);
    r.commits.push_back(std::move(c));
  };
  add(commit(kim, "main", {create(path, {"int base;", "#ifdef FEATURE_X", "int fx;", "#endif", "int tail;"})}));
  auto line_of = [&](const std::string& content) {
    const auto& lines = tree.at(path);
    return static_cast<int>(std::find(lines.begin(), lines.end(), content) - lines.begin()) + 1;
  };
  for (int k = 1; k <= 18; ++k) {
    const auto n = std::to_string(k);
    if (k % 2 == 1) {
      add(commit(kim, "mandatory " + n, {insert(path, 1, {"int m" + n + " = " + n + ";"})}));
    } else {
      add(commit(kim, "variable " + n,
                 {insert(path, line_of("#ifdef FEATURE_X") + 1, {"int x" + n + " = " + n + ";"})}));
    }
  }
  add(commit(leo, "widen fx", {replace(path, line_of("int fx;"), 1, {"long fx;"})}));
  return r;
}

struct Materializer {
  const ScriptedRepo& repo;
  std::string stream;
  std::map<std::string, Tree> trees;
  std::map<std::string, Tree> fork_base;
  std::map<std::string, std::size_t> heads;  // branch -> mark

  static std::string join(const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
  }

  void data(std::string_view content) {
    stream += "data " + std::to_string(content.size()) + "\n";
    stream += content;
    stream += "\n";
  }

  void put_file(const std::string& path, const std::vector<std::string>& lines) {
    stream += "M 100644 inline " + path + "\n";
    data(join(lines));
  }

  void emit(const ScriptedCommit& c, std::size_t index) {
    const std::size_t mark = index + 1;
    const std::int64_t when = kEpoch + static_cast<std::int64_t>(index) * 3600;
    const std::string who = c.author.name + " <" + c.author.email + "> " + std::to_string(when) + " +0000";

    std::optional<std::size_t> from;
    if (heads.count(c.branch)) {
      from = heads[c.branch];
    } else if (c.fork_from) {
      from = heads.at(*c.fork_from);
      trees[c.branch] = trees.at(*c.fork_from);
      fork_base[c.branch] = trees[c.branch];
    }
    Tree& tree = trees[c.branch];

    stream += "commit refs/heads/" + c.branch + "\n";
    stream += "mark :" + std::to_string(mark) + "\n";
    stream += "author " + who + "\n";
    stream += "committer " + who + "\n";
    data(c.message);
    if (from) stream += "from :" + std::to_string(*from) + "\n";

    if (c.merge_from) {
      stream += "merge :" + std::to_string(heads.at(*c.merge_from)) + "\n";
      const Tree& other = trees.at(*c.merge_from);
      const Tree& base = fork_base.at(*c.merge_from);
      std::set<std::string> paths;
      for (const auto& [p, _] : other) paths.insert(p);
      for (const auto& [p, _] : base) paths.insert(p);
      for (const auto& p : paths) {
        auto o = other.find(p);
        auto b = base.find(p);
        const bool changed = (o == other.end()) != (b == base.end()) ||
                             (o != other.end() && o->second != b->second);
        if (!changed) continue;
        if (o == other.end()) tree.erase(p);
        else tree[p] = o->second;
      }
      stream += "deleteall\n";
      for (const auto& [p, lines] : tree) put_file(p, lines);
    } else {
      const Tree before = tree;
      apply_ops(tree, c.ops);
      for (const auto& [p, _] : before)
        if (!tree.count(p)) stream += "D " + p + "\n";
      for (const auto& [p, lines] : tree) {
        auto b = before.find(p);
        if (b == before.end() || b->second != lines) put_file(p, lines);
      }
    }
    stream += "\n";
    heads[c.branch] = mark;
  }
};

void git_or_throw(const std::vector<std::string>& argv, const fs::path& cwd, std::string stdin_data = {}) {
  process::RunOptions options;
  options.cwd = cwd;
  options.env = {{"LC_ALL", "C"}, {"GIT_CONFIG_NOSYSTEM", "1"}, {"GIT_TERMINAL_PROMPT", "0"}};
  options.stdin_data = std::move(stdin_data);
  const auto result = process::run(argv, options);
  if (!result.ok()) {
    throw Error(ErrorCode::GitFailure, argv[1] + " failed: " + std::string(text::trim(result.err)));
  }
}

}  // namespace

void apply_ops(Tree& tree, std::span<const Op> ops) {
  for (const auto& op : ops) {
    switch (op.kind) {
      case OpKind::Create:
        if (tree.count(op.path)) throw std::invalid_argument("file already exists: " + op.path);
        tree[op.path] = op.lines;
        break;
      case OpKind::Insert: {
        auto& lines = file_of(tree, op.path);
        if (op.line < 1 || static_cast<std::size_t>(op.line) > lines.size() + 1)
          throw std::invalid_argument("insert out of range in " + op.path);
        lines.insert(lines.begin() + (op.line - 1), op.lines.begin(), op.lines.end());
        break;
      }
      case OpKind::Delete: {
        auto& lines = file_of(tree, op.path);
        check_range(lines, op.line, op.count, op);
        lines.erase(lines.begin() + (op.line - 1), lines.begin() + (op.line - 1 + op.count));
        break;
      }
      case OpKind::Replace: {
        auto& lines = file_of(tree, op.path);
        check_range(lines, op.line, op.count, op);
        auto at = lines.erase(lines.begin() + (op.line - 1), lines.begin() + (op.line - 1 + op.count));
        lines.insert(at, op.lines.begin(), op.lines.end());
        break;
      }
      case OpKind::DeleteFile:
        file_of(tree, op.path);
        tree.erase(op.path);
        break;
      case OpKind::Rename: {
        auto lines = file_of(tree, op.path);
        if (tree.count(op.new_path)) throw std::invalid_argument("rename target exists: " + op.new_path);
        tree.erase(op.path);
        tree[op.new_path] = std::move(lines);
        break;
      }
    }
  }
}

std::vector<ScriptedRepo> scripted_corpus() { return {alpha(), beta(), gamma()}; }

ScriptedRepo synthetic_repo(const std::string& name, int commits, std::uint32_t seed) {
  constexpr int kFiles = 40;
  constexpr int kDevelopers = 40;
  // Raw engine output only: distributions are not portable across standard libraries.
  std::mt19937 rng(seed);
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint32_t>(n)); };

  std::vector<Author> devs;
  for (int i = 0; i < kDevelopers; ++i)
    devs.push_back({"Dev " + std::to_string(i), "dev" + std::to_string(i) + "@synthetic.test"});

  ScriptedRepo r;
  r.name = name;
  Tree tree;
  std::vector<Op> initial;
  for (int f = 0; f < kFiles; ++f) {
    const auto id = std::to_string(f);
    initial.push_back(create("src/mod" + id + ".c",
                             {"#include \"mod" + id + ".h\"", "int f" + id + "_base;",
                              "#ifdef FEATURE_" + std::to_string(f % 7), "int f" + id + "_opt;", "#endif",
                              "int f" + id + "_tail;"}));
    initial.push_back(create("include/mod" + id + ".h",
                             {"#ifndef MOD" + id + "_H", "#define MOD" + id + "_H",
                              "int f" + id + "_api(void);", "#endif"}));
  }
  apply_ops(tree, initial);
  r.commits.push_back(commit(devs[0], "initial import", std::move(initial)));

  for (int k = 1; k < commits; ++k) {
    const int dev = std::min(pick(kDevelopers), pick(kDevelopers));
    const int edits = 1 + (pick(4) == 0 ? 1 : 0);
    std::vector<Op> ops;
    std::set<int> used;
    for (int e = 0; e < edits; ++e) {
      int f = pick(kFiles);
      if (!used.insert(f).second) continue;
      const std::string path = "src/mod" + std::to_string(f) + ".c";
      const auto& lines = tree.at(path);
      const std::string fresh = "int s" + std::to_string(k) + "_" + std::to_string(e) + " = " + std::to_string(k) + ";";
      const int region = static_cast<int>(
          std::find_if(lines.begin(), lines.end(), [](const std::string& l) { return l.rfind("#ifdef", 0) == 0; }) -
          lines.begin()) + 1;
      Op op;
      switch (pick(4)) {
        case 0: op = insert(path, region + 1, {fresh}); break;
        case 1: op = insert(path, 2, {fresh}); break;
        case 2: {
          std::vector<int> body;
          for (std::size_t i = 0; i < lines.size(); ++i)
            if (lines[i].rfind("int s", 0) == 0) body.push_back(static_cast<int>(i) + 1);
          if (body.empty()) op = insert(path, 2, {fresh});
          else op = replace(path, body[static_cast<std::size_t>(pick(static_cast<int>(body.size())))], 1, {fresh});
          break;
        }
        default:
          op = insert(path, static_cast<int>(lines.size()),
                      {"#ifdef OPT_" + std::to_string(k), fresh, "#endif /* OPT_" + std::to_string(k) + " */"});
          break;
      }
      std::vector<Op> one{op};
      apply_ops(tree, one);
      ops.push_back(std::move(op));
    }
    r.commits.push_back(commit(devs[static_cast<std::size_t>(dev)], "change " + std::to_string(k), std::move(ops)));
  }
  return r;
}

void materialize(const ScriptedRepo& repo, const fs::path& dir) {
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  Materializer m{repo, {}, {}, {}, {}};
  for (std::size_t i = 0; i < repo.commits.size(); ++i) m.emit(repo.commits[i], i);
  git_or_throw({"git", "init", "-q", "--initial-branch=main", "."}, dir);
  git_or_throw({"git", "fast-import", "--quiet", "--done"}, dir, m.stream + "done\n");
  git_or_throw({"git", "symbolic-ref", "HEAD", "refs/heads/main"}, dir);
}

std::string scripts_json(std::span<const ScriptedRepo> repos) {
  nlohmann::ordered_json doc;
  doc["repos"] = nlohmann::ordered_json::array();
  for (const auto& repo : repos) {
    nlohmann::ordered_json jr;
    jr["name"] = repo.name;
    jr["commits"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < repo.commits.size(); ++i) {
      const auto& c = repo.commits[i];
      nlohmann::ordered_json jc;
      jc["branch"] = c.branch;
      jc["author"] = {{"name", c.author.name}, {"email", c.author.email}};
      jc["timestamp"] = kEpoch + static_cast<std::int64_t>(i) * 3600;
      jc["merge_from"] = c.merge_from ? nlohmann::ordered_json(*c.merge_from) : nlohmann::ordered_json(nullptr);
      jc["fork_from"] = c.fork_from ? nlohmann::ordered_json(*c.fork_from) : nlohmann::ordered_json(nullptr);
      jc["ops"] = nlohmann::ordered_json::array();
      for (const auto& op : c.ops) {
        nlohmann::ordered_json jo;
        jo["kind"] = kind_name(op.kind);
        jo["path"] = op.path;
        jo["line"] = op.line;
        jo["count"] = op.count;
        jo["lines"] = op.lines;
        jo["new_path"] = op.new_path;
        jc["ops"].push_back(std::move(jo));
      }
      jr["commits"].push_back(std::move(jc));
    }
    doc["repos"].push_back(std::move(jr));
  }
  return doc.dump(2) + "\n";
}

GeneratedCorpus generate(const fs::path& out, std::optional<int> large_commits) {
  fs::create_directories(out / "repos");
  auto repos = scripted_corpus();
  GeneratedCorpus corpus;
  nlohmann::ordered_json config;
  config["projects"] = nlohmann::ordered_json::array();
  auto add = [&](const ScriptedRepo& repo) {
    materialize(repo, out / "repos" / repo.name);
    corpus.names.push_back(repo.name);
    config["projects"].push_back({{"name", repo.name}, {"repo", "repos/" + repo.name}, {"branch", "main"}});
  };
  for (const auto& repo : repos) add(repo);
  if (large_commits) add(synthetic_repo("large", *large_commits, 20240501u));
  text::write_file_atomic(out / "fixtures.json", scripts_json(repos));
  corpus.config = out / "config.json";
  text::write_file_atomic(corpus.config, config.dump(2) + "\n");
  return corpus;
}

}  // namespace varexp::fixtures
