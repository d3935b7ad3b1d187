#include "varexp/miner.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <regex>

#include "varexp/error.hpp"
#include "varexp/text.hpp"

namespace varexp::miner {

namespace {

// Inverse of git's C-style path quoting.
std::string unquote_path(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::string(s);
  s = s.substr(1, s.size() - 2);
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 >= s.size()) {
      out += s[i];
      continue;
    }
    const char c = s[++i];
    switch (c) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case 'a': out += '\a'; break;
      case 'b': out += '\b'; break;
      case 'f': out += '\f'; break;
      case 'v': out += '\v'; break;
      case '\\': out += '\\'; break;
      case '"': out += '"'; break;
      default:
        if (c >= '0' && c <= '7') {
          int value = 0;
          std::size_t k = 0;
          for (; k < 3 && i + k < s.size() && s[i + k] >= '0' && s[i + k] <= '7'; ++k) {
            value = value * 8 + (s[i + k] - '0');
          }
          out += static_cast<char>(value);
          i += k - 1;
        } else {
          out += c;
        }
    }
  }
  return out;
}

// "--- a/path" style header value; nullopt for /dev/null.
std::optional<std::string> header_path(std::string_view value, std::string_view prefix) {
  if (!value.empty() && value.back() == '\t') value.remove_suffix(1);
  if (value == "/dev/null") return std::nullopt;
  std::string path = unquote_path(value);
  if (path.compare(0, prefix.size(), prefix) == 0) path.erase(0, prefix.size());
  return path;
}

std::pair<std::string, std::string> split_diff_git_line(std::string_view rest) {
  if (!rest.empty() && rest.front() == '"') {
    std::size_t i = 1;
    while (i < rest.size() && !(rest[i] == '"' && rest[i - 1] != '\\')) ++i;
    const auto a = header_path(rest.substr(0, i + 1), "a/");
    const auto b = header_path(text::trim(rest.substr(i + 1)), "b/");
    return {a.value_or(""), b.value_or("")};
  }
  if (rest.size() >= 5 && (rest.size() - 5) % 2 == 0) {
    const std::size_t n = (rest.size() - 5) / 2;
    if (rest.substr(0, 2) == "a/" && rest.substr(2 + n, 3) == " b/" &&
        rest.substr(2, n) == rest.substr(5 + n)) {
      return {std::string(rest.substr(2, n)), std::string(rest.substr(5 + n))};
    }
  }
  const auto split = rest.find(" b/");
  if (split == std::string_view::npos) return {std::string(rest), std::string(rest)};
  return {header_path(rest.substr(0, split), "a/").value_or(""),
          header_path(rest.substr(split + 1), "b/").value_or("")};
}

int parse_int(std::string_view s) {
  int value = 0;
  std::from_chars(s.data(), s.data() + s.size(), value);
  return value;
}

// "@@ -a[,b] +c[,d] @@"
bool parse_hunk_header(std::string_view line, int& old_start, int& old_count, int& new_start,
                       int& new_count) {
  static const std::regex kHunk(R"(^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(line.begin(), line.end(), m, kHunk)) return false;
  const auto group = [&](int i) { return std::string_view(&*m[i].first, m[i].length()); };
  old_start = parse_int(group(1));
  old_count = m[2].matched ? parse_int(group(2)) : 1;
  new_start = parse_int(group(3));
  new_count = m[4].matched ? parse_int(group(4)) : 1;
  return true;
}

std::string first_hex40(std::string_view s) {
  static const std::regex kHash("[0-9a-f]{40}");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(s.begin(), s.end(), m, kHash)) return m.str();
  return "unknown";
}

constexpr char kCommitMarker = '\x01';
constexpr char kFieldSeparator = '\x02';

class LogParser {
 public:
  LogParser(const SourceFilter& filter, const CommitSink& sink, ExtractionStats& stats)
      : filter_(filter), sink_(sink), stats_(stats) {}

  void feed(const std::string& line) {
    if (minus_left_ > 0 || plus_left_ > 0) {
      if (consume_hunk_line(line)) return;
      stats_.warnings.push_back("truncated hunk in " + current_commit());
      minus_left_ = plus_left_ = 0;
    }
    if (!line.empty() && line.front() == kCommitMarker) {
      flush_commit();
      start_commit(std::string_view(line).substr(1));
      return;
    }
    if (line.rfind("diff --git ", 0) == 0) {
      flush_file();
      file_.emplace();
      std::tie(file_->diff_a, file_->diff_b) =
          split_diff_git_line(std::string_view(line).substr(11));
      return;
    }
    if (!file_) return;
    const std::string_view v(line);
    if (v.rfind("@@ ", 0) == 0) {
      int old_start = 0, old_count = 0, new_start = 0, new_count = 0;
      if (!parse_hunk_header(v, old_start, old_count, new_start, new_count)) {
        stats_.warnings.push_back("unparseable hunk header in " + current_commit());
        return;
      }
      next_old_ = old_start;
      next_new_ = new_start;
      minus_left_ = old_count;
      plus_left_ = new_count;
    } else if (v.rfind("new file mode", 0) == 0) {
      file_->is_new = true;
    } else if (v.rfind("deleted file mode", 0) == 0) {
      file_->is_deleted = true;
    } else if (v.rfind("rename from ", 0) == 0) {
      file_->rename_from = unquote_path(v.substr(12));
    } else if (v.rfind("rename to ", 0) == 0) {
      file_->rename_to = unquote_path(v.substr(10));
    } else if (v.rfind("--- ", 0) == 0) {
      file_->minus_path = header_path(v.substr(4), "a/");
    } else if (v.rfind("+++ ", 0) == 0) {
      file_->plus_path = header_path(v.substr(4), "b/");
    } else if (v.rfind("Binary files ", 0) == 0) {
      file_->binary = true;
    }
  }

  void finish() { flush_commit(); }

 private:
  struct PendingFile {
    std::string diff_a, diff_b;
    std::optional<std::string> minus_path, plus_path, rename_from, rename_to;
    bool is_new = false;
    bool is_deleted = false;
    bool binary = false;
    std::vector<LineChange> lines;
  };

  bool consume_hunk_line(const std::string& line) {
    if (line.empty()) return false;
    if (line.front() == '\\') return true;  // "\ No newline at end of file"
    if (line.front() == '-' && minus_left_ > 0) {
      file_->lines.push_back(
          {LineKind::Deletion, next_old_++, text::sanitize_utf8(std::string_view(line).substr(1))});
      --minus_left_;
      return true;
    }
    if (line.front() == '+' && plus_left_ > 0) {
      file_->lines.push_back(
          {LineKind::Addition, next_new_++, text::sanitize_utf8(std::string_view(line).substr(1))});
      --plus_left_;
      return true;
    }
    return false;
  }

  std::string current_commit() const { return commit_ ? commit_->commit_hash : "?"; }

  void start_commit(std::string_view header) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const auto sep = header.find(kFieldSeparator, start);
      fields.push_back(header.substr(start, sep == std::string_view::npos ? sep : sep - start));
      if (sep == std::string_view::npos) break;
      start = sep + 1;
    }
    if (fields.size() < 5) throw Error(ErrorCode::GitFailure, "malformed log header");
    commit_.emplace();
    commit_->commit_hash = std::string(fields[0]);
    const auto parents = text::trim(fields[1]);
    commit_->parent_count =
        parents.empty() ? 0 : static_cast<int>(std::count(parents.begin(), parents.end(), ' ') + 1);
    std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), commit_->timestamp);
    try {
      commit_->author = normalize_identity(fields[3], fields[4]);
    } catch (const Error&) {
      stats_.warnings.push_back("commit " + commit_->commit_hash + " has no author identity");
      commit_->author = DeveloperId{"unknown", "unknown", {}};
    }
  }

  void flush_file() {
    if (!file_ || !commit_) {
      file_.reset();
      return;
    }
    PendingFile f = std::move(*file_);
    file_.reset();
    FileChange change;
    if (f.rename_from && f.rename_to) {
      change.change_kind = ChangeKind::Renamed;
      change.old_path = *f.rename_from;
      change.path = *f.rename_to;
    } else if (f.is_new) {
      change.change_kind = ChangeKind::Added;
      change.path = f.plus_path.value_or(f.diff_b);
    } else if (f.is_deleted) {
      change.change_kind = ChangeKind::Deleted;
      change.path = f.minus_path.value_or(f.diff_a);
    } else {
      change.change_kind = ChangeKind::Modified;
      change.path = f.plus_path.value_or(f.diff_b);
    }
    if (!filter_.accepts(change.path)) return;
    if (f.binary) {
      const std::string msg = "skipping binary file " + change.path + " in " + commit_->commit_hash;
      spdlog::warn("{}", msg);
      stats_.warnings.push_back(msg);
      return;
    }
    // Mode-only changes carry no line changes.
    if (change.change_kind == ChangeKind::Modified && f.lines.empty()) return;
    // Canonical order: all deletions, then all additions, each ascending.
    std::stable_partition(f.lines.begin(), f.lines.end(),
                          [](const LineChange& c) { return c.kind == LineKind::Deletion; });
    change.line_changes = std::move(f.lines);
    commit_->file_changes.push_back(std::move(change));
  }

  void flush_commit() {
    flush_file();
    if (!commit_) return;
    ++stats_.commits;
    sink_(std::move(*commit_));
    commit_.reset();
  }

  const SourceFilter& filter_;
  const CommitSink& sink_;
  ExtractionStats& stats_;
  std::optional<CommitRecord> commit_;
  std::optional<PendingFile> file_;
  int minus_left_ = 0;
  int plus_left_ = 0;
  int next_old_ = 0;
  int next_new_ = 0;
};

}  // namespace

std::string_view to_string(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::Added: return "added";
    case ChangeKind::Modified: return "modified";
    case ChangeKind::Deleted: return "deleted";
    case ChangeKind::Renamed: return "renamed";
  }
  return "modified";
}

std::optional<ChangeKind> parse_change_kind(std::string_view s) {
  if (s == "added") return ChangeKind::Added;
  if (s == "modified") return ChangeKind::Modified;
  if (s == "deleted") return ChangeKind::Deleted;
  if (s == "renamed") return ChangeKind::Renamed;
  return std::nullopt;
}

const std::vector<std::string>& SourceFilter::default_extensions() {
  static const std::vector<std::string> kDefault = {".c",  ".h",  ".cpp", ".cc", ".cxx",
                                                    ".hpp", ".hh", ".hxx", ".inl"};
  return kDefault;
}

SourceFilter::SourceFilter() : extensions_(default_extensions()) {}

SourceFilter::SourceFilter(std::vector<std::string> extensions) : extensions_(std::move(extensions)) {
  for (auto& ext : extensions_) {
    ext = text::to_lower(ext);
    if (!ext.empty() && ext.front() != '.') ext.insert(ext.begin(), '.');
  }
}

bool SourceFilter::accepts(std::string_view path) const {
  const auto slash = path.find_last_of('/');
  const auto name = slash == std::string_view::npos ? path : path.substr(slash + 1);
  return std::any_of(extensions_.begin(), extensions_.end(), [&](const std::string& ext) {
    return name.size() > ext.size() && text::ends_with_icase(name, ext);
  });
}

bool is_source_file(std::string_view path, const SourceFilter& filter) {
  return filter.accepts(path);
}

DeveloperId normalize_identity(std::string_view raw_name, std::string_view raw_email) {
  const auto name = text::trim(raw_name);
  const auto email = text::trim(raw_email);
  if (name.empty() && email.empty()) {
    throw Error(ErrorCode::EmptyIdentity, "both author name and email are blank");
  }
  DeveloperId id;
  if (!email.empty()) {
    id.key = text::to_lower(email);
    id.emails.insert(id.key);
  } else {
    id.key = text::to_lower(name);
  }
  id.display_name = name.empty() ? std::string(email) : std::string(name);
  return id;
}

Repository::Repository(std::filesystem::path path) {
  std::error_code ec;
  if (!std::filesystem::is_directory(path, ec)) {
    throw Error(ErrorCode::RepositoryNotFound, path.string() + " is not a directory");
  }
  path_ = std::filesystem::absolute(path, ec).lexically_normal();
  const auto result = git({"rev-parse", "--git-dir"});
  if (!result.ok()) {
    throw Error(ErrorCode::RepositoryNotFound, path_.string() + " is not a git repository");
  }
}

std::vector<std::string> Repository::git_argv(std::vector<std::string> args) const {
  std::vector<std::string> argv = {"git",
                                   "-c", "safe.directory=*",
                                   "-c", "core.quotePath=false",
                                   "-c", "color.ui=never",
                                   "-c", "diff.noprefix=false",
                                   "-c", "diff.mnemonicPrefix=false",
                                   "-c", "diff.relative=false",
                                   "-c", "log.showSignature=false"};
  argv.insert(argv.end(), std::make_move_iterator(args.begin()),
              std::make_move_iterator(args.end()));
  return argv;
}

process::RunOptions Repository::run_options() const {
  process::RunOptions options;
  options.cwd = path_;
  options.env = {{"LC_ALL", "C"},
                 {"GIT_PAGER", "cat"},
                 {"GIT_TERMINAL_PROMPT", "0"},
                 {"GIT_CONFIG_NOSYSTEM", "1"}};
  return options;
}

process::RunResult Repository::git(std::vector<std::string> args) const {
  return process::run(git_argv(std::move(args)), run_options());
}

std::string Repository::resolve_commit(std::string_view rev) const {
  const auto result = git({"rev-parse", "--verify", "--quiet", std::string(rev) + "^{commit}"});
  if (!result.ok()) throw Error(ErrorCode::BranchNotFound, std::string(rev));
  return std::string(text::trim(result.out));
}

std::string Repository::default_branch() const {
  const auto result = git({"symbolic-ref", "--quiet", "--short", "HEAD"});
  if (!result.ok()) return "HEAD";
  return std::string(text::trim(result.out));
}

std::vector<std::string> Repository::list_files(std::string_view commit) const {
  const auto result = git({"ls-tree", "-r", "-z", "--full-tree", std::string(commit)});
  if (!result.ok()) throw Error(ErrorCode::CommitNotFound, std::string(commit));
  std::vector<std::string> files;
  std::size_t start = 0;
  while (start < result.out.size()) {
    auto end = result.out.find('\0', start);
    if (end == std::string::npos) end = result.out.size();
    const std::string_view entry(result.out.data() + start, end - start);
    const auto tab = entry.find('\t');
    if (tab != std::string_view::npos && entry.find(" blob ") != std::string_view::npos &&
        entry.find(" blob ") < tab) {
      files.emplace_back(entry.substr(tab + 1));
    }
    start = end + 1;
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::size_t Repository::count_merges(std::string_view rev) const {
  const auto result = git({"rev-list", "--merges", "--count", std::string(rev)});
  if (!result.ok()) return 0;
  std::size_t n = 0;
  const auto s = text::trim(result.out);
  std::from_chars(s.data(), s.data() + s.size(), n);
  return n;
}

ExtractionStats extract_history(const Repository& repo, std::string_view branch,
                                const SourceFilter& filter, const CommitSink& sink) {
  const std::string head = repo.resolve_commit(branch);
  ExtractionStats stats;
  LogParser parser(filter, sink, stats);
  process::LineReader reader(
      repo.git_argv({"log", "--reverse", "--date-order", "--no-merges", "--root", "-p",
                     "--unified=0", "--full-index", "--no-color", "--no-ext-diff",
                     "--no-textconv", "--find-renames=50%", "--src-prefix=a/", "--dst-prefix=b/",
                     "--format=%x01%H%x02%P%x02%at%x02%an%x02%ae", head, "--"}),
      repo.run_options());
  while (auto line = reader.next_line()) parser.feed(*line);
  const int exit_code = reader.finish();
  if (exit_code != 0) {
    const auto& err = reader.stderr_text();
    if (err.find("corrupt") != std::string::npos || err.find("bad object") != std::string::npos ||
        err.find("unable to read") != std::string::npos ||
        err.find("invalid object") != std::string::npos) {
      throw Error(ErrorCode::CorruptObject, first_hex40(err) + ": " + std::string(text::trim(err)));
    }
    throw Error(ErrorCode::GitFailure, "git log failed: " + std::string(text::trim(err)));
  }
  parser.finish();
  stats.merge_commits = repo.count_merges(head);
  return stats;
}

std::vector<CommitRecord> extract_history(const Repository& repo, std::string_view branch,
                                          const SourceFilter& filter, ExtractionStats* stats) {
  std::vector<CommitRecord> records;
  auto s = extract_history(repo, branch, filter,
                           [&](CommitRecord&& record) { records.push_back(std::move(record)); });
  if (stats) *stats = std::move(s);
  return records;
}

BlobReader::BlobReader(const Repository& repo)
    : process_(repo.git_argv({"cat-file", "--batch"}), repo.run_options()) {}

BlobReader::~BlobReader() = default;

namespace {

struct BatchEntry {
  std::string object_id;
  std::string type;
  std::string content;
};

std::optional<BatchEntry> batch_query(process::BatchProcess& process, std::string_view spec) {
  process.write(std::string(spec) + "\n");
  const std::string header = process.read_line();
  // "<oid> <type> <size>" or "<spec> missing" / "<spec> ambiguous"
  const auto last_space = header.rfind(' ');
  if (last_space == std::string::npos) return std::nullopt;
  const auto tail = std::string_view(header).substr(last_space + 1);
  if (tail == "missing" || tail == "ambiguous") return std::nullopt;
  const auto first_space = header.find(' ');
  std::size_t size = 0;
  std::from_chars(tail.data(), tail.data() + tail.size(), size);
  BatchEntry entry;
  entry.object_id = header.substr(0, first_space);
  entry.type = header.substr(first_space + 1, last_space - first_space - 1);
  entry.content = process.read_exact(size);
  process.read_exact(1);
  return entry;
}

}  // namespace

std::optional<BlobReader::Blob> BlobReader::lookup(std::string_view spec) {
  auto entry = batch_query(process_, spec);
  if (!entry || entry->type != "blob") return std::nullopt;
  return Blob{std::move(entry->object_id), text::sanitize_utf8(entry->content)};
}

bool BlobReader::commit_exists(std::string_view commit) {
  auto entry = batch_query(process_, std::string(commit) + "^{commit}");
  return entry && entry->type == "commit";
}

std::string snapshot_file(BlobReader& reader, std::string_view commit, std::string_view path) {
  if (auto blob = reader.lookup(std::string(commit) + ":" + std::string(path))) {
    return std::move(blob->text);
  }
  if (!reader.commit_exists(commit)) throw Error(ErrorCode::CommitNotFound, std::string(commit));
  throw Error(ErrorCode::PathAbsentAtCommit, std::string(path) + " @ " + std::string(commit));
}

std::string snapshot_file(const Repository& repo, std::string_view commit, std::string_view path) {
  BlobReader reader(repo);
  return snapshot_file(reader, commit, path);
}

}  // namespace varexp::miner
