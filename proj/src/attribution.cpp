#include "varexp/attribution.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>

#include "varexp/error.hpp"

namespace varexp::attribution {

using variability::VariabilityMap;

GitSnapshotSource::GitSnapshotSource(const miner::Repository& repo, variability::GuardPolicy policy)
    : reader_(repo), policy_(policy) {}

std::shared_ptr<const VariabilityMap> GitSnapshotSource::map_at(std::string_view rev,
                                                               std::string_view path) {
  auto blob = reader_.lookup(std::string(rev) + ":" + std::string(path));
  if (!blob) {
    throw Error(ErrorCode::SnapshotUnavailable, std::string(path) + " @ " + std::string(rev));
  }
  auto it = memo_.find(blob->object_id);
  if (it != memo_.end()) return it->second;
  auto map = std::make_shared<const VariabilityMap>(
      variability::build_variability_map(blob->text, policy_, std::string(path)));
  memo_.emplace(std::move(blob->object_id), map);
  return map;
}

void InMemorySnapshotSource::add(std::string rev, std::string path, std::string text) {
  auto map = std::make_shared<const VariabilityMap>(
      variability::build_variability_map(text, policy_, path));
  maps_[{std::move(rev), std::move(path)}] = std::move(map);
}

std::shared_ptr<const VariabilityMap> InMemorySnapshotSource::map_at(std::string_view rev,
                                                                    std::string_view path) {
  auto it = maps_.find({std::string(rev), std::string(path)});
  if (it == maps_.end()) {
    throw Error(ErrorCode::SnapshotUnavailable, std::string(path) + " @ " + std::string(rev));
  }
  return it->second;
}

namespace {

struct Run {
  int start;
  int length;
};

std::vector<Run> runs_of(std::vector<int> lines) {
  std::sort(lines.begin(), lines.end());
  std::vector<Run> runs;
  for (int line : lines) {
    if (!runs.empty() && runs.back().start + runs.back().length == line) {
      ++runs.back().length;
    } else {
      runs.push_back({line, 1});
    }
  }
  return runs;
}

bool classify(const VariabilityMap& map, int line, const std::string& path,
              const std::string& rev) {
  if (line < 1 || line > map.total_loc()) {
    throw Error(ErrorCode::SnapshotUnavailable,
                "line " + std::to_string(line) + " outside " + path + " @ " + rev);
  }
  return map.is_variable(line);
}

}  // namespace

std::vector<int> unpaired_deletions(const miner::FileChange& change) {
  std::vector<int> deleted, added;
  for (const auto& lc : change.line_changes) {
    (lc.kind == miner::LineKind::Deletion ? deleted : added).push_back(lc.line_number);
  }
  const auto del_runs = runs_of(std::move(deleted));
  const auto add_runs = runs_of(std::move(added));
  // Unchanged pre-image line L sits at post-image line L + offset.
  long offset = 0;
  std::size_t j = 0;
  std::vector<int> unpaired;
  for (const auto& del : del_runs) {
    while (j < add_runs.size() && add_runs[j].start < del.start + offset) {
      offset += add_runs[j].length;
      ++j;
    }
    int paired = 0;
    if (j < add_runs.size() && add_runs[j].start == del.start + offset) {
      paired = std::min(del.length, add_runs[j].length);
      offset += add_runs[j].length;
      ++j;
    }
    offset -= del.length;
    for (int k = paired; k < del.length; ++k) unpaired.push_back(del.start + k);
  }
  return unpaired;
}

std::vector<TouchRecord> attribute_commit(const miner::CommitRecord& record,
                                          SnapshotSource& snapshots,
                                          const miner::SourceFilter& filter) {
  std::vector<TouchRecord> touches;
  const std::string post_rev = record.commit_hash;
  const std::string pre_rev = record.commit_hash + "^";
  for (const auto& change : record.file_changes) {
    if (change.line_changes.empty()) continue;
    const bool deleted = change.change_kind == miner::ChangeKind::Deleted;
    if (!filter.accepts(deleted ? change.pre_image_path() : change.path)) continue;

    TouchRecord touch{record.author, change.path, record.commit_hash, 0, 0};
    const auto count = [&](bool variable) { ++(variable ? touch.variable_lines : touch.mandatory_lines); };

    const bool has_additions =
        std::any_of(change.line_changes.begin(), change.line_changes.end(),
                    [](const miner::LineChange& lc) { return lc.kind == miner::LineKind::Addition; });
    if (has_additions) {
      const auto post = snapshots.map_at(post_rev, change.path);
      for (const auto& lc : change.line_changes) {
        if (lc.kind == miner::LineKind::Addition) {
          count(classify(*post, lc.line_number, change.path, post_rev));
        }
      }
    }
    const auto removed = unpaired_deletions(change);
    if (!removed.empty()) {
      const auto pre = snapshots.map_at(pre_rev, change.pre_image_path());
      for (int line : removed) count(classify(*pre, line, change.pre_image_path(), pre_rev));
    }
    if (touch.variable_lines + touch.mandatory_lines > 0) touches.push_back(std::move(touch));
  }
  return touches;
}

bool ContributionLedger::has_file(std::string_view path) const {
  return files_.find(std::string(path)) != files_.end();
}

const FileStats& ContributionLedger::file(std::string_view path) const {
  auto it = files_.find(std::string(path));
  if (it == files_.end()) throw Error(ErrorCode::UnknownPath, std::string(path));
  return it->second;
}

std::vector<std::pair<std::string, DevFileStats>> ContributionLedger::contributors(
    std::string_view path) const {
  const std::string p(path);
  if (!has_file(p)) throw Error(ErrorCode::UnknownPath, p);
  std::vector<std::pair<std::string, DevFileStats>> out;
  for (auto it = entries_.lower_bound({p, std::string()}); it != entries_.end() && it->first.first == p;
       ++it) {
    out.emplace_back(it->first.second, it->second);
  }
  return out;
}

std::string ContributionLedger::entries_ndjson() const {
  std::string out;
  for (const auto& [key, stats] : entries_) {
    nlohmann::ordered_json j;
    j["developer_key"] = key.second;
    j["path"] = key.first;
    j["variable_touches"] = stats.variable_touches;
    j["mandatory_touches"] = stats.mandatory_touches;
    j["commit_count"] = stats.commit_count;
    j["first_author"] = stats.first_author;
    out += j.dump() + "\n";
  }
  return out;
}

std::string ContributionLedger::files_ndjson() const {
  std::string out;
  for (const auto& [path, stats] : files_) {
    nlohmann::ordered_json j;
    j["path"] = path;
    j["total_commits"] = stats.total_commits;
    j["changed_by"] = stats.changed_by;
    j["variable_contributors"] = stats.variable_contributors;
    j["first_author"] = stats.first_author ? nlohmann::ordered_json(*stats.first_author)
                                           : nlohmann::ordered_json(nullptr);
    j["alive"] = stats.alive;
    out += j.dump() + "\n";
  }
  return out;
}

namespace {

// File identities across renames, deletions and re-additions.
class IdentityTracker {
 public:
  int resolve(const miner::FileChange& change, std::size_t position, const std::string& author) {
    int id = -1;
    switch (change.change_kind) {
      case miner::ChangeKind::Added: {
        id = live_or_new(change.path);
        alive_[id] = true;
        note_creation(id, position, author);
        break;
      }
      case miner::ChangeKind::Modified:
        id = live_or_new(change.path);
        alive_[id] = true;
        break;
      case miner::ChangeKind::Deleted:
        id = live_or_new(change.path);
        alive_[id] = false;
        break;
      case miner::ChangeKind::Renamed: {
        const auto& old_path = change.pre_image_path();
        auto it = live_.find(old_path);
        if (it != live_.end()) {
          id = find(it->second);
          live_.erase(it);
        } else {
          id = fresh(change.path);
        }
        auto target = live_.find(change.path);
        if (target != live_.end() && find(target->second) != id) id = unite(id, target->second);
        live_[change.path] = id;
        path_[id] = change.path;
        alive_[id] = true;
        break;
      }
    }
    return find(id);
  }

  int find(int id) {
    while (parent_[id] != id) {
      parent_[id] = parent_[parent_[id]];
      id = parent_[id];
    }
    return id;
  }

  const std::string& path(int id) { return path_[find(id)]; }
  bool alive(int id) { return alive_[find(id)]; }
  std::optional<std::string> creator(int id) {
    const int root = find(id);
    if (created_at_[root] == kNever) return std::nullopt;
    return creator_[root];
  }

 private:
  static constexpr std::size_t kNever = static_cast<std::size_t>(-1);

  int fresh(const std::string& path) {
    const int id = static_cast<int>(parent_.size());
    parent_.push_back(id);
    path_.push_back(path);
    alive_.push_back(true);
    created_at_.push_back(kNever);
    creator_.emplace_back();
    live_[path] = id;
    return id;
  }

  int live_or_new(const std::string& path) {
    auto it = live_.find(path);
    return it != live_.end() ? find(it->second) : fresh(path);
  }

  void note_creation(int id, std::size_t position, const std::string& author) {
    if (created_at_[id] == kNever || position < created_at_[id]) {
      created_at_[id] = position;
      creator_[id] = author;
    }
  }

  // The renamed identity `survivor` absorbs whatever previously lived at its new path.
  int unite(int survivor, int absorbed) {
    survivor = find(survivor);
    absorbed = find(absorbed);
    if (created_at_[absorbed] < created_at_[survivor]) {
      created_at_[survivor] = created_at_[absorbed];
      creator_[survivor] = creator_[absorbed];
    }
    parent_[absorbed] = survivor;
    return survivor;
  }

  std::map<std::string, int> live_;
  std::vector<int> parent_;
  std::vector<std::string> path_;
  std::vector<bool> alive_;
  std::vector<std::size_t> created_at_;
  std::vector<std::string> creator_;
};

}  // namespace

ContributionLedger build_ledger(std::span<const TouchRecord> touches,
                                std::span<const miner::CommitRecord> history,
                                const LedgerOptions& options) {
  std::size_t cut = history.size();
  if (options.up_to_commit) {
    auto it = std::find_if(history.begin(), history.end(), [&](const miner::CommitRecord& r) {
      return r.commit_hash == *options.up_to_commit;
    });
    if (it == history.end()) {
      throw Error(ErrorCode::InconsistentStreams, "cut commit " + *options.up_to_commit + " not in history");
    }
    cut = static_cast<std::size_t>(it - history.begin()) + 1;
  }

  IdentityTracker tracker;
  std::map<std::string, std::size_t> position_of;
  std::map<std::pair<std::string, std::string>, int> id_of_event;  // (commit, path) -> id
  std::vector<std::pair<std::size_t, std::vector<int>>> touched_ids;  // per commit
  for (std::size_t i = 0; i < history.size(); ++i) {
    position_of.emplace(history[i].commit_hash, i);
    if (i >= cut) continue;
    const auto& record = history[i];
    std::vector<int> ids;
    for (const auto& change : record.file_changes) {
      const int id = tracker.resolve(change, i, record.author.key);
      id_of_event[{record.commit_hash, change.path}] = id;
      ids.push_back(id);
    }
    touched_ids.emplace_back(i, std::move(ids));
  }

  // Everything is keyed by the root identity first, then renamed to final paths.
  std::map<int, FileStats> by_id;
  std::map<std::pair<int, std::string>, DevFileStats> entry_by_id;
  ContributionLedger ledger;
  for (const auto& [i, ids] : touched_ids) {
    const auto& record = history[i];
    ledger.developers_.try_emplace(record.author.key, record.author);
    std::set<int> roots;
    for (int id : ids) roots.insert(tracker.find(id));
    for (int root : roots) {
      auto& file = by_id[root];
      ++file.total_commits;
      file.changed_by.insert(record.author.key);
      ++entry_by_id[{root, record.author.key}].commit_count;
    }
  }

  for (const auto& touch : touches) {
    auto pos = position_of.find(touch.commit_hash);
    if (pos == position_of.end()) {
      throw Error(ErrorCode::InconsistentStreams, "touch references unknown commit " + touch.commit_hash);
    }
    if (pos->second >= cut) continue;
    auto ev = id_of_event.find({touch.commit_hash, touch.path});
    if (ev == id_of_event.end()) {
      throw Error(ErrorCode::InconsistentStreams,
                  "touch references " + touch.path + " which " + touch.commit_hash + " does not change");
    }
    const int root = tracker.find(ev->second);
    auto& entry = entry_by_id[{root, touch.developer.key}];
    entry.variable_touches += touch.variable_lines;
    entry.mandatory_touches += touch.mandatory_lines;
    if (touch.variable_lines > 0) by_id[root].variable_contributors.insert(touch.developer.key);
  }

  for (auto& [root, file] : by_id) {
    file.path = tracker.path(root);
    file.alive = tracker.alive(root);
    file.first_author = tracker.creator(root);
    if (file.first_author) entry_by_id[{root, *file.first_author}].first_author = true;
  }
  for (auto& [key, stats] : entry_by_id) {
    ledger.entries_[{by_id[key.first].path, key.second}] = stats;
  }
  for (auto& [root, file] : by_id) {
    const std::string path = file.path;
    ledger.files_[path] = std::move(file);
  }
  return ledger;
}

}  // namespace varexp::attribution
