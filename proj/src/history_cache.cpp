#include "varexp/history_cache.hpp"

#include <json.hpp>

#include "varexp/error.hpp"
#include "varexp/text.hpp"

namespace varexp::miner {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json line_array(const FileChange& change, LineKind kind) {
  ordered_json out = ordered_json::array();
  for (const auto& lc : change.line_changes) {
    if (lc.kind != kind) continue;
    out.push_back(ordered_json{{"line", lc.line_number}, {"content", lc.content}});
  }
  return out;
}

ordered_json record_base(const CommitRecord& record) {
  ordered_json j;
  j["commit"] = record.commit_hash;
  j["author_key"] = record.author.key;
  j["author_name"] = record.author.display_name;
  j["timestamp"] = record.timestamp;
  j["parents"] = record.parent_count;
  return j;
}

}  // namespace

std::string serialize_history(const std::vector<CommitRecord>& records) {
  std::string out;
  for (const auto& record : records) {
    if (record.file_changes.empty()) {
      auto j = record_base(record);
      j["path"] = nullptr;
      j["old_path"] = nullptr;
      j["change_kind"] = nullptr;
      j["additions"] = ordered_json::array();
      j["deletions"] = ordered_json::array();
      out += j.dump() + "\n";
      continue;
    }
    for (const auto& change : record.file_changes) {
      auto j = record_base(record);
      j["path"] = change.path;
      j["old_path"] = change.old_path ? ordered_json(*change.old_path) : ordered_json(nullptr);
      j["change_kind"] = to_string(change.change_kind);
      j["additions"] = line_array(change, LineKind::Addition);
      j["deletions"] = line_array(change, LineKind::Deletion);
      out += j.dump() + "\n";
    }
  }
  return out;
}

std::vector<CommitRecord> parse_history(std::string_view ndjson) {
  std::vector<CommitRecord> records;
  for (const auto& line : text::split_lines(ndjson)) {
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto commit = j.at("commit").get<std::string>();
    if (records.empty() || records.back().commit_hash != commit) {
      CommitRecord record;
      record.commit_hash = commit;
      record.author.key = j.at("author_key").get<std::string>();
      record.author.display_name = j.at("author_name").get<std::string>();
      if (record.author.key.find('@') != std::string::npos) {
        record.author.emails.insert(record.author.key);
      }
      record.timestamp = j.at("timestamp").get<std::int64_t>();
      record.parent_count = j.value("parents", 1);
      records.push_back(std::move(record));
    }
    if (j.at("path").is_null()) continue;
    FileChange change;
    change.path = j.at("path").get<std::string>();
    if (!j.at("old_path").is_null()) change.old_path = j.at("old_path").get<std::string>();
    const auto kind = parse_change_kind(j.at("change_kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::IoFailure, "bad change_kind in history cache");
    change.change_kind = *kind;
    for (const auto& d : j.at("deletions")) {
      change.line_changes.push_back(
          {LineKind::Deletion, d.at("line").get<int>(), d.at("content").get<std::string>()});
    }
    for (const auto& a : j.at("additions")) {
      change.line_changes.push_back(
          {LineKind::Addition, a.at("line").get<int>(), a.at("content").get<std::string>()});
    }
    records.back().file_changes.push_back(std::move(change));
  }
  return records;
}

std::string history_cache_key(std::string_view repo_id, std::string_view head_commit,
                              const SourceFilter& filter) {
  std::string material = std::string(repo_id) + "\n" + std::string(head_commit) + "\n";
  for (const auto& ext : filter.extensions()) material += ext + ";";
  return text::sha256_hex(material).substr(0, 32);
}

std::filesystem::path HistoryCache::location(std::string_view key) const {
  return root_ / std::string(key) / "history.ndjson";
}

std::optional<std::vector<CommitRecord>> HistoryCache::load(std::string_view key) const {
  const auto path = location(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    return parse_history(text::read_file(path));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void HistoryCache::store(std::string_view key, const std::vector<CommitRecord>& records) const {
  text::write_file_atomic(location(key), serialize_history(records));
}

}  // namespace varexp::miner
