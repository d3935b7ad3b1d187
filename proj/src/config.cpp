#include "varexp/config.hpp"

#include <regex>
#include <set>

#include <json.hpp>

#include "varexp/error.hpp"
#include "varexp/text.hpp"

namespace varexp::config {

using nlohmann::json;

std::string_view to_string(GiniBasis basis) {
  return basis == GiniBasis::Touches ? "touches" : "commits";
}

bool is_remote(std::string_view repo) {
  return repo.find("://") != std::string_view::npos || repo.starts_with("git@");
}

namespace {

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorCode::InvalidConfig, message); }

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) invalid(std::string(key) + " must be a string");
  return j.at(key).get<std::string>();
}

int non_negative(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer() || j.at(key).get<long long>() < 0)
    invalid(std::string(key) + " must be a non-negative integer");
  return j.at(key).get<int>();
}

variability::GuardPolicy parse_guard_policy(const json& j) {
  variability::GuardPolicy policy;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "exclude") policy.exclude_include_guards = true;
    else if (s == "include") policy.exclude_include_guards = false;
    else invalid("guard_policy must be \"include\" or \"exclude\"");
    return policy;
  }
  if (!j.is_object()) invalid("guard_policy must be a string or an object");
  if (j.contains("exclude_include_guards")) policy.exclude_include_guards = j.at("exclude_include_guards").get<bool>();
  if (j.contains("count_constant_conditions"))
    policy.count_constant_conditions = j.at("count_constant_conditions").get<bool>();
  return policy;
}

}  // namespace

CorpusConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    invalid(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) invalid("top level must be an object");

  CorpusConfig config;
  config.base_dir = base_dir;
  try {
    if (!doc.contains("projects") || !doc.at("projects").is_array()) invalid("projects must be an array");
    static const std::regex kName("[A-Za-z0-9._-]+");
    std::set<std::string> seen;
    for (const auto& jp : doc.at("projects")) {
      ProjectSpec p;
      p.name = jp.at("name").get<std::string>();
      if (!std::regex_match(p.name, kName) || p.name == "." || p.name == "..")
        invalid("project name \"" + p.name + "\" must match [A-Za-z0-9._-]+");
      if (!seen.insert(p.name).second) invalid("duplicate project name \"" + p.name + "\"");
      if (jp.contains("repo")) p.repo = jp.at("repo").get<std::string>();
      else if (jp.contains("repo_url_or_path")) p.repo = jp.at("repo_url_or_path").get<std::string>();
      else invalid("project \"" + p.name + "\" has no repo");
      p.branch = optional_string(jp, "branch");
      p.pinned_commit = optional_string(jp, "pinned_commit");
      config.projects.push_back(std::move(p));
    }
    if (doc.contains("guard_policy")) config.guard_policy = parse_guard_policy(doc.at("guard_policy"));
    if (doc.contains("count_constant_conditions"))
      config.guard_policy.count_constant_conditions = doc.at("count_constant_conditions").get<bool>();
    if (doc.contains("source_extensions")) {
      for (const auto& e : doc.at("source_extensions")) {
        auto ext = e.get<std::string>();
        if (ext.empty()) invalid("empty source extension");
        if (ext.front() != '.') ext.insert(ext.begin(), '.');
        config.source_extensions.push_back(text::to_lower(ext));
      }
    }
    if (doc.contains("aggregation")) {
      const auto a = doc.at("aggregation").get<std::string>();
      if (a == "micro") config.aggregation = stats::Aggregation::Micro;
      else if (a == "macro") config.aggregation = stats::Aggregation::Macro;
      else invalid("aggregation must be \"micro\" or \"macro\"");
    }
    if (doc.contains("gini_basis")) {
      const auto g = doc.at("gini_basis").get<std::string>();
      if (g == "touches") config.gini_basis = GiniBasis::Touches;
      else if (g == "commits") config.gini_basis = GiniBasis::Commits;
      else invalid("gini_basis must be \"touches\" or \"commits\"");
    }
    config.min_developers = non_negative(doc, "min_developers", config.min_developers);
    config.min_constants = non_negative(doc, "min_constants", config.min_constants);
    config.jobs = static_cast<unsigned>(non_negative(doc, "jobs", 0));
    if (auto cache = optional_string(doc, "cache_dir")) {
      std::filesystem::path p(*cache);
      config.cache_dir = p.is_absolute() ? p : base_dir / p;
    }
  } catch (const json::exception& e) {
    invalid(std::string("malformed field: ") + e.what());
  }
  return config;
}

CorpusConfig load_config(const std::filesystem::path& file) {
  std::string content;
  try {
    content = text::read_file(file);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "cannot read " + file.string() + ": " + e.what());
  }
  auto base = std::filesystem::absolute(file).parent_path();
  return parse_config(content, base);
}

}  // namespace varexp::config
