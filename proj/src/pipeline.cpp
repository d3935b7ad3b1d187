#include "varexp/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "varexp/attribution.hpp"
#include "varexp/error.hpp"
#include "varexp/expertise.hpp"
#include "varexp/history_cache.hpp"
#include "varexp/miner.hpp"
#include "varexp/process.hpp"
#include "varexp/text.hpp"

namespace varexp::pipeline {

namespace fs = std::filesystem;

bool PipelineResult::all_ok() const {
  return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.ok; });
}

namespace {

fs::path cache_root(const config::CorpusConfig& config, const PipelineOptions& options) {
  if (options.cache_dir) return *options.cache_dir;
  if (config.cache_dir) return *config.cache_dir;
  return options.out_dir / ".cache";
}

fs::path local_repository(const config::ProjectSpec& project, const config::CorpusConfig& config,
                          const fs::path& cache) {
  if (!config::is_remote(project.repo)) {
    fs::path p(project.repo);
    return p.is_absolute() ? p : config.base_dir / p;
  }
  const fs::path clone = cache / "clones" / project.name;
  if (fs::exists(clone / "HEAD")) return clone;
  fs::create_directories(clone.parent_path());
  spdlog::info("[{}] cloning {}", project.name, project.repo);
  process::RunOptions run;
  run.env = {{"GIT_TERMINAL_PROMPT", "0"}, {"LC_ALL", "C"}};
  const auto result = process::run({"git", "clone", "--quiet", "--bare", project.repo, clone.string()}, run);
  if (!result.ok()) {
    std::error_code ec;
    fs::remove_all(clone, ec);
    throw Error(ErrorCode::RepositoryNotFound,
                "cannot clone " + project.repo + ": " + std::string(text::trim(result.err)));
  }
  return clone;
}

std::vector<double> concentration_values(const config::CorpusConfig& config,
                                         const std::vector<stats::DeveloperClass>& population,
                                         const std::vector<attribution::TouchRecord>& touches) {
  std::vector<double> values;
  if (config.gini_basis == config::GiniBasis::Touches) {
    for (const auto& dc : population) values.push_back(static_cast<double>(dc.variable_touches_total));
    return values;
  }
  std::map<std::string, std::set<std::string>> commits;  // developer -> commits with variable lines
  for (const auto& t : touches)
    if (t.variable_lines > 0) commits[t.developer.key].insert(t.commit_hash);
  for (const auto& dc : population) values.push_back(static_cast<double>(commits[dc.developer_key].size()));
  return values;
}

report::ProjectReport analyze(const config::ProjectSpec& project, const config::CorpusConfig& config,
                              const PipelineOptions& options, std::vector<std::string>* artifacts,
                              report::ProjectReport r) {
  const fs::path cache = cache_root(config, options);
  const miner::SourceFilter filter = config.source_extensions.empty()
                                         ? miner::SourceFilter{}
                                         : miner::SourceFilter{config.source_extensions};
  r.source_extensions = filter.extensions();
  const fs::path local = local_repository(project, config, cache);
  miner::Repository repo(local);
  r.repo = project.repo;
  r.branch = project.branch ? *project.branch : repo.default_branch();
  r.head_commit = repo.resolve_commit(project.pinned_commit ? *project.pinned_commit : r.branch);

  // History, from the cache when the head matches.
  const std::string repo_id = config::is_remote(project.repo) ? project.repo : fs::weakly_canonical(local).string();
  const std::string key = miner::history_cache_key(repo_id, r.head_commit, filter);
  miner::HistoryCache history_cache(cache / "history");
  std::optional<std::vector<miner::CommitRecord>> cached;
  if (options.use_cache) cached = history_cache.load(key);
  std::vector<miner::CommitRecord> history;
  if (cached) {
    spdlog::info("[{}] history cache hit {} ({} commits), mining skipped", project.name, key, cached->size());
    history = std::move(*cached);
  } else {
    miner::ExtractionStats stats;
    history = miner::extract_history(repo, r.head_commit, filter, &stats);
    for (const auto& w : stats.warnings) spdlog::warn("[{}] {}", project.name, w);
    spdlog::info("[{}] mined {} commits", project.name, history.size());
    if (options.use_cache) history_cache.store(key, history);
  }
  r.commits = history.size();
  r.merge_commits = repo.count_merges(r.head_commit);
  std::set<std::string> developers;
  for (const auto& c : history) developers.insert(c.author.key);
  r.developers = developers.size();

  // Variability at head.
  attribution::GitSnapshotSource snapshots(repo, config.guard_policy);
  std::vector<variability::VariabilityMap> head_maps;
  std::map<std::string, int> head_variable_loc;
  for (const auto& path : repo.list_files(r.head_commit)) {
    if (!filter.accepts(path)) continue;
    auto map = snapshots.map_at(r.head_commit, path);
    head_variable_loc[path] = map->variable_loc;
    for (const auto& d : map->diagnostics)
      r.diagnostics.push_back(path + ":" + std::to_string(d.line) + ": " + d.message);
    head_maps.push_back(*map);
  }
  const auto summary = variability::project_variability_summary(head_maps);
  head_maps.clear();
  r.files = summary.files;
  r.variable_files = summary.variable_files;
  r.constants.assign(summary.constants.begin(), summary.constants.end());
  r.total_loc = summary.total_loc;
  r.mandatory_loc = summary.mandatory_loc;
  r.variable_loc = summary.variable_loc;
  r.pct_mandatory = summary.pct_mandatory;
  r.pct_variable = summary.pct_variable;

  // Ground truth.
  std::vector<attribution::TouchRecord> touches;
  for (const auto& record : history) {
    auto t = attribution::attribute_commit(record, snapshots, filter);
    touches.insert(touches.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  spdlog::debug("[{}] {} touch records, {} blobs parsed", project.name, touches.size(), snapshots.parsed_blobs());
  const auto ledger = attribution::build_ledger(touches, history);

  std::vector<std::string> head_paths;
  for (const auto& [path, file] : ledger.files())
    if (file.alive && head_variable_loc.count(path)) head_paths.push_back(path);
  const expertise::ExpertiseTable table(ledger, head_paths);

  const auto classes = stats::classify_developers(ledger);
  r.classes = stats::count_classes(classes);
  std::vector<stats::DeveloperClass> population;
  std::set<std::string> population_keys;
  for (const auto& dc : classes) {
    if (dc.cls == stats::DevClass::Generalist) continue;
    population.push_back(dc);
    population_keys.insert(dc.developer_key);
  }
  const auto values = concentration_values(config, population, touches);
  if (!values.empty() && std::any_of(values.begin(), values.end(), [](double v) { return v > 0; }))
    r.concentration = stats::concentration(values);

  // Expert sets against variable contributors, on files that contain variable code.
  stats::SetsByFile truth, doa_experts, ownership_experts;
  for (const auto& path : head_paths) {
    if (head_variable_loc.at(path) < 1) continue;
    truth[path] = ledger.file(path).variable_contributors;
    auto restrict = [&](std::set<std::string> s) {
      std::erase_if(s, [&](const std::string& dev) { return !population_keys.count(dev); });
      return s;
    };
    doa_experts[path] = restrict(table.experts_of(path, expertise::Metric::Doa));
    ownership_experts[path] = restrict(table.experts_of(path, expertise::Metric::Ownership));
  }
  r.evaluated_files = truth.size();
  if (!truth.empty()) {
    for (auto metric : {expertise::Metric::Doa, expertise::Metric::Ownership}) {
      const auto& experts = metric == expertise::Metric::Doa ? doa_experts : ownership_experts;
      for (auto agg : {stats::Aggregation::Micro, stats::Aggregation::Macro})
        r.evaluations.push_back(stats::evaluate_metric(experts, truth, agg, metric));
    }
  }

  if (options.write_artifacts) {
    const fs::path dir = options.out_dir / project.name;
    fs::create_directories(dir);
    std::string dev_csv = "developer_key,class,variable_touches,mandatory_touches\n";
    for (const auto& dc : classes)
      dev_csv += text::csv_field(dc.developer_key) + "," + std::string(stats::to_string(dc.cls)) + "," +
                 std::to_string(dc.variable_touches_total) + "," + std::to_string(dc.mandatory_touches_total) + "\n";
    const std::pair<const char*, std::string> files[] = {{"ledger.ndjson", ledger.entries_ndjson()},
                                                         {"files.ndjson", ledger.files_ndjson()},
                                                         {"expertise.csv", table.to_csv()},
                                                         {"developers.csv", dev_csv},
                                                         {"stats.json", report::stats_json(r)}};
    for (const auto& [name, content] : files) {
      text::write_file_atomic(dir / name, content);
      if (artifacts) artifacts->push_back(project.name + "/" + name);
    }
  }
  return r;
}

}  // namespace

report::ProjectReport analyze_project(const config::ProjectSpec& project, const config::CorpusConfig& config,
                                      const PipelineOptions& options, std::vector<std::string>* artifacts) {
  report::ProjectReport r;
  r.name = project.name;
  r.guard_policy = config.guard_policy;
  r.aggregation = config.aggregation;
  r.gini_basis = config.gini_basis;
  try {
    std::vector<std::string> produced;
    r = analyze(project, config, options, &produced, r);
    if (artifacts) artifacts->insert(artifacts->end(), produced.begin(), produced.end());
  } catch (const std::exception& e) {
    spdlog::error("[{}] failed: {}", project.name, e.what());
    report::ProjectReport failed;
    failed.name = project.name;
    failed.ok = false;
    failed.error = e.what();
    failed.guard_policy = config.guard_policy;
    failed.aggregation = config.aggregation;
    failed.gini_basis = config.gini_basis;
    failed.source_extensions = r.source_extensions;
    return failed;
  }
  return r;
}

PipelineResult run_pipeline(const config::CorpusConfig& config, const PipelineOptions& options) {
  PipelineResult result;
  const std::size_t n = config.projects.size();
  result.reports.resize(n);
  std::vector<std::vector<std::string>> artifacts(n);

  unsigned jobs = options.jobs.value_or(config.jobs);
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++)
      result.reports[i] = analyze_project(config.projects[i], config, options, &artifacts[i]);
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < jobs; ++w) pool.emplace_back(worker);
    worker();
  }
  for (auto& a : artifacts) result.artifacts.insert(result.artifacts.end(), a.begin(), a.end());
  return result;
}

}  // namespace varexp::pipeline
