#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "varexp/config.hpp"
#include "varexp/error.hpp"
#include "varexp/fixtures.hpp"
#include "varexp/pipeline.hpp"
#include "varexp/report.hpp"
#include "varexp/text.hpp"

namespace fs = std::filesystem;
using namespace varexp;

namespace {

report::Formats parse_formats(const std::string& list) {
  report::Formats f{false, false};
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = std::string(text::trim(item));
    if (t == "json") f.json = true;
    else if (t == "csv") f.csv = true;
    else throw CLI::ValidationError("--format", "unknown format '" + t + "'");
  }
  return f;
}

int run_analyze(const fs::path& config_path, const fs::path& out, const std::string& formats,
                std::optional<unsigned> jobs, const std::string& guard_policy, const std::string& aggregation,
                bool no_cache, const std::string& cache_dir) {
  auto config = config::load_config(config_path);
  if (guard_policy == "include") config.guard_policy.exclude_include_guards = false;
  if (guard_policy == "exclude") config.guard_policy.exclude_include_guards = true;
  if (aggregation == "micro") config.aggregation = stats::Aggregation::Micro;
  if (aggregation == "macro") config.aggregation = stats::Aggregation::Macro;

  pipeline::PipelineOptions options;
  options.out_dir = out;
  options.use_cache = !no_cache;
  options.jobs = jobs;
  if (!cache_dir.empty()) options.cache_dir = fs::path(cache_dir);

  auto result = pipeline::run_pipeline(config, options);
  if (auto corpus = report::corpus_json(result.reports)) {
    text::write_file_atomic(out / "corpus.json", *corpus);
    result.artifacts.push_back("corpus.json");
  }
  const auto manifest = report::emit_reports(result.reports, out, parse_formats(formats), result.artifacts);

  for (const auto& r : result.reports) {
    if (!r.ok) {
      std::cout << r.name << ": failed: " << r.error << "\n";
      continue;
    }
    std::cout << r.name << ": " << r.commits << " commits, " << r.developers << " developers, "
              << r.constants.size() << " constants, " << text::fixed(r.pct_variable, 2) << "% variable\n";
  }
  std::cout << manifest.size() << " files listed in " << (out / "manifest.json").string() << "\n";
  return result.all_ok() ? 0 : 1;
}

int run_screen(const fs::path& in, int min_developers, int min_constants) {
  const auto reports = report::load_reports(in);
  for (const auto& d : report::screen_corpus(reports, min_developers, min_constants)) {
    std::cout << d.name << "\t" << (d.included ? "included" : "excluded");
    for (std::size_t i = 0; i < d.reasons.size(); ++i) std::cout << (i ? "; " : "\t") << d.reasons[i];
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("varexp"));
  spdlog::set_pattern("%^%l%$ %v");

  CLI::App app{"Variability-aware developer expertise mining for C/C++ repositories"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only warnings and errors");

  auto* analyze = app.add_subcommand("analyze", "Mine, classify, attribute and score every project in a config");
  std::string config_path, out_dir, formats = "json,csv", guard_policy, aggregation, cache_dir;
  std::optional<unsigned> jobs;
  bool no_cache = false;
  analyze->add_option("--config", config_path, "Corpus config (JSON)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", out_dir, "Output directory")->required();
  analyze->add_option("--format", formats, "Comma-separated: json,csv")->capture_default_str();
  analyze->add_option("--jobs", jobs, "Projects analyzed in parallel (default: logical cores)")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--guard-policy", guard_policy, "Include guards: include|exclude")
      ->check(CLI::IsMember({"include", "exclude"}));
  analyze->add_option("--aggregation", aggregation, "Precision/recall aggregation: micro|macro")
      ->check(CLI::IsMember({"micro", "macro"}));
  analyze->add_flag("--no-cache", no_cache, "Ignore and do not write the history cache");
  analyze->add_option("--cache-dir", cache_dir, "History cache and clone directory");

  auto* screen = app.add_subcommand("screen", "Apply the corpus inclusion criteria to analyzed reports");
  std::string in_dir;
  int min_developers = 30, min_constants = 50;
  screen->add_option("--in", in_dir, "Directory written by analyze")->required()->check(CLI::ExistingDirectory);
  screen->add_option("--min-developers", min_developers, "Developers must exceed this")->capture_default_str();
  screen->add_option("--min-constants", min_constants, "Constants must reach this")->capture_default_str();

  auto* fixtures_cmd = app.add_subcommand("fixtures", "Synthetic repositories");
  fixtures_cmd->require_subcommand(1);
  auto* generate = fixtures_cmd->add_subcommand("generate", "Build the scripted fixture repositories");
  std::string fixture_out;
  std::optional<int> large;
  generate->add_option("--out", fixture_out, "Target directory")->required();
  generate->add_option("--large", large, "Also build a synthetic repository with this many commits")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::debug);
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (*analyze)
      return run_analyze(config_path, out_dir, formats, jobs, guard_policy, aggregation, no_cache, cache_dir);
    if (*screen) return run_screen(in_dir, min_developers, min_constants);
    if (*generate) {
      const auto corpus = fixtures::generate(fixture_out, large);
      for (const auto& name : corpus.names) std::cout << (fs::path(fixture_out) / "repos" / name).string() << "\n";
      std::cout << corpus.config.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
