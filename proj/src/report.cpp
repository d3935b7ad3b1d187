#include "varexp/report.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "varexp/error.hpp"
#include "varexp/text.hpp"

namespace varexp::report {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

double ProjectReport::class_pct(stats::DevClass cls) const {
  const auto total = classes.total();
  if (total == 0) return 0.0;
  std::size_t count = 0;
  switch (cls) {
    case stats::DevClass::Generalist: count = classes.generalists; break;
    case stats::DevClass::Specialist: count = classes.specialists; break;
    case stats::DevClass::Mixed: count = classes.mixed; break;
  }
  return 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

const stats::EvaluationResult* ProjectReport::primary_evaluation(expertise::Metric metric) const {
  for (const auto& e : evaluations)
    if (e.metric == metric && e.aggregation == aggregation) return &e;
  return nullptr;
}

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json association_json(const stats::AssociationResult& a) {
  ordered_json j;
  j["x"] = a.x_name;
  j["y"] = a.y_name;
  j["method"] = stats::to_string(a.method);
  j["coefficient"] = a.coefficient;
  j["p_value"] = a.p_value;
  j["n"] = a.n;
  if (a.slope) {
    j["slope"] = *a.slope;
    j["intercept"] = opt(a.intercept);
    j["slope_se"] = opt(a.slope_se);
    j["r_squared"] = opt(a.r_squared);
  }
  return j;
}

ordered_json concentration_json(const stats::ConcentrationResult& c, bool with_points) {
  ordered_json j;
  j["n"] = c.n;
  j["gini"] = c.gini;
  j["skewness"] = opt(c.skewness);
  j["kurtosis"] = opt(c.kurtosis);
  j["shapiro_w"] = opt(c.shapiro_w);
  j["shapiro_p"] = opt(c.shapiro_p);
  j["normal"] = c.shapiro_p ? ordered_json(*c.shapiro_p > stats::kNormalityAlpha) : ordered_json(nullptr);
  if (with_points) {
    ordered_json pts = ordered_json::array();
    for (const auto& p : c.lorenz_points) pts.push_back({p.population_share, p.value_share});
    j["lorenz_points"] = std::move(pts);
  }
  return j;
}

ordered_json policy_json(const ProjectReport& r) {
  ordered_json j;
  j["exclude_include_guards"] = r.guard_policy.exclude_include_guards;
  j["count_constant_conditions"] = r.guard_policy.count_constant_conditions;
  j["directive_lines"] = "variable";
  j["aggregation"] = stats::to_string(r.aggregation);
  j["gini_basis"] = config::to_string(r.gini_basis);
  j["population"] = "specialists+mixed";
  j["scoring"] = "head";
  j["moment_estimator"] = stats::kMomentEstimator;
  j["source_extensions"] = r.source_extensions;
  return j;
}

ordered_json toolkit_json() { return {{"name", "varexp"}, {"version", kToolkitVersion}}; }

std::string num(double v) { return text::fixed(v, 6); }
std::string num(const std::optional<double>& v) { return v ? text::fixed(*v, 6) : std::string(); }

}  // namespace

std::string report_json(const ProjectReport& r) {
  ordered_json j;
  j["toolkit"] = toolkit_json();
  j["project"] = r.name;
  j["status"] = r.ok ? "ok" : "failed";
  j["error"] = r.ok ? ordered_json(nullptr) : ordered_json(r.error);
  j["policy"] = policy_json(r);
  if (!r.ok) return j.dump(2) + "\n";

  j["repository"] = {{"repo", r.repo},
                     {"branch", r.branch},
                     {"head_commit", r.head_commit},
                     {"commits", r.commits},
                     {"merge_commits", r.merge_commits},
                     {"developers", r.developers}};
  j["structure"] = {{"files", r.files},
                    {"variable_files", r.variable_files},
                    {"constant_count", r.constants.size()},
                    {"constants", r.constants}};
  ordered_json var;
  var["total_loc"] = r.total_loc;
  var["mandatory_loc"] = r.mandatory_loc;
  var["variable_loc"] = r.variable_loc;
  var["pct_mandatory"] = r.pct_mandatory;
  var["pct_variable"] = r.pct_variable;
  var["mv_ratio"] = r.pct_variable > 0 ? ordered_json(r.pct_mandatory / r.pct_variable) : ordered_json(nullptr);
  j["variability"] = std::move(var);
  j["developer_classes"] = {
      {"classified", r.classes.total()},
      {"generalists", {{"count", r.classes.generalists}, {"pct", r.class_pct(stats::DevClass::Generalist)}}},
      {"specialists", {{"count", r.classes.specialists}, {"pct", r.class_pct(stats::DevClass::Specialist)}}},
      {"mixed", {{"count", r.classes.mixed}, {"pct", r.class_pct(stats::DevClass::Mixed)}}}};
  j["concentration"] = r.concentration ? concentration_json(*r.concentration, false) : ordered_json(nullptr);
  ordered_json ev;
  ev["files"] = r.evaluated_files;
  ev["results"] = ordered_json::array();
  for (const auto& e : r.evaluations) {
    ev["results"].push_back({{"metric", expertise::to_string(e.metric)},
                             {"aggregation", stats::to_string(e.aggregation)},
                             {"precision", e.precision},
                             {"recall", e.recall},
                             {"tp", e.tp},
                             {"fp", e.fp},
                             {"fn", e.fn}});
  }
  j["evaluation"] = std::move(ev);
  j["associations"] = ordered_json::array();
  for (const auto& a : r.associations) j["associations"].push_back(association_json(a));
  j["diagnostics"] = r.diagnostics;
  return j.dump(2) + "\n";
}

std::string stats_json(const ProjectReport& r) {
  ordered_json j;
  j["toolkit"] = toolkit_json();
  j["project"] = r.name;
  j["policy"] = policy_json(r);
  j["developer_classes"] = {{"generalists", r.classes.generalists},
                            {"specialists", r.classes.specialists},
                            {"mixed", r.classes.mixed}};
  j["concentration"] = r.concentration ? concentration_json(*r.concentration, true) : ordered_json(nullptr);
  j["evaluation"] = ordered_json::array();
  for (const auto& e : r.evaluations) {
    j["evaluation"].push_back({{"metric", expertise::to_string(e.metric)},
                               {"aggregation", stats::to_string(e.aggregation)},
                               {"precision", e.precision},
                               {"recall", e.recall},
                               {"tp", e.tp},
                               {"fp", e.fp},
                               {"fn", e.fn},
                               {"files", e.files}});
  }
  j["associations"] = ordered_json::array();
  for (const auto& a : r.associations) j["associations"].push_back(association_json(a));
  return j.dump(2) + "\n";
}

std::string summary_csv(std::span<const ProjectReport> reports) {
  std::string out =
      "project,status,commits,developers,constants,pct_mandatory,pct_variable,generalists_pct,"
      "specialists_pct,mixed_pct,gini,skewness,kurtosis,shapiro_w,shapiro_p,doa_precision,doa_recall,"
      "ownership_precision,ownership_recall,aggregation\n";
  for (const auto& r : reports) {
    std::vector<std::string> row{text::csv_field(r.name), r.ok ? "ok" : "failed"};
    if (!r.ok) {
      row.resize(19);
      row.push_back(std::string(stats::to_string(r.aggregation)));
    } else {
      row.push_back(std::to_string(r.commits));
      row.push_back(std::to_string(r.developers));
      row.push_back(std::to_string(r.constants.size()));
      row.push_back(num(r.pct_mandatory));
      row.push_back(num(r.pct_variable));
      row.push_back(num(r.class_pct(stats::DevClass::Generalist)));
      row.push_back(num(r.class_pct(stats::DevClass::Specialist)));
      row.push_back(num(r.class_pct(stats::DevClass::Mixed)));
      if (r.concentration) {
        row.push_back(num(r.concentration->gini));
        row.push_back(num(r.concentration->skewness));
        row.push_back(num(r.concentration->kurtosis));
        row.push_back(num(r.concentration->shapiro_w));
        row.push_back(num(r.concentration->shapiro_p));
      } else {
        row.insert(row.end(), 5, std::string());
      }
      for (auto metric : {expertise::Metric::Doa, expertise::Metric::Ownership}) {
        const auto* e = r.primary_evaluation(metric);
        row.push_back(e ? num(e->precision) : std::string());
        row.push_back(e ? num(e->recall) : std::string());
      }
      row.push_back(std::string(stats::to_string(r.aggregation)));
    }
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += "\n";
  }
  return out;
}

std::vector<ManifestEntry> emit_reports(std::span<const ProjectReport> reports, const fs::path& out_dir,
                                        Formats formats, std::span<const std::string> extra_artifacts) {
  std::vector<std::pair<std::string, std::string>> written;  // relative path, content
  try {
    fs::create_directories(out_dir);
    auto write = [&](const std::string& rel, const std::string& content) {
      text::write_file_atomic(out_dir / rel, content);
      written.emplace_back(rel, content);
    };
    if (formats.json) {
      for (const auto& r : reports) write(r.name + "/report.json", report_json(r));
    }
    if (formats.csv && !reports.empty()) write("summary.csv", summary_csv(reports));
    for (const auto& rel : extra_artifacts) written.emplace_back(rel, text::read_file(out_dir / rel));

    std::vector<ManifestEntry> entries;
    for (const auto& [rel, content] : written) entries.push_back({rel, text::sha256_hex(content), content.size()});
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    entries.erase(std::unique(entries.begin(), entries.end(),
                              [](const auto& a, const auto& b) { return a.path == b.path; }),
                  entries.end());

    ordered_json manifest;
    manifest["toolkit"] = toolkit_json();
    manifest["files"] = ordered_json::array();
    for (const auto& e : entries)
      manifest["files"].push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
    text::write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return entries;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IoFailure, e.what());
  }
}

std::vector<ScreeningDecision> screen_corpus(std::span<const ProjectReport> reports, int min_developers,
                                             int min_constants) {
  std::vector<ScreeningDecision> out;
  for (const auto& r : reports) {
    ScreeningDecision d;
    d.name = r.name;
    if (!r.ok) {
      d.reasons.push_back("failed");
    } else {
      if (r.developers <= static_cast<std::size_t>(min_developers))
        d.reasons.push_back("developers ≤ " + std::to_string(min_developers));
      if (r.constants.size() < static_cast<std::size_t>(min_constants))
        d.reasons.push_back("constants < " + std::to_string(min_constants));
    }
    d.included = d.reasons.empty();
    out.push_back(std::move(d));
  }
  return out;
}

ProjectReport parse_report_json(std::string_view json_text) {
  ProjectReport r;
  try {
    const auto j = nlohmann::json::parse(json_text);
    r.name = j.at("project").get<std::string>();
    r.ok = j.at("status").get<std::string>() == "ok";
    if (!r.ok) {
      r.error = j.value("error", std::string());
      return r;
    }
    const auto& repo = j.at("repository");
    r.repo = repo.at("repo").get<std::string>();
    r.branch = repo.at("branch").get<std::string>();
    r.head_commit = repo.at("head_commit").get<std::string>();
    r.commits = repo.at("commits").get<std::size_t>();
    r.merge_commits = repo.at("merge_commits").get<std::size_t>();
    r.developers = repo.at("developers").get<std::size_t>();
    const auto& st = j.at("structure");
    r.files = st.at("files").get<std::size_t>();
    r.variable_files = st.at("variable_files").get<std::size_t>();
    r.constants = st.at("constants").get<std::vector<std::string>>();
    const auto& var = j.at("variability");
    r.total_loc = var.at("total_loc").get<long long>();
    r.mandatory_loc = var.at("mandatory_loc").get<long long>();
    r.variable_loc = var.at("variable_loc").get<long long>();
    r.pct_mandatory = var.at("pct_mandatory").get<double>();
    r.pct_variable = var.at("pct_variable").get<double>();
    const auto& dc = j.at("developer_classes");
    r.classes.generalists = dc.at("generalists").at("count").get<std::size_t>();
    r.classes.specialists = dc.at("specialists").at("count").get<std::size_t>();
    r.classes.mixed = dc.at("mixed").at("count").get<std::size_t>();
    const auto& policy = j.at("policy");
    r.aggregation = policy.at("aggregation").get<std::string>() == "macro" ? stats::Aggregation::Macro
                                                                           : stats::Aggregation::Micro;
    r.evaluated_files = j.at("evaluation").at("files").get<std::size_t>();
    for (const auto& e : j.at("evaluation").at("results")) {
      stats::EvaluationResult ev;
      ev.metric = e.at("metric").get<std::string>() == "doa" ? expertise::Metric::Doa : expertise::Metric::Ownership;
      ev.aggregation = e.at("aggregation").get<std::string>() == "macro" ? stats::Aggregation::Macro
                                                                         : stats::Aggregation::Micro;
      ev.precision = e.at("precision").get<double>();
      ev.recall = e.at("recall").get<double>();
      ev.tp = e.at("tp").get<long>();
      ev.fp = e.at("fp").get<long>();
      ev.fn = e.at("fn").get<long>();
      r.evaluations.push_back(ev);
    }
    if (!j.at("concentration").is_null()) {
      const auto& c = j.at("concentration");
      stats::ConcentrationResult cr;
      cr.n = c.at("n").get<std::size_t>();
      cr.gini = c.at("gini").get<double>();
      auto o = [&](const char* key) -> std::optional<double> {
        return c.at(key).is_null() ? std::nullopt : std::optional<double>(c.at(key).get<double>());
      };
      cr.skewness = o("skewness");
      cr.kurtosis = o("kurtosis");
      cr.shapiro_w = o("shapiro_w");
      cr.shapiro_p = o("shapiro_p");
      r.concentration = cr;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoFailure, std::string("malformed report: ") + e.what());
  }
  return r;
}

std::vector<ProjectReport> load_reports(const fs::path& out_dir) {
  std::vector<ProjectReport> reports;
  std::error_code ec;
  if (!fs::is_directory(out_dir, ec)) throw Error(ErrorCode::IoFailure, out_dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const auto candidate = entry.path() / "report.json";
    if (entry.is_directory() && fs::exists(candidate)) files.push_back(candidate);
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) reports.push_back(parse_report_json(text::read_file(f)));
  return reports;
}

std::optional<std::string> corpus_json(std::span<const ProjectReport> reports) {
  std::vector<const ProjectReport*> ok;
  for (const auto& r : reports)
    if (r.ok) ok.push_back(&r);
  if (ok.size() < 3) return std::nullopt;

  ordered_json j;
  j["toolkit"] = toolkit_json();
  j["projects"] = ordered_json::array();
  for (const auto* r : ok) j["projects"].push_back(r->name);

  // Developer mix against the mandatory/variable ratio.
  {
    std::vector<double> mv, g, s, m;
    for (const auto* r : ok) {
      if (r->pct_variable <= 0 || r->classes.total() == 0) continue;
      mv.push_back(r->pct_mandatory / r->pct_variable);
      g.push_back(r->class_pct(stats::DevClass::Generalist) / 100.0);
      s.push_back(r->class_pct(stats::DevClass::Specialist) / 100.0);
      m.push_back(r->class_pct(stats::DevClass::Mixed) / 100.0);
    }
    ordered_json mix = ordered_json::array();
    const std::pair<const char*, const std::vector<double>*> series[] = {
        {"generalist_share", &g}, {"specialist_share", &s}, {"mixed_share", &m}};
    for (const auto& [name, ys] : series) {
      ordered_json entry;
      entry["y"] = name;
      try {
        auto corr = stats::pearson(mv, *ys);
        corr.x_name = "mv_ratio";
        corr.y_name = name;
        entry["correlation"] = association_json(corr);
        auto fit = stats::ols(mv, *ys);
        fit.x_name = "mv_ratio";
        fit.y_name = name;
        entry["regression"] = association_json(fit);
      } catch (const Error& e) {
        entry["error"] = e.what();
      }
      mix.push_back(std::move(entry));
    }
    j["developer_mix"] = std::move(mix);
  }

  // External validity: six project variables against each expertise score.
  {
    std::vector<const ProjectReport*> evaluated;
    for (const auto* r : ok)
      if (r->primary_evaluation(expertise::Metric::Doa)) evaluated.push_back(r);
    using Getter = double (*)(const ProjectReport&);
    const std::pair<const char*, Getter> variables[] = {
        {"presence_conditions", [](const ProjectReport& r) { return static_cast<double>(r.constants.size()); }},
        {"pct_mandatory", [](const ProjectReport& r) { return r.pct_mandatory; }},
        {"pct_variable", [](const ProjectReport& r) { return r.pct_variable; }},
        {"generalist_pct", [](const ProjectReport& r) { return r.class_pct(stats::DevClass::Generalist); }},
        {"specialist_pct", [](const ProjectReport& r) { return r.class_pct(stats::DevClass::Specialist); }},
        {"mixed_pct", [](const ProjectReport& r) { return r.class_pct(stats::DevClass::Mixed); }}};
    const std::pair<const char*, Getter> scores[] = {
        {"doa_precision", [](const ProjectReport& r) { return r.primary_evaluation(expertise::Metric::Doa)->precision; }},
        {"doa_recall", [](const ProjectReport& r) { return r.primary_evaluation(expertise::Metric::Doa)->recall; }},
        {"ownership_precision",
         [](const ProjectReport& r) { return r.primary_evaluation(expertise::Metric::Ownership)->precision; }},
        {"ownership_recall",
         [](const ProjectReport& r) { return r.primary_evaluation(expertise::Metric::Ownership)->recall; }}};
    ordered_json validity = ordered_json::array();
    for (const auto& [vname, vget] : variables) {
      for (const auto& [sname, sget] : scores) {
        std::vector<double> xs, ys;
        for (const auto* r : evaluated) {
          xs.push_back(vget(*r));
          ys.push_back(sget(*r));
        }
        try {
          auto a = stats::correlate(xs, ys);
          a.x_name = vname;
          a.y_name = sname;
          validity.push_back(association_json(a));
        } catch (const Error& e) {
          validity.push_back({{"x", vname}, {"y", sname}, {"error", e.what()}});
        }
      }
    }
    j["external_validity"] = std::move(validity);
  }

  // High- vs low-variability groups.
  {
    std::map<std::string, double> pct;
    std::map<std::string, const ProjectReport*> by_name;
    for (const auto* r : ok) {
      pct[r->name] = r->pct_variable;
      by_name[r->name] = r;
    }
    const auto part = stats::partition_by_variability(pct);
    auto group = [&](const std::set<std::string>& names) {
      ordered_json g;
      g["projects"] = names;
      for (auto metric : {expertise::Metric::Doa, expertise::Metric::Ownership}) {
        double p = 0, rc = 0;
        std::size_t n = 0;
        for (const auto& name : names) {
          if (const auto* e = by_name[name]->primary_evaluation(metric)) {
            p += e->precision;
            rc += e->recall;
            ++n;
          }
        }
        const std::string key(expertise::to_string(metric));
        g[key + "_precision_mean"] = n ? ordered_json(p / static_cast<double>(n)) : ordered_json(nullptr);
        g[key + "_recall_mean"] = n ? ordered_json(rc / static_cast<double>(n)) : ordered_json(nullptr);
      }
      return g;
    };
    j["variability_groups"] = {{"high", group(part.high)}, {"low", group(part.low)}};
  }

  double gini_sum = 0;
  std::size_t gini_n = 0;
  for (const auto* r : ok) {
    if (r->concentration) {
      gini_sum += r->concentration->gini;
      ++gini_n;
    }
  }
  j["mean_gini"] = gini_n ? ordered_json(gini_sum / static_cast<double>(gini_n)) : ordered_json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace varexp::report
