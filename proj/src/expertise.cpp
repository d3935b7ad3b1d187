#include "varexp/expertise.hpp"

#include <algorithm>
#include <cmath>

#include "varexp/error.hpp"
#include "varexp/text.hpp"

namespace varexp::expertise {

std::string_view to_string(Metric metric) {
  return metric == Metric::Doa ? "doa" : "ownership";
}

double doa(int fa, long dl, long ac) {
  return kDoaIntercept + kDoaFirstAuthorship * fa + kDoaDeliveries * static_cast<double>(dl) -
         kDoaAcceptances * std::log1p(static_cast<double>(ac));
}

bool is_author(double doa_value, double doa_n) {
  return doa_n > kAuthorNormalizedThreshold && doa_value >= kAuthorAbsoluteThreshold;
}

bool is_major(double ownership_pct) { return ownership_pct > kMajorOwnershipThreshold; }

namespace {

std::vector<ExpertiseScore> base_scores(const attribution::ContributionLedger& ledger,
                                        std::string_view path) {
  const auto& file = ledger.file(path);
  std::vector<ExpertiseScore> scores;
  for (const auto& [dev, stats] : ledger.contributors(path)) {
    if (stats.commit_count < 1) continue;
    ExpertiseScore s;
    s.developer_key = dev;
    s.path = std::string(path);
    s.fa = stats.first_author ? 1 : 0;
    s.dl = stats.commit_count;
    s.ac = file.total_commits - stats.commit_count;
    scores.push_back(std::move(s));
  }
  return scores;
}

void fill_doa(std::vector<ExpertiseScore>& scores) {
  double max_doa = -INFINITY;
  for (auto& s : scores) {
    s.doa = doa(s.fa, s.dl, s.ac);
    max_doa = std::max(max_doa, s.doa);
  }
  for (auto& s : scores) {
    // A non-positive maximum only happens with tens of thousands of foreign
    // commits; nobody can be an author then and doa_n is pinned to 0.
    s.doa_n = max_doa > 0.0 ? std::clamp(s.doa / max_doa, 0.0, 1.0) : 0.0;
    s.is_author = is_author(s.doa, s.doa_n);
  }
}

void fill_ownership(std::vector<ExpertiseScore>& scores, int total_commits) {
  for (auto& s : scores) {
    s.ownership_pct = 100.0 * static_cast<double>(s.dl) / static_cast<double>(total_commits);
    s.is_major = is_major(s.ownership_pct);
  }
}

}  // namespace

std::vector<ExpertiseScore> doa_scores(const attribution::ContributionLedger& ledger,
                                       std::string_view path) {
  auto scores = base_scores(ledger, path);
  fill_doa(scores);
  return scores;
}

std::vector<ExpertiseScore> ownership_scores(const attribution::ContributionLedger& ledger,
                                             std::string_view path) {
  auto scores = base_scores(ledger, path);
  fill_ownership(scores, ledger.file(path).total_commits);
  return scores;
}

ExpertiseTable::ExpertiseTable(const attribution::ContributionLedger& ledger,
                               std::span<const std::string> paths) {
  for (const auto& path : paths) {
    auto scores = base_scores(ledger, path);
    fill_doa(scores);
    fill_ownership(scores, ledger.file(path).total_commits);
    by_path_[path] = std::move(scores);
  }
}

const std::vector<ExpertiseScore>& ExpertiseTable::scores(std::string_view path) const {
  auto it = by_path_.find(std::string(path));
  if (it == by_path_.end()) throw Error(ErrorCode::UnknownPath, std::string(path));
  return it->second;
}

std::set<std::string> ExpertiseTable::experts_of(std::string_view path, Metric metric) const {
  std::set<std::string> out;
  for (const auto& s : scores(path)) {
    if (metric == Metric::Doa ? s.is_author : s.is_major) out.insert(s.developer_key);
  }
  return out;
}

std::string ExpertiseTable::to_csv() const {
  std::string out = "path,developer_key,fa,dl,ac,doa,doa_n,ownership_pct,is_author,is_major\n";
  for (const auto& [path, scores] : by_path_) {
    for (const auto& s : scores) {
      out += text::csv_field(s.path) + "," + text::csv_field(s.developer_key) + "," +
             std::to_string(s.fa) + "," + std::to_string(s.dl) + "," + std::to_string(s.ac) + "," +
             text::fixed(s.doa, 6) + "," + text::fixed(s.doa_n, 6) + "," +
             text::fixed(s.ownership_pct, 6) + "," + (s.is_author ? "true" : "false") + "," +
             (s.is_major ? "true" : "false") + "\n";
    }
  }
  return out;
}

}  // namespace varexp::expertise
