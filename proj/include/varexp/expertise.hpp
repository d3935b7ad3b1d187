#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varexp/attribution.hpp"

/// Degree-of-Authorship and Ownership expertise metrics.
namespace varexp::expertise {

inline constexpr double kDoaIntercept = 3.293;
inline constexpr double kDoaFirstAuthorship = 1.098;
inline constexpr double kDoaDeliveries = 0.164;
inline constexpr double kDoaAcceptances = 0.321;

/// Normalized DOA must exceed this, and absolute DOA must reach kDoaIntercept.
inline constexpr double kAuthorNormalizedThreshold = 0.75;
inline constexpr double kAuthorAbsoluteThreshold = kDoaIntercept;
/// Ownership percentage must exceed this for a major contributor.
inline constexpr double kMajorOwnershipThreshold = 5.0;

enum class Metric { Doa, Ownership };
std::string_view to_string(Metric metric);

struct ExpertiseScore {
  std::string developer_key;
  std::string path;
  int fa = 0;
  long dl = 0;
  long ac = 0;
  double doa = 0.0;
  double doa_n = 0.0;
  double ownership_pct = 0.0;
  bool is_author = false;
  bool is_major = false;
};

/// 3.293 + 1.098*fa + 0.164*dl - 0.321*ln(1 + ac).
double doa(int fa, long dl, long ac);

/// Author rule applied to an already computed (doa, doa_n) pair.
bool is_author(double doa_value, double doa_n);
bool is_major(double ownership_pct);

/// DOA fields for every contributor of `path`: dl is the developer's commit
/// count on the file and ac the other developers' commits. Throws UnknownPath.
std::vector<ExpertiseScore> doa_scores(const attribution::ContributionLedger& ledger,
                                       std::string_view path);

/// Ownership fields: share of the file's commits, in percent. Throws UnknownPath.
std::vector<ExpertiseScore> ownership_scores(const attribution::ContributionLedger& ledger,
                                             std::string_view path);

/// Both metrics for every (developer, file) pair of the given files.
class ExpertiseTable {
 public:
  ExpertiseTable() = default;
  ExpertiseTable(const attribution::ContributionLedger& ledger, std::span<const std::string> paths);

  /// Throws UnknownPath.
  const std::vector<ExpertiseScore>& scores(std::string_view path) const;
  /// authors(f) for Doa, majors(f) for Ownership. Throws UnknownPath.
  std::set<std::string> experts_of(std::string_view path, Metric metric) const;

  const std::map<std::string, std::vector<ExpertiseScore>>& all() const { return by_path_; }

  /// `expertise.csv`; fixed column order and 6 decimals.
  std::string to_csv() const;

 private:
  std::map<std::string, std::vector<ExpertiseScore>> by_path_;
};

}  // namespace varexp::expertise
