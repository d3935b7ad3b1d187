#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varexp/attribution.hpp"
#include "varexp/expertise.hpp"

namespace varexp::stats {

enum class DevClass { Generalist, Specialist, Mixed };
std::string_view to_string(DevClass cls);

struct DeveloperClass {
  std::string developer_key;
  DevClass cls = DevClass::Generalist;
  long variable_touches_total = 0;
  long mandatory_touches_total = 0;
};

/// Totals summed over all files. Developers without any source touch are left out.
std::vector<DeveloperClass> classify_developers(const attribution::ContributionLedger& ledger);

struct ClassCounts {
  std::size_t generalists = 0;
  std::size_t specialists = 0;
  std::size_t mixed = 0;
  std::size_t total() const { return generalists + specialists + mixed; }
};
ClassCounts count_classes(std::span<const DeveloperClass> classes);

struct LorenzPoint {
  double population_share = 0.0;
  double value_share = 0.0;
};

/// Sorted ascending, (0,0) prepended. Throws AllZero, TooFewSamples on empty input.
std::vector<LorenzPoint> lorenz(std::span<const double> values);
/// Trapezoid-rule area under a Lorenz curve.
double lorenz_area(std::span<const LorenzPoint> points);

/// sum_i sum_j |xi - xj| / (2 n^2 mean). Pairwise up to 10^4 values, sorted
/// prefix identity above. Throws AllZero.
double gini(std::span<const double> values);
double gini_pairwise(std::span<const double> values);
double gini_sorted(std::span<const double> values);

/// Bias-adjusted sample skewness (G1). Throws TooFewSamples for n < 3.
double skewness(std::span<const double> values);
/// Bias-adjusted sample excess kurtosis (G2). Throws TooFewSamples for n < 4.
double excess_kurtosis(std::span<const double> values);

struct Moments {
  double skewness = 0.0;
  std::optional<double> excess_kurtosis;  // needs n >= 4
};
Moments moments(std::span<const double> values);

/// Identifies the estimator in reports.
inline constexpr std::string_view kMomentEstimator = "adjusted Fisher-Pearson G1 / excess G2";

struct ShapiroWilkResult {
  double w = 0.0;
  double p = 0.0;
};

/// Royston's AS R94 approximation. Throws SampleSizeOutOfRange outside
/// 3..5000 and DegenerateSample when all values are equal.
ShapiroWilkResult shapiro_wilk(std::span<const double> values);

struct ConcentrationResult {
  std::vector<LorenzPoint> lorenz_points;
  double gini = 0.0;
  std::optional<double> skewness;
  std::optional<double> kurtosis;
  std::optional<double> shapiro_w;
  std::optional<double> shapiro_p;
  std::size_t n = 0;
};

/// Lorenz and Gini always; moments and normality only where the sample
/// size allows. Throws AllZero.
ConcentrationResult concentration(std::span<const double> values);

enum class CorrelationMethod { Pearson, Spearman };
std::string_view to_string(CorrelationMethod method);

struct AssociationResult {
  std::string x_name;
  std::string y_name;
  CorrelationMethod method = CorrelationMethod::Pearson;
  double coefficient = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  // Regression only.
  std::optional<double> slope;
  std::optional<double> intercept;
  std::optional<double> slope_se;
  std::optional<double> r_squared;
};

/// Ties get the mean of the ranks they span (1-based).
std::vector<double> average_ranks(std::span<const double> values);

/// Two-sided p from a t statistic with n-2 df. Throws LengthMismatch, TooFewSamples.
AssociationResult pearson(std::span<const double> x, std::span<const double> y);
AssociationResult spearman(std::span<const double> x, std::span<const double> y);

/// Pearson when both series pass Shapiro-Wilk at alpha 0.05, Spearman otherwise.
AssociationResult correlate(std::span<const double> x, std::span<const double> y,
                            std::optional<CorrelationMethod> force_method = std::nullopt);

/// Simple least squares y = intercept + slope * x. Throws DegenerateX.
AssociationResult ols(std::span<const double> x, std::span<const double> y);

inline constexpr double kNormalityAlpha = 0.05;

enum class Aggregation { Micro, Macro };
std::string_view to_string(Aggregation aggregation);

struct EvaluationResult {
  expertise::Metric metric = expertise::Metric::Doa;
  Aggregation aggregation = Aggregation::Micro;
  double precision = 0.0;
  double recall = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  std::size_t files = 0;
};

using SetsByFile = std::map<std::string, std::set<std::string>>;

/// Files are the union of both maps' keys. Undefined ratios are reported as 0.
/// tp/fp/fn are pooled counts under both aggregations. Throws EmptyCorpus.
EvaluationResult evaluate_metric(const SetsByFile& experts_by_file, const SetsByFile& truth_by_file,
                                 Aggregation aggregation,
                                 expertise::Metric metric = expertise::Metric::Doa);

inline constexpr double kHighVariabilityPct = 40.0;
inline constexpr double kLowVariabilityPct = 10.0;

struct VariabilityPartition {
  std::set<std::string> high;
  std::set<std::string> low;
};

/// Strict thresholds: above 40% is high, below 10% is low.
VariabilityPartition partition_by_variability(const std::map<std::string, double>& pct_variable);

}  // namespace varexp::stats
