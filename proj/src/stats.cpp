#include "varexp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "varexp/error.hpp"
#include "varexp/special_functions.hpp"

namespace varexp::stats {

std::string_view to_string(DevClass cls) {
  switch (cls) {
    case DevClass::Generalist: return "generalist";
    case DevClass::Specialist: return "specialist";
    case DevClass::Mixed: return "mixed";
  }
  return "?";
}

std::string_view to_string(CorrelationMethod method) {
  return method == CorrelationMethod::Pearson ? "pearson" : "spearman";
}

std::string_view to_string(Aggregation aggregation) {
  return aggregation == Aggregation::Micro ? "micro" : "macro";
}

std::vector<DeveloperClass> classify_developers(const attribution::ContributionLedger& ledger) {
  std::map<std::string, DeveloperClass> totals;
  for (const auto& [key, stats] : ledger.entries()) {
    auto& dc = totals[key.second];
    dc.developer_key = key.second;
    dc.variable_touches_total += stats.variable_touches;
    dc.mandatory_touches_total += stats.mandatory_touches;
  }
  std::vector<DeveloperClass> out;
  for (auto& [_, dc] : totals) {
    const bool var = dc.variable_touches_total > 0;
    const bool mand = dc.mandatory_touches_total > 0;
    if (!var && !mand) continue;
    dc.cls = var && mand ? DevClass::Mixed : var ? DevClass::Specialist : DevClass::Generalist;
    out.push_back(std::move(dc));
  }
  return out;
}

ClassCounts count_classes(std::span<const DeveloperClass> classes) {
  ClassCounts c;
  for (const auto& dc : classes) {
    switch (dc.cls) {
      case DevClass::Generalist: ++c.generalists; break;
      case DevClass::Specialist: ++c.specialists; break;
      case DevClass::Mixed: ++c.mixed; break;
    }
  }
  return c;
}

namespace {

void require_nonnegative_mass(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::TooFewSamples, "empty sample");
  double total = 0.0;
  for (double v : values) {
    if (v < 0.0 || !std::isfinite(v))
      throw Error(ErrorCode::DegenerateSample, "values must be finite and non-negative");
    total += v;
  }
  if (total <= 0.0) throw Error(ErrorCode::AllZero, "all values are zero");
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<LorenzPoint> lorenz(std::span<const double> values) {
  require_nonnegative_mass(values);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<double> cumulative(sorted.size());
  std::partial_sum(sorted.begin(), sorted.end(), cumulative.begin());
  const double total = cumulative.back();
  std::vector<LorenzPoint> points;
  points.reserve(sorted.size() + 1);
  points.push_back({0.0, 0.0});
  for (std::size_t k = 0; k < sorted.size(); ++k)
    points.push_back({static_cast<double>(k + 1) / n, cumulative[k] / total});
  return points;
}

double lorenz_area(std::span<const LorenzPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].population_share - points[i - 1].population_share;
    area += dx * (points[i].value_share + points[i - 1].value_share) / 2.0;
  }
  return area;
}

double gini_pairwise(std::span<const double> values) {
  require_nonnegative_mass(values);
  // Half of the double sum; the 2 cancels against the denominator.
  double diff = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    total += values[i];
    for (std::size_t j = i + 1; j < values.size(); ++j) diff += std::fabs(values[i] - values[j]);
  }
  return diff / (static_cast<double>(values.size()) * total);
}

double gini_sorted(std::span<const double> values) {
  require_nonnegative_mass(values);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    weighted += static_cast<double>(i + 1) * sorted[i];
    total += sorted[i];
  }
  return 2.0 * weighted / (n * total) - (n + 1.0) / n;
}

double gini(std::span<const double> values) {
  return values.size() <= 10000 ? gini_pairwise(values) : gini_sorted(values);
}

namespace {

struct CentralMoments {
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

CentralMoments central_moments(std::span<const double> v) {
  const double mean = mean_of(v);
  CentralMoments m;
  for (double x : v) {
    const double d = x - mean;
    m.m2 += d * d;
    m.m3 += d * d * d;
    m.m4 += d * d * d * d;
  }
  const double n = static_cast<double>(v.size());
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

}  // namespace

double skewness(std::span<const double> values) {
  if (values.size() < 3) throw Error(ErrorCode::TooFewSamples, "skewness needs n >= 3");
  const auto m = central_moments(values);
  if (m.m2 <= 0.0) return 0.0;
  const double n = static_cast<double>(values.size());
  const double g1 = m.m3 / std::pow(m.m2, 1.5);
  return std::sqrt(n * (n - 1.0)) / (n - 2.0) * g1;
}

double excess_kurtosis(std::span<const double> values) {
  if (values.size() < 4) throw Error(ErrorCode::TooFewSamples, "kurtosis needs n >= 4");
  const auto m = central_moments(values);
  if (m.m2 <= 0.0) return 0.0;
  const double n = static_cast<double>(values.size());
  const double g2 = m.m4 / (m.m2 * m.m2) - 3.0;
  return ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0));
}

Moments moments(std::span<const double> values) {
  Moments m;
  m.skewness = skewness(values);
  if (values.size() >= 4) m.excess_kurtosis = excess_kurtosis(values);
  return m;
}

namespace {

double poly(std::initializer_list<double> coefficients, double x) {
  double result = 0.0;
  double power = 1.0;
  for (double c : coefficients) {
    result += c * power;
    power *= x;
  }
  return result;
}

}  // namespace

ShapiroWilkResult shapiro_wilk(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3 || n > 5000)
    throw Error(ErrorCode::SampleSizeOutOfRange, "Shapiro-Wilk needs 3 <= n <= 5000");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19)) throw Error(ErrorCode::DegenerateSample, "all values are equal");

  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = special::normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly({0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056}, rsn) -
                      m[0] / ssumm2;
    std::size_t first_scaled;
    double fac;
    if (n > 5) {
      first_scaled = 2;
      const double a2 = -m[1] / ssumm2 +
                        poly({0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633}, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first_scaled = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first_scaled; i < half; ++i) a[i] = -m[i] / fac;
  }

  // Scale by the range for conditioning; W is scale free.
  for (double& v : x) v /= range;
  const double mean = mean_of(x);
  double ssq = 0.0;
  for (double v : x) ssq += (v - mean) * (v - mean);
  double num = 0.0;
  for (std::size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
  double w = num * num / ssq;
  w = std::min(w, 1.0);

  ShapiroWilkResult result;
  result.w = w;
  if (n == 3) {
    constexpr double kPi6 = 1.90985931710274;  // 6/pi
    constexpr double kStqr = 1.04719755119660;  // pi/3
    result.p = std::max(0.0, kPi6 * (std::asin(std::sqrt(w)) - kStqr));
    result.p = std::min(result.p, 1.0);
    return result;
  }
  const double w1 = 1.0 - w;
  if (w1 <= 0.0) {
    result.p = 1.0;
    return result;
  }
  double y = std::log(w1);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly({-2.273, 0.459}, an);
    if (y >= gamma) {
      result.p = 1e-99;
      return result;
    }
    y = -std::log(gamma - y);
    mu = poly({0.5440, -0.39978, 0.025054, -6.714e-4}, an);
    sigma = std::exp(poly({1.3822, -0.77857, 0.062767, -0.0020322}, an));
  } else {
    const double ln_n = std::log(an);
    mu = poly({-1.5861, -0.31082, -0.083751, 0.0038915}, ln_n);
    sigma = std::exp(poly({-0.4803, -0.082676, 0.0030302}, ln_n));
  }
  result.p = special::normal_upper_tail((y - mu) / sigma);
  return result;
}

ConcentrationResult concentration(std::span<const double> values) {
  ConcentrationResult r;
  r.n = values.size();
  r.lorenz_points = lorenz(values);
  r.gini = gini(values);
  if (values.size() >= 3) r.skewness = skewness(values);
  if (values.size() >= 4) r.kurtosis = excess_kurtosis(values);
  if (values.size() >= 3 && values.size() <= 5000) {
    try {
      const auto sw = shapiro_wilk(values);
      r.shapiro_w = sw.w;
      r.shapiro_p = sw.p;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSample) throw;
    }
  }
  return r;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorCode::LengthMismatch,
                "series lengths differ: " + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()));
  if (x.size() < 3) throw Error(ErrorCode::TooFewSamples, "correlation needs n >= 3");
}

struct Sums {
  double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
};

Sums centered_sums(std::span<const double> x, std::span<const double> y) {
  Sums s;
  s.mx = mean_of(x);
  s.my = mean_of(y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - s.mx;
    const double dy = y[i] - s.my;
    s.sxx += dx * dx;
    s.syy += dy * dy;
    s.sxy += dx * dy;
  }
  return s;
}

double correlation_p(double r, std::size_t n) {
  if (std::fabs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n) - 2.0;
  const double t = r * std::sqrt(df / (1.0 - r * r));
  return std::clamp(special::student_t_two_sided_p(t, df), 0.0, 1.0);
}

AssociationResult pearson_unchecked(std::span<const double> x, std::span<const double> y,
                                    CorrelationMethod method) {
  const auto s = centered_sums(x, y);
  AssociationResult r;
  r.method = method;
  r.n = x.size();
  // A constant series has no defined correlation; report no association.
  if (s.sxx <= 0.0 || s.syy <= 0.0) {
    r.coefficient = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.coefficient = std::clamp(s.sxy / std::sqrt(s.sxx * s.syy), -1.0, 1.0);
  r.p_value = correlation_p(r.coefficient, r.n);
  return r;
}

}  // namespace

AssociationResult pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  return pearson_unchecked(x, y, CorrelationMethod::Pearson);
}

AssociationResult spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_unchecked(rx, ry, CorrelationMethod::Spearman);
}

AssociationResult correlate(std::span<const double> x, std::span<const double> y,
                            std::optional<CorrelationMethod> force_method) {
  check_pair(x, y);
  CorrelationMethod method = CorrelationMethod::Spearman;
  if (force_method) {
    method = *force_method;
  } else {
    try {
      if (shapiro_wilk(x).p > kNormalityAlpha && shapiro_wilk(y).p > kNormalityAlpha)
        method = CorrelationMethod::Pearson;
    } catch (const Error&) {
      // Degenerate or out-of-range samples are not treated as normal.
    }
  }
  return method == CorrelationMethod::Pearson ? pearson(x, y) : spearman(x, y);
}

AssociationResult ols(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto s = centered_sums(x, y);
  if (s.sxx <= 0.0) throw Error(ErrorCode::DegenerateX, "x has zero variance");
  AssociationResult r = pearson_unchecked(x, y, CorrelationMethod::Pearson);
  const double slope = s.sxy / s.sxx;
  const double intercept = s.my - slope * s.mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (intercept + slope * x[i]);
    sse += e * e;
  }
  const double df = static_cast<double>(x.size()) - 2.0;
  r.slope = slope;
  r.intercept = intercept;
  r.slope_se = std::sqrt(sse / df / s.sxx);
  r.r_squared = r.coefficient * r.coefficient;
  return r;
}

EvaluationResult evaluate_metric(const SetsByFile& experts_by_file, const SetsByFile& truth_by_file,
                                 Aggregation aggregation, expertise::Metric metric) {
  std::set<std::string> files;
  for (const auto& [path, _] : experts_by_file) files.insert(path);
  for (const auto& [path, _] : truth_by_file) files.insert(path);
  if (files.empty()) throw Error(ErrorCode::EmptyCorpus, "no files to evaluate");

  static const std::set<std::string> kEmpty;
  auto lookup = [](const SetsByFile& m, const std::string& path) -> const std::set<std::string>& {
    auto it = m.find(path);
    return it == m.end() ? kEmpty : it->second;
  };

  EvaluationResult r;
  r.metric = metric;
  r.aggregation = aggregation;
  r.files = files.size();
  double precision_sum = 0.0, recall_sum = 0.0;
  std::size_t precision_files = 0, recall_files = 0;
  for (const auto& path : files) {
    const auto& experts = lookup(experts_by_file, path);
    const auto& truth = lookup(truth_by_file, path);
    long tp = 0;
    for (const auto& dev : experts) tp += truth.count(dev) ? 1 : 0;
    const long fp = static_cast<long>(experts.size()) - tp;
    const long fn = static_cast<long>(truth.size()) - tp;
    r.tp += tp;
    r.fp += fp;
    r.fn += fn;
    if (!experts.empty()) {
      precision_sum += static_cast<double>(tp) / static_cast<double>(experts.size());
      ++precision_files;
    }
    if (!truth.empty()) {
      recall_sum += static_cast<double>(tp) / static_cast<double>(truth.size());
      ++recall_files;
    }
  }
  if (aggregation == Aggregation::Micro) {
    r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  } else {
    r.precision = precision_files ? precision_sum / static_cast<double>(precision_files) : 0.0;
    r.recall = recall_files ? recall_sum / static_cast<double>(recall_files) : 0.0;
  }
  return r;
}

VariabilityPartition partition_by_variability(const std::map<std::string, double>& pct_variable) {
  VariabilityPartition p;
  for (const auto& [name, pct] : pct_variable) {
    if (pct > kHighVariabilityPct) p.high.insert(name);
    else if (pct < kLowVariabilityPct) p.low.insert(name);
  }
  return p;
}

}  // namespace varexp::stats
