#pragma once

namespace varexp::stats::special {

double normal_cdf(double x);
double normal_upper_tail(double x);

/// Inverse standard normal CDF (Wichura's AS 241, ~1e-16 relative accuracy).
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b), evaluated by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value of a Student t statistic with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace varexp::stats::special
