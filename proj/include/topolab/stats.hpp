#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace topolab::stats {

/// Pairwise (cascade) summation; the result depends only on the order of
/// the input.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);
/// Standard error of the mean (sample standard deviation / sqrt(n)).
double standard_error(std::span<const double> values);

struct TestResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Two-sample chi-square test of homogeneity on binned counts. Bins empty in
/// both samples are dropped.
TestResult chi_square_two_sample(std::span<const double> a, std::span<const double> b);

/// Chi-square goodness of fit of counts against probabilities.
TestResult chi_square_gof(std::span<const double> counts, std::span<const double> probs);

/// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// Two-sample Kolmogorov-Smirnov test (asymptotic p-value with the
/// Stephens small-sample correction).
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// One-sample KS test against a continuous CDF.
TestResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
  /// 95% confidence interval for the slope (Student t, n-2 dof).
  double slope_lo = 0.0;
  double slope_hi = 0.0;
};

/// Ordinary least squares y = intercept + slope x; needs at least 3 points.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace topolab::stats
