#include "topolab/stats.hpp"

#include "topolab/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>

namespace topolab::stats {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double standard_error(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  std::vector<double> sq(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) sq[k] = (values[k] - m) * (values[k] - m);
  const double var = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
  return std::sqrt(var / static_cast<double>(values.size()));
}

namespace {

double chi_square_survival(double statistic, double dof) {
  if (dof <= 0.0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

}  // namespace

TestResult chi_square_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("chi_square_two_sample: bin counts differ");
  double total_a = 0.0;
  double total_b = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    total_a += a[k];
    total_b += b[k];
  }
  if (!(total_a > 0.0 && total_b > 0.0)) throw DomainError("chi_square_two_sample: empty sample");
  const double total = total_a + total_b;
  TestResult r;
  std::size_t used = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double row = a[k] + b[k];
    if (row == 0.0) continue;
    ++used;
    const double ea = row * total_a / total;
    const double eb = row * total_b / total;
    r.statistic += (a[k] - ea) * (a[k] - ea) / ea + (b[k] - eb) * (b[k] - eb) / eb;
  }
  r.dof = used > 0 ? static_cast<double>(used - 1) : 0.0;
  r.p_value = chi_square_survival(r.statistic, r.dof);
  return r;
}

TestResult chi_square_gof(std::span<const double> counts, std::span<const double> probs) {
  if (counts.size() != probs.size()) throw DomainError("chi_square_gof: size mismatch");
  double total = 0.0;
  for (double c : counts) total += c;
  TestResult r;
  std::size_t used = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double expected = total * probs[k];
    if (expected <= 0.0) {
      if (counts[k] > 0.0) r.statistic = INFINITY;
      continue;
    }
    ++used;
    r.statistic += (counts[k] - expected) * (counts[k] - expected) / expected;
  }
  r.dof = used > 0 ? static_cast<double>(used - 1) : 0.0;
  r.p_value = std::isinf(r.statistic) ? 0.0 : chi_square_survival(r.statistic, r.dof);
  return r;
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] == x) ++ia;
    while (ib < b.size() && b[ib] == x) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double root = std::sqrt(ne);
  TestResult r;
  r.statistic = d;
  r.dof = ne;
  r.p_value = kolmogorov_q((root + 0.12 + 0.11 / root) * d);
  return r;
}

TestResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw DomainError("ks_one_sample: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double f = cdf(samples[k]);
    d = std::max({d, std::abs(static_cast<double>(k + 1) / n - f), std::abs(f - static_cast<double>(k) / n)});
  }
  const double root = std::sqrt(n);
  TestResult r;
  r.statistic = d;
  r.dof = n;
  r.p_value = kolmogorov_q((root + 0.12 + 0.11 / root) * d);
  return r;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw DomainError("fit_line: need at least three paired points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_line: x values are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - fit.intercept - fit.slope * x[k];
    sse += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
  boost::math::students_t dist(n - 2.0);
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  fit.slope_lo = fit.slope - q * fit.slope_stderr;
  fit.slope_hi = fit.slope + q * fit.slope_stderr;
  return fit;
}

}  // namespace topolab::stats
