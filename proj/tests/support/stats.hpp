#pragma once

// Chi-squared distribution support for the statistical tests: regularized
// incomplete gamma via the standard series / continued-fraction pair.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace teststats {

inline double gamma_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// P(a, x): regularized lower incomplete gamma.
inline double reg_lower_gamma(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_contfrac(a, x);
}

inline double chi2_cdf(double x, double dof) {
  return reg_lower_gamma(dof / 2.0, x / 2.0);
}

// Upper tail p-value for a chi-squared statistic.
inline double chi2_pvalue(double statistic, double dof) {
  return 1.0 - chi2_cdf(statistic, dof);
}

// Goodness-of-fit statistic against given expected counts.
inline double chi2_statistic(std::span<const double> observed,
                             std::span<const double> expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double diff = observed[i] - expected[i];
    stat += diff * diff / expected[i];
  }
  return stat;
}

// Two-sample homogeneity statistic over shared category counts.
// dof = (#categories with any observations - 1).
inline double chi2_homogeneity(std::span<const double> counts_a,
                               std::span<const double> counts_b,
                               double* dof_out) {
  double total_a = 0.0, total_b = 0.0;
  for (double v : counts_a) total_a += v;
  for (double v : counts_b) total_b += v;
  const double total = total_a + total_b;

  double stat = 0.0;
  double used = 0.0;
  for (std::size_t i = 0; i < counts_a.size(); ++i) {
    const double row = counts_a[i] + counts_b[i];
    if (row == 0.0) continue;
    used += 1.0;
    const double ea = row * total_a / total;
    const double eb = row * total_b / total;
    stat += (counts_a[i] - ea) * (counts_a[i] - ea) / ea;
    stat += (counts_b[i] - eb) * (counts_b[i] - eb) / eb;
  }
  if (dof_out) *dof_out = used - 1.0;
  return stat;
}

}  // namespace teststats
