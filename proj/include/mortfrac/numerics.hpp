#pragma once

#include <functional>
#include <span>
#include <vector>

namespace mortfrac::num {

double normal_cdf(double x);

/// Adaptive quadrature on [a, b] (tanh-sinh, robust to integrable endpoint
/// singularities such as x^{2H-2} at 0). Throws NumericalError when the
/// estimated relative error exceeds `rel_tol`.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-10);

/// Fixed-order pairwise summation; the result does not depend on thread count.
double pairwise_sum(std::span<const double> xs);
double mean(std::span<const double> xs);
/// Unbiased (n-1) sample variance.
double variance(std::span<const double> xs);
double stddev(std::span<const double> xs);

/// Empirical q-quantile with linear interpolation between order statistics
/// (h = (n-1) q, value x_(floor h) + frac(h) (x_(floor h + 1) - x_(floor h))).
double quantile_linear(std::span<const double> xs, double q);
double quantile_linear_sorted(std::span<const double> sorted, double q);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LinearFit least_squares_line(std::span<const double> x, std::span<const double> y);

struct GoldenResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
};
/// Golden-section minimisation of a unimodal function on [lo, hi].
GoldenResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                     double x_tol = 1e-12, int max_iter = 500);

/// Root of f on [lo, hi]; requires a sign change (TOMS 748).
double find_root(const std::function<double(double)>& f, double lo, double hi, double x_tol = 1e-14);

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

struct KsTwoSample {
  double statistic = 0.0;
  double p_value = 0.0;
};
/// Two-sample KS test with the asymptotic Kolmogorov distribution for the p-value.
KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Sample autocovariance at the given lag of a single series (divides by n).
double autocovariance(std::span<const double> xs, std::size_t lag);

}  // namespace mortfrac::num
