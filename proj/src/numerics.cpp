#include "mortfrac/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <cstdio>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "mortfrac/errors.hpp"

namespace mortfrac::num {

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  if (!(a < b)) throw DomainError("integrate: lower bound above upper bound");
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  double err = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(f, a, b, rel_tol, &err, &l1);
  if (!std::isfinite(value)) throw NumericalError("integrate: non-finite result");
  // The estimate is the gap between the last two refinement levels, which
  // overstates the actual error once the rule has converged.
  const double scale = std::max(std::abs(value), l1 * 1e-6);
  if (err > std::max(100.0 * rel_tol * scale, 1e-300)) {
    throw NumericalError("integrate: tolerance not met (error estimate " + fmt(err) +
                         ", value " + fmt(value) + ")");
  }
  return value;
}

namespace {
double pairwise_sum_impl(const double* p, std::size_t n) {
  if (n <= 64) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum_impl(p, h) + pairwise_sum_impl(p + h, n - h);
}
}  // namespace

double pairwise_sum(std::span<const double> xs) { return pairwise_sum_impl(xs.data(), xs.size()); }

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InsufficientDataError("mean of empty sample");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw InsufficientDataError("variance needs at least two samples");
  const double m = mean(xs);
  std::vector<double> sq(xs.size());
  std::transform(xs.begin(), xs.end(), sq.begin(), [m](double x) { return (x - m) * (x - m); });
  return pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
}

double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

double quantile_linear_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InsufficientDataError("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level outside [0,1]");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile_linear(std::span<const double> xs, double q) {
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  return quantile_linear_sorted(s, q);
}

LinearFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InsufficientDataError("least_squares_line: need >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw NumericalError("least_squares_line: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

GoldenResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                     double x_tol, int max_iter) {
  if (!(lo < hi)) throw DomainError("golden_section_minimize: empty interval");
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  int it = 0;
  while (std::abs(b - a) > x_tol * std::max(1.0, std::abs(a) + std::abs(b)) && it < max_iter) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
    ++it;
  }
  GoldenResult r;
  if (fc <= fd) {
    r.x = c;
    r.fx = fc;
  } else {
    r.x = d;
    r.fx = fd;
  }
  // The endpoints are admissible too; golden section never evaluates them.
  const double flo = f(lo), fhi = f(hi);
  if (flo < r.fx) r = {lo, flo, it};
  if (fhi < r.fx) r = {hi, fhi, it};
  r.iterations = it;
  return r;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double x_tol) {
  const double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw NumericalError("find_root: no sign change on interval");
  std::uintmax_t max_iter = 300;
  auto tol = [x_tol](double a, double b) { return std::abs(b - a) <= x_tol * std::max(1.0, std::abs(a)); };
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
  return 0.5 * (a + b);
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw InsufficientDataError("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

namespace {
double kolmogorov_survival(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}
}  // namespace

KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InsufficientDataError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  return {d, kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)};
}

double autocovariance(std::span<const double> xs, std::size_t lag) {
  if (xs.size() <= lag) throw InsufficientDataError("autocovariance: series shorter than lag");
  const double m = mean(xs);
  double s = 0.0;
  for (std::size_t i = 0; i + lag < xs.size(); ++i) s += (xs[i] - m) * (xs[i + lag] - m);
  return s / static_cast<double>(xs.size());
}

}  // namespace mortfrac::num
