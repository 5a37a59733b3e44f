#include "mortfrac/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mortfrac/errors.hpp"
#include "mortfrac/numerics.hpp"

namespace mortfrac {

double expected_rs(std::size_t N) {
  if (N < 2) throw DomainError("expected_rs: N must be at least 2");
  const double n = static_cast<double>(N);
  double s = 0.0;
  for (std::size_t i = 1; i < N; ++i) s += std::sqrt((n - static_cast<double>(i)) / static_cast<double>(i));
  const double ratio = N <= 340 ? std::exp(std::lgamma((n - 1.0) / 2.0) - std::lgamma(n / 2.0)) / std::sqrt(std::numbers::pi)
                                : 1.0 / std::sqrt(n * std::numbers::pi / 2.0);
  return (n - 0.5) / n * ratio * s;
}

double rescaled_range(std::span<const double> x, std::size_t N) {
  if (N < 2 || N > x.size()) throw DomainError("rescaled_range: bad block size");
  const std::size_t blocks = x.size() / N;
  double acc = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::span<const double> blk = x.subspan(b * N, N);
    const double mean = std::accumulate(blk.begin(), blk.end(), 0.0) / static_cast<double>(N);
    double z = 0.0, zmax = 0.0, zmin = 0.0, ss = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      const double y = blk[j] - mean;
      z += y;
      ss += y * y;
      zmax = std::max(zmax, z);
      zmin = std::min(zmin, z);
    }
    const double s = std::sqrt(ss / static_cast<double>(N));
    if (s == 0.0 || !(s > 1e-12 * std::abs(mean))) throw InsufficientDataError("degenerate series: a block has zero variance");
    acc += (zmax - zmin) / s;
  }
  return acc / static_cast<double>(blocks);
}

HurstResult estimate_hurst_rs(std::span<const double> x, const RsOptions& opt) {
  if (x.size() < 64) throw InsufficientDataError("estimate_hurst_rs needs at least 64 observations");
  HurstResult res;
  std::vector<double> lx;
  for (std::size_t N = opt.min_block; N <= x.size() / opt.max_block_divisor; N *= 2) {
    const double rs = rescaled_range(x, N);
    double y = std::log(rs);
    if (opt.anis_lloyd) y -= std::log(expected_rs(N));
    res.block_sizes.push_back(static_cast<double>(N));
    lx.push_back(std::log(static_cast<double>(N)));
    res.log_rs.push_back(y);
  }
  if (lx.size() < 2) throw InsufficientDataError("estimate_hurst_rs: fewer than two block sizes");
  const num::LinearFit fit = num::least_squares_line(lx, res.log_rs);
  res.slope = fit.slope;
  res.intercept = fit.intercept;
  res.r_squared = fit.r_squared;
  const double h = opt.anis_lloyd ? 0.5 + fit.slope : fit.slope;
  res.h = std::clamp(h, 0.01, 0.99);
  res.clipped = res.h != h;
  return res;
}

PowerVariations power_variations(const ObservedSeries& x) {
  const auto& v = x.values;
  if (v.size() < 3) throw InsufficientDataError("power_variations needs at least 3 observations");
  const std::size_t N = v.size() - 1;
  PowerVariations pv;
  for (std::size_t i = 1; i <= N; ++i) pv.v += (v[i] - v[i - 1]) * (v[i] - v[i - 1]);
  double u = 0.0;
  for (std::size_t i = 1; i < N; ++i) u += (v[i + 1] - v[i - 1]) * (v[i + 1] - v[i - 1]);
  pv.u = u * static_cast<double>(N) / static_cast<double>(N - 1);
  return pv;
}

AlphaSigma estimate_alpha_sigma(const ObservedSeries& x, double h, AlphaSigmaMethod method) {
  if (!(h > 0.5 && h < 1.0)) throw DomainError("estimate_alpha_sigma: h must lie in (0.5, 1)");
  const PowerVariations pv = power_variations(x);
  const double n = x.n;
  const double T = x.horizon();
  const double diff = pv.u - 2.0 * pv.v;
  if (std::abs(diff) < 1e-12 * pv.v || pv.v == 0.0)
    throw NumericalError("estimate_alpha_sigma: ill-conditioned (U - 2V vanishes)");
  AlphaSigma out;
  if (method == AlphaSigmaMethod::AsPrinted) {
    const double a = 2.0 * (std::pow(2.0, h + 0.5) - 2.0) * pv.v / (std::pow(n, h - 0.5) * diff);
    out.alpha = std::abs(a);
    const double denom = out.alpha * out.alpha * T + T * std::pow(n, 1.0 - 2.0 * h) + 2.0 * out.alpha * T * std::pow(n, 0.5 - h);
    out.sigma = std::sqrt(pv.v / denom);
    return out;
  }
  const double frac_scale = std::pow(n, 1.0 - 2.0 * h);
  const double s2 = diff / (T * frac_scale * (std::pow(2.0, 2.0 * h) - 2.0));
  if (!(s2 > 0.0)) throw NumericalError("estimate_alpha_sigma: U - 2V is negative, no fractional component detected");
  double a2 = pv.v / (s2 * T) - frac_scale;
  if (a2 < 0.0) {
    a2 = 0.0;
    out.alpha_clipped = true;
  }
  out.alpha = std::sqrt(a2);
  out.sigma = std::sqrt(s2);
  return out;
}

namespace {
struct LsSums {
  double N = 0, sx = 0, sxx = 0, sd = 0, sdx = 0;
};
LsSums ls_sums(const std::vector<double>& v) {
  LsSums s;
  s.N = static_cast<double>(v.size() - 1);
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double x = v[i - 1];
    const double d = v[i] - v[i - 1];
    s.sx += x;
    s.sxx += x * x;
    s.sd += d;
    s.sdx += d * x;
  }
  return s;
}
}  // namespace

Drift estimate_drift_ls(const ObservedSeries& x) {
  if (x.values.size() < 3) throw InsufficientDataError("estimate_drift_ls needs at least 3 observations");
  const LsSums s = ls_sums(x.values);
  const double D = s.N * s.sxx - s.sx * s.sx;
  if (!(std::abs(D) > 1e-14 * std::max(1e-300, s.N * s.sxx))) throw NumericalError("estimate_drift_ls: singular normal equations");
  Drift d;
  d.m = x.n * (s.sd * s.sxx - s.sdx * s.sx) / D;
  d.theta = x.n * (s.sd * s.sx - s.N * s.sdx) / D;
  return d;
}

Drift estimate_theta_ergodic(const ObservedSeries& x, double h, double sigma, double long_term_mean) {
  if (x.values.size() < 3) throw InsufficientDataError("estimate_theta_ergodic needs at least 3 observations");
  if (!(sigma > 0.0)) throw DomainError("estimate_theta_ergodic: sigma must be positive");
  if (!(h > 0.0 && h < 1.0)) throw DomainError("estimate_theta_ergodic: h must lie in (0,1)");
  const double N = static_cast<double>(x.values.size() - 1);
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 1; i < x.values.size(); ++i) {
    s += x.values[i];
    ss += x.values[i] * x.values[i];
  }
  const double ratio = (N * ss - s * s) / (N * N * sigma * sigma * h * std::tgamma(2.0 * h));
  if (!(ratio > 0.0)) throw DomainError("estimate_theta_ergodic: nonpositive sample variance ratio");
  Drift d;
  d.theta = std::pow(ratio, -1.0 / (2.0 * h));
  d.m = d.theta * long_term_mean;
  return d;
}

RhoEstimate estimate_rho(const ObservedSeries& r, const ObservedSeries& mu, const FittedComponent& fr,
                         const FittedComponent& fm, RhoNormalization norm) {
  if (r.values.size() != mu.values.size()) throw DomainError("estimate_rho: series lengths differ");
  if (r.values.size() < 3) throw InsufficientDataError("estimate_rho needs at least 3 observations");
  const double denom0 = fr.sigma * fm.sigma * fr.alpha * fm.alpha;
  if (denom0 == 0.0) throw NumericalError("estimate_rho: zero sigma or alpha in the normalisation");
  const std::size_t N = r.values.size() - 1;
  const double n = r.n;
  std::vector<double> er(N), em(N);
  for (std::size_t i = 1; i <= N; ++i) {
    er[i - 1] = r.values[i] - r.values[i - 1] - (fr.m - fr.theta * r.values[i - 1]) / n;
    em[i - 1] = mu.values[i] - mu.values[i - 1] - (fm.m - fm.theta * mu.values[i - 1]) / n;
  }
  const double mr = num::mean(er), mm = num::mean(em);
  std::vector<double> prod(N);
  for (std::size_t i = 0; i < N; ++i) prod[i] = (er[i] - mr) * (em[i] - mm);
  const double cross = num::pairwise_sum(prod);
  RhoEstimate out;
  out.raw = norm == RhoNormalization::PerYear ? cross / (denom0 * r.horizon()) : n * cross / denom0;
  out.rho = std::clamp(out.raw, -1.0, 1.0);
  out.clipped = out.rho != out.raw;
  return out;
}

namespace {
template <class F>
auto step(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const EstimationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EstimationError(name, e.what());
  }
}

std::vector<double> increments(const std::vector<double>& v) {
  std::vector<double> d(v.size() > 0 ? v.size() - 1 : 0);
  for (std::size_t i = 1; i < v.size(); ++i) d[i - 1] = v[i] - v[i - 1];
  return d;
}

HurstResult hurst_for(const ObservedSeries& x, const PhysicalOptions& opt) {
  if (opt.hurst_input == HurstInput::Levels) return estimate_hurst_rs(x.values, opt.rs);
  const std::vector<double> d = increments(x.values);
  return estimate_hurst_rs(d, opt.rs);
}
}  // namespace

EstimationReport calibrate_physical(const ObservedSeries& r, const ObservedSeries& mu, double long_term_mean_rate,
                                    const PhysicalOptions& opt) {
  EstimationReport rep;
  if (r.values.size() != mu.values.size()) throw EstimationError("input", "rate and mortality series lengths differ");
  if (r.values.size() < 64) throw EstimationError("input", "at least 64 aligned observations are required");
  rep.n_obs = r.values.size();

  auto& a = rep.rate;
  a.rs = step("step1_hurst_rate", [&] { return hurst_for(r, opt); });
  a.h = a.rs.h;
  const AlphaSigma as1 = step("step2_alpha_sigma_rate", [&] { return estimate_alpha_sigma(r, a.h, opt.alpha_sigma); });
  a.alpha = as1.alpha;
  a.sigma = as1.sigma;
  a.alpha_clipped = as1.alpha_clipped;
  a.pv = power_variations(r);
  const Drift d1 = step("step3_drift_rate", [&] { return estimate_theta_ergodic(r, a.h, a.sigma, long_term_mean_rate); });
  a.m = d1.m;
  a.theta = d1.theta;

  auto& b = rep.mortality;
  b.rs = step("step4_hurst_mortality", [&] { return hurst_for(mu, opt); });
  b.h = b.rs.h;
  const AlphaSigma as2 = step("step4_alpha_sigma_mortality", [&] { return estimate_alpha_sigma(mu, b.h, opt.alpha_sigma); });
  b.alpha = as2.alpha;
  b.sigma = as2.sigma;
  b.alpha_clipped = as2.alpha_clipped;
  b.pv = power_variations(mu);
  const Drift d2 = step("step5_drift_mortality", [&] { return estimate_drift_ls(mu); });
  b.m = d2.m;
  b.theta = d2.theta;

  rep.rho = step("step6_rho", [&] {
    return estimate_rho(r, mu, {a.alpha, a.sigma, a.m, a.theta}, {b.alpha, b.sigma, b.m, b.theta}, opt.rho_norm);
  });
  return rep;
}

}  // namespace mortfrac
