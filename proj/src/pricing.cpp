#include "mortfrac/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mortfrac/errors.hpp"
#include "mortfrac/numerics.hpp"
#include "mortfrac/parallel.hpp"

namespace mortfrac {

namespace {
double checked_exp(double exponent) {
  if (!std::isfinite(exponent) || std::abs(exponent) > 700.0)
    throw NumericalError("bond price exponent out of range: " + std::to_string(exponent));
  return std::exp(exponent);
}
}  // namespace

double zcb_price_t0(double m, double theta, double sigma, double alpha, double hurst, double r0, double horizon) {
  if (!(horizon > 0.0)) throw DomainError("zcb_price_t0: horizon must be positive");
  if (!(theta > 0.0)) throw DomainError("zcb_price_t0: theta must be positive");
  if (!(hurst >= 0.5 && hurst < 0.999)) throw DomainError("zcb_price_t0: hurst must lie in [0.5, 0.999)");
  if (sigma < 0.0 || alpha < 0.0) throw DomainError("zcb_price_t0: sigma and alpha must be nonnegative");
  const double T = horizon;
  const double eT = std::exp(-theta * T);
  const double level = m / theta;
  const double e1 = -level * T + (level - r0) * (1.0 - eT) / theta;
  if (sigma == 0.0) return checked_exp(e1);

  const double s2 = sigma * sigma;
  const double a2 = hurst == 0.5 ? alpha * alpha + 1.0 : alpha * alpha;
  const double th2 = theta * theta;
  const double e2 = a2 * s2 / (2.0 * th2) * (-eT * eT / (2.0 * theta) + 2.0 * eT / theta + T - 1.5 / theta);
  if (hurst == 0.5) return checked_exp(e1 + e2);

  const double u = 2.0 * hurst - 1.0;
  const double p2 = 2.0 * hurst - 2.0;
  auto pw = [](double x, double e) { return x > 0.0 ? std::pow(x, e) : 0.0; };
  // Growing exponentials carry their e^{-theta T} prefactors inside the integrand.
  const double i1 = num::integrate([&](double x) { return pw(x, p2) * std::exp(theta * (x - 2.0 * T)); }, 0.0, T);
  const double i2 = num::integrate([&](double x) { return pw(x, p2) * std::exp(-theta * x); }, 0.0, T);
  const double i3 = num::integrate([&](double x) { return pw(x, u) * std::exp(-theta * x); }, 0.0, T);
  const double i4 = num::integrate([&](double x) { return pw(x, u) * std::exp(theta * (x - T)); }, 0.0, T);
  const double alpha_h = hurst * u;
  const double e3 = s2 * alpha_h / th2 *
                    (-i1 / (2.0 * theta) + i2 / (2.0 * theta) - i3 / u - i4 / u + std::pow(T, 2.0 * hurst) / (2.0 * hurst * u));
  return checked_exp(e1 + e2 + e3);
}

double zcb_fractional_exponent(double theta, double sigma, double hurst, double horizon) {
  if (!(horizon > 0.0) || !(theta > 0.0)) throw DomainError("zcb_fractional_exponent: bad arguments");
  const double T = horizon;
  const double u = 2.0 * hurst - 1.0;
  auto pw = [](double x, double e) { return x > 0.0 ? std::pow(x, e) : 0.0; };
  const double i3 = num::integrate([&](double x) { return pw(x, u) * std::exp(-theta * x); }, 0.0, T);
  const double i4 = num::integrate([&](double x) { return pw(x, u) * std::exp(theta * (x - T)); }, 0.0, T);
  const double eT = std::exp(-theta * T);
  return sigma * sigma / (theta * theta) *
         (0.5 * std::pow(T, 2.0 * hurst) - 0.5 * hurst * i3 - hurst * i4 * (1.0 - 0.5 * eT));
}

double zcb_price_model(const ModelParams& p, const std::optional<RiskPremiums>& rp, double horizon) {
  const ModelParams q = rp ? pricing_params(p, *rp) : p;
  return zcb_price_t0(q.m1 / 100.0, q.theta1, q.sigma1 / 100.0, q.alpha1, q.h1, q.r0 / 100.0, horizon);
}

double path_discount_factor(std::span<const double> rate_percent, double dt, std::size_t upto_steps) {
  if (upto_steps >= rate_percent.size()) throw DomainError("discount horizon beyond simulated path");
  double s = 0.0;
  for (std::size_t k = 0; k < upto_steps; ++k) s += 0.5 * (rate_percent[k] + rate_percent[k + 1]);
  return std::exp(-s * dt / 100.0);
}

std::vector<double> mc_discount_factors(const PathSet& paths, double upto) {
  const double steps_real = upto / paths.dt;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * std::max(1.0, steps_real))
    throw DomainError("mc_discount_factors: horizon not on the simulation grid");
  if (steps > paths.n_steps()) throw DomainError("mc_discount_factors: horizon beyond simulated paths");
  std::vector<double> df(paths.n_paths());
  const auto cols = static_cast<std::size_t>(paths.rate_paths.cols());
  for (std::size_t i = 0; i < df.size(); ++i) {
    std::span<const double> row(paths.rate_paths.row(static_cast<Eigen::Index>(i)).data(), cols);
    df[i] = path_discount_factor(row, paths.dt, steps);
  }
  return df;
}

std::string to_string(IndexRule r) {
  switch (r) {
    case IndexRule::Point: return "point";
    case IndexRule::AnnualAverage: return "annual_average";
    case IndexRule::AnnualMax: return "annual_max";
  }
  return "annual_average";
}

IndexRule index_rule_from_string(const std::string& s) {
  if (s == "point") return IndexRule::Point;
  if (s == "annual_average" || s == "average") return IndexRule::AnnualAverage;
  if (s == "annual_max" || s == "max") return IndexRule::AnnualMax;
  throw FormatError("unknown index rule: " + s);
}

void BondSpec::validate() const {
  if (!(face > 0.0)) throw DomainError("face must be positive");
  if (!(coupon_rate >= 0.0)) throw DomainError("coupon rate must be nonnegative");
  if (pay_freq < 1 || kWeeksPerYear % pay_freq != 0) throw DomainError("payment frequency must divide 52");
  if (!(term > 0.0)) throw DomainError("term must be positive");
  const double k = term * pay_freq;
  if (std::abs(k - std::round(k)) > 1e-9) throw DomainError("term times payment frequency must be an integer");
  if (!(exhaustion > attachment)) throw DomainError("exhaustion must exceed attachment");
}

std::size_t BondSpec::n_payments() const { return static_cast<std::size_t>(std::llround(term * pay_freq)); }
std::size_t BondSpec::weeks_per_period() const { return static_cast<std::size_t>(kWeeksPerYear / pay_freq); }
std::size_t BondSpec::n_weeks() const { return n_payments() * weeks_per_period(); }

void mortality_index_into(std::span<const double> weekly, const BondSpec& spec, std::span<double> out) {
  const std::size_t K = spec.n_payments();
  const std::size_t w = spec.weeks_per_period();
  if (weekly.size() < K * w + 1)
    throw InsufficientDataError("mortality path covers " + std::to_string(weekly.size() - 1) + " weeks, need " +
                                std::to_string(K * w));
  if (out.size() != K) throw DomainError("mortality_index: output size mismatch");
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t first = k * w + 1;
    const std::size_t last = (k + 1) * w;
    switch (spec.index_rule) {
      case IndexRule::Point:
        out[k] = weekly[last];
        break;
      case IndexRule::AnnualAverage: {
        double s = 0.0;
        for (std::size_t j = first; j <= last; ++j) s += weekly[j];
        out[k] = s / static_cast<double>(w);
        break;
      }
      case IndexRule::AnnualMax:
        out[k] = *std::max_element(weekly.begin() + static_cast<std::ptrdiff_t>(first),
                                   weekly.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        break;
    }
  }
}

MortalityIndexSeries mortality_index(std::span<const double> weekly, const BondSpec& spec) {
  MortalityIndexSeries s;
  s.rule = spec.index_rule;
  s.values.resize(spec.n_payments());
  mortality_index_into(weekly, spec, s.values);
  return s;
}

double prf(std::span<const double> index, double a, double b) {
  if (!(b > a)) throw DomainError("prf: exhaustion must exceed attachment");
  double s = 0.0;
  for (double v : index) s += std::max(v - a, 0.0) - std::max(v - b, 0.0);
  return std::min(1.0, s / (b - a));
}

void add_baseline(std::span<const double> excess, std::span<const double> baseline, std::span<double> out, int start_week) {
  if (baseline.size() != static_cast<std::size_t>(kWeeksPerYear)) throw DomainError("baseline must have 52 entries");
  if (out.size() != excess.size()) throw DomainError("add_baseline: size mismatch");
  if (start_week < 1 || start_week > kWeeksPerYear) throw DomainError("start week must lie in 1..52");
  for (std::size_t j = 0; j < excess.size(); ++j) {
    // t = 0 carries the week preceding the first simulated week.
    const long wk = (static_cast<long>(start_week) - 2 + static_cast<long>(j)) % kWeeksPerYear;
    const auto idx = static_cast<std::size_t>((wk + kWeeksPerYear) % kWeeksPerYear);
    out[j] = excess[j] + baseline[idx];
  }
}

namespace {
std::size_t sim_steps(const BondSpec& spec) { return spec.n_weeks(); }
double sim_horizon(const BondSpec& spec) { return static_cast<double>(spec.n_weeks()) / kWeeksPerYear; }
}  // namespace

PayoutDistribution bond_payout_paths(const ModelParams& p, const std::optional<RiskPremiums>& rp, const BondSpec& spec,
                                     std::span<const double> baseline, std::size_t n_paths, std::uint64_t seed,
                                     const PricingOptions& opt) {
  spec.validate();
  const std::size_t K = spec.n_payments();
  const std::size_t w = spec.weeks_per_period();
  const double dt = 1.0 / kWeeksPerYear;
  PayoutDistribution out;
  out.principal_pv.resize(n_paths);
  out.total_pv.resize(n_paths);
  out.prf.resize(n_paths);
  out.discount_curve.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    out.discount_curve[k] = zcb_price_model(p, rp, static_cast<double>((k + 1) * w) / kWeeksPerYear);
  const double coupon = spec.coupon_rate * spec.face / spec.pay_freq;

  SimOptions so = opt.sim;
  so.rates = true;
  so.mortality = !opt.disable_prf;
  visit_paths(p, rp, n_paths, sim_steps(spec), sim_horizon(spec), seed,
              [&](std::size_t i, std::span<const double> r, std::span<const double> mu) {
                double reduction = 0.0;
                if (!opt.disable_prf) {
                  std::vector<double> weekly(mu.size());
                  add_baseline(mu, baseline, weekly, opt.start_week);
                  std::vector<double> idx(K);
                  mortality_index_into(weekly, spec, idx);
                  reduction = prf(idx, spec.attachment, spec.exhaustion);
                }
                double coupons = 0.0;
                double df = 1.0;
                for (std::size_t k = 0; k < K; ++k) {
                  df = path_discount_factor(r, dt, (k + 1) * w);
                  coupons += coupon * df;
                }
                out.prf[i] = reduction;
                out.principal_pv[i] = spec.face * (1.0 - reduction) * df;
                out.total_pv[i] = out.principal_pv[i] + coupons;
              },
              so);
  return out;
}

CouponBatch simulate_coupon_batch(const ModelParams& p, const RiskPremiums& rp, const BondSpec& spec,
                                  std::span<const double> baseline, std::size_t n_paths, std::uint64_t seed,
                                  const PricingOptions& opt) {
  spec.validate();
  CouponBatch b;
  const std::size_t K = spec.n_payments();
  const std::size_t w = spec.weeks_per_period();
  const double dt = 1.0 / kWeeksPerYear;
  b.n_paths = n_paths;
  b.n_periods = K;
  b.index.assign(n_paths * K, 0.0);
  b.discount_T.resize(n_paths);
  b.discount_curve.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    b.discount_curve[k] = zcb_price_model(p, rp, static_cast<double>((k + 1) * w) / kWeeksPerYear);
  b.zcb_T = b.discount_curve.back();
  b.annuity = num::pairwise_sum(b.discount_curve) / spec.pay_freq;

  const std::vector<double> d = drift_sensitivity(p.theta2, dt, sim_steps(spec), opt.sim.scheme);
  b.index_shift.resize(K);
  BondSpec shift_spec = spec;
  if (spec.index_rule == IndexRule::AnnualMax) {
    b.shift_exact = false;
    shift_spec.index_rule = IndexRule::AnnualAverage;
  }
  mortality_index_into(d, shift_spec, b.index_shift);

  SimOptions so = opt.sim;
  so.rates = true;
  so.mortality = !opt.disable_prf;
  visit_paths(p, rp, n_paths, sim_steps(spec), sim_horizon(spec), seed,
              [&](std::size_t i, std::span<const double> r, std::span<const double> mu) {
                if (!opt.disable_prf) {
                  std::vector<double> weekly(mu.size());
                  add_baseline(mu, baseline, weekly, opt.start_week);
                  mortality_index_into(weekly, spec, std::span<double>(b.index.data() + i * K, K));
                }
                b.discount_T[i] = path_discount_factor(r, dt, K * w);
              },
              so);
  if (opt.disable_prf) {
    // An index far below any attachment keeps the reduction at zero.
    std::fill(b.index.begin(), b.index.end(), -std::numeric_limits<double>::infinity());
  }
  return b;
}

double coupon_from_batch(const CouponBatch& batch, double a, double b, double dm2) {
  const std::size_t K = batch.n_periods;
  std::vector<double> terms(batch.n_paths);
  std::vector<double> idx(K);
  for (std::size_t i = 0; i < batch.n_paths; ++i) {
    for (std::size_t k = 0; k < K; ++k) idx[k] = batch.index[i * K + k] + dm2 * batch.index_shift[k];
    terms[i] = prf(idx, a, b) * batch.discount_T[i];
  }
  const double expected = batch.n_paths ? num::pairwise_sum(terms) / static_cast<double>(batch.n_paths) : 0.0;
  return (1.0 - batch.zcb_T + expected) / batch.annuity;
}

double fair_coupon(const ModelParams& p, const RiskPremiums& rp, const BondSpec& spec, std::span<const double> baseline,
                   std::size_t n_paths, std::uint64_t seed, const PricingOptions& opt) {
  const CouponBatch batch = simulate_coupon_batch(p, rp, spec, baseline, n_paths, seed, opt);
  return coupon_from_batch(batch, spec.attachment, spec.exhaustion);
}

RiskReport risk_measures(std::span<const double> samples, std::span<const double> levels) {
  if (samples.size() < 100) throw InsufficientDataError("risk_measures needs at least 100 samples");
  static const double default_levels[] = {0.05, 0.01};
  if (levels.empty()) levels = default_levels;
  RiskReport rep;
  rep.mean = num::mean(samples);
  rep.std = num::stddev(samples);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  for (double q : levels) {
    TailMeasure t;
    t.level = q;
    t.var = num::quantile_linear_sorted(sorted, q);
    const auto end = std::upper_bound(sorted.begin(), sorted.end(), t.var);
    const std::span<const double> tail(sorted.data(), static_cast<std::size_t>(end - sorted.begin()));
    t.cte = tail.empty() ? t.var : num::mean(tail);
    rep.tails.push_back(t);
  }
  return rep;
}

LossMetrics loss_metrics(std::span<const double> prf_values) {
  if (prf_values.empty()) throw InsufficientDataError("loss_metrics: no samples");
  LossMetrics lm;
  std::size_t hits = 0;
  for (double v : prf_values)
    if (v > 0.0) ++hits;
  const double n = static_cast<double>(prf_values.size());
  lm.pfl = static_cast<double>(hits) / n;
  lm.el = num::pairwise_sum(prf_values) / n;
  if (hits > 0) lm.cel = lm.el / lm.pfl;
  return lm;
}

}  // namespace mortfrac
