#include "mortfrac/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "mortfrac/errors.hpp"
#include "mortfrac/numerics.hpp"

namespace mortfrac {

void MarketQuote::validate() const {
  if (!(prob_first_loss >= 0.0 && prob_first_loss <= 1.0)) throw DomainError("probability of first loss outside [0,1]");
  if (!(expected_loss >= 0.0 && expected_loss <= prob_first_loss))
    throw DomainError("expected loss must lie in [0, probability of first loss]");
  if (!(term > 0.0)) throw DomainError("quote term must be positive");
  if (!std::isfinite(target_yield) || target_yield <= -1.0) throw DomainError("target yield must exceed -100%");
}

IndexSample simulate_index_sample(const ModelParams& p, const std::optional<RiskPremiums>& rp, const BondSpec& spec,
                                  std::span<const double> baseline, std::size_t n_paths, std::uint64_t seed,
                                  const PricingOptions& opt) {
  spec.validate();
  IndexSample s;
  s.n_paths = n_paths;
  s.n_periods = spec.n_payments();
  s.values.resize(n_paths * s.n_periods);
  SimOptions so = opt.sim;
  so.rates = false;
  so.mortality = true;
  const double horizon = static_cast<double>(spec.n_weeks()) / kWeeksPerYear;
  visit_paths(p, rp, n_paths, spec.n_weeks(), horizon, seed,
              [&](std::size_t i, std::span<const double>, std::span<const double> mu) {
                std::vector<double> weekly(mu.size());
                add_baseline(mu, baseline, weekly, opt.start_week);
                mortality_index_into(weekly, spec, std::span<double>(s.values.data() + i * s.n_periods, s.n_periods));
              },
              so);
  return s;
}

double calibrate_gamma1(const ModelParams& p, const MarketQuote& quote, double lo, double hi) {
  quote.validate();
  const double target = std::pow(1.0 + quote.target_yield, -quote.term);
  auto objective = [&](double g) {
    RiskPremiums rp;
    rp.gamma1 = g;
    return zcb_price_model(p, rp, quote.term) - target;
  };
  // Scan for a sign change, then refine.
  const int n_scan = 400;
  double prev_x = lo, prev_f = objective(lo);
  if (prev_f == 0.0) return lo;
  for (int k = 1; k <= n_scan; ++k) {
    const double x = lo + (hi - lo) * k / n_scan;
    const double f = objective(x);
    if (f == 0.0) return x;
    if ((f > 0.0) != (prev_f > 0.0)) return num::find_root(objective, prev_x, x, 1e-14);
    prev_x = x;
    prev_f = f;
  }
  throw NumericalError("calibrate_gamma1: no bracket on [" + std::to_string(lo) + ", " + std::to_string(hi) +
                       "]; the bond price never reaches the target (1+i)^-T = " + std::to_string(target));
}

double calibrate_attachment(const IndexSample& sample, double pfl, AttachmentRule rule) {
  if (sample.n_paths == 0 || sample.n_periods == 0) throw InsufficientDataError("calibrate_attachment: empty sample");
  if (!(pfl >= 0.0 && pfl <= 1.0)) throw DomainError("calibrate_attachment: pfl outside [0,1]");
  if (rule == AttachmentRule::Pooled) return num::quantile_linear(sample.values, 1.0 - pfl);
  std::vector<double> maxima(sample.n_paths);
  for (std::size_t i = 0; i < sample.n_paths; ++i) {
    const auto r = sample.row(i);
    maxima[i] = *std::max_element(r.begin(), r.end());
  }
  return num::quantile_linear(maxima, 1.0 - pfl);
}

double conditional_mean_prf(const IndexSample& sample, double a, double b) {
  double s = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sample.n_paths; ++i) {
    const auto r = sample.row(i);
    if (*std::max_element(r.begin(), r.end()) > a) {
      s += prf(r, a, b);
      ++hits;
    }
  }
  if (hits == 0) throw InsufficientDataError("no simulated path exceeds the attachment point");
  return s / static_cast<double>(hits);
}

double calibrate_exhaustion(const IndexSample& sample, double attachment, double el, double pfl) {
  if (!(pfl > 0.0)) throw DomainError("calibrate_exhaustion: pfl must be positive");
  if (el > pfl) throw DomainError("calibrate_exhaustion: infeasible, el exceeds pfl");
  const double target = el / pfl;
  const double a = attachment;
  double max_excess = 0.0;
  for (double v : sample.values) max_excess = std::max(max_excess, v - a);
  if (max_excess <= 0.0) throw InsufficientDataError("no simulated path exceeds the attachment point");
  const double b_min = a + max_excess * 1e-12;
  auto g = [&](double b) { return conditional_mean_prf(sample, a, b) - target; };
  const double g_min = g(b_min);
  if (g_min < 0.0) throw NumericalError("calibrate_exhaustion: infeasible, even b -> a+ gives a conditional mean below el/pfl");
  if (g_min == 0.0 || target >= 1.0) return b_min;
  double hi = a + std::max(9.0 * std::abs(a), max_excess);
  while (g(hi) > 0.0) {
    hi = a + 2.0 * (hi - a);
    if (!std::isfinite(hi)) throw NumericalError("calibrate_exhaustion: no bracket");
  }
  // The conditional mean is piecewise smooth and nonincreasing in b.
  return num::find_root(g, b_min, hi, 1e-13);
}

namespace {
Gamma2Result grid_argmin(double lo, double hi, double step, const std::function<double(double)>& coupon, double target) {
  if (!(hi > lo) || !(step > 0.0)) throw DomainError("gamma2 grid: bad bounds");
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  Gamma2Result best;
  best.gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= n; ++k) {
    const double g = lo + step * static_cast<double>(k);
    const double c = coupon(g);
    const double gap = std::abs(c - target);
    if (gap < best.gap) {
      best.gap = gap;
      best.gamma2 = g;
      best.coupon = c;
      best.at_boundary = (k == 0 || k == n);
    }
  }
  if (best.at_boundary)
    std::cerr << "warning: gamma2 grid optimum at the boundary (" << best.gamma2 << ")\n";
  return best;
}
}  // namespace

Gamma2Result calibrate_gamma2(const CouponBatch& batch, const ModelParams& p, double a, double b, double coupon_obs,
                              double lo, double hi, double step) {
  if (!batch.shift_exact)
    throw DomainError("calibrate_gamma2: the index rule is not linear in the drift level; use the re-simulating search");
  const double per_gamma2 = p.alpha2 * p.sigma2 * std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
  return grid_argmin(lo, hi, step, [&](double g) { return coupon_from_batch(batch, a, b, per_gamma2 * g); }, coupon_obs);
}

Gamma2Result calibrate_gamma2_resimulated(const ModelParams& p, const RiskPremiums& rp, const BondSpec& spec,
                                          std::span<const double> baseline, std::size_t n_paths, std::uint64_t seed,
                                          double coupon_obs, double lo, double hi, double step,
                                          const PricingOptions& opt) {
  return grid_argmin(lo, hi, step,
                     [&](double g) {
                       RiskPremiums r = rp;
                       r.gamma2 = g;
                       return fair_coupon(p, r, spec, baseline, n_paths, seed, opt);
                     },
                     coupon_obs);
}

CalibrationResult calibrate_q(const ModelParams& p, const MarketQuote& quote, std::span<const double> baseline,
                              const QCalibrationOptions& opt) {
  quote.validate();
  CalibrationResult res;
  res.n_paths = opt.n_paths;
  res.seed = opt.seed;
  res.gamma1 = opt.gamma1_override ? *opt.gamma1_override : calibrate_gamma1(p, quote);

  BondSpec spec;
  spec.term = quote.term;
  spec.pay_freq = opt.pay_freq;
  spec.index_rule = opt.index_rule;
  spec.coupon_rate = quote.coupon_obs;

  std::optional<RiskPremiums> loss_rp;
  if (opt.loss_measure == Measure::Pricing) loss_rp = RiskPremiums{res.gamma1, 0.0, 0.0, 0.0};
  const IndexSample sample = simulate_index_sample(p, loss_rp, spec, baseline, opt.n_paths, opt.seed, opt.pricing);
  res.attachment = calibrate_attachment(sample, quote.prob_first_loss, opt.attachment_rule);
  res.exhaustion = calibrate_exhaustion(sample, res.attachment, quote.expected_loss, quote.prob_first_loss);
  std::vector<double> prfs(sample.n_paths);
  for (std::size_t i = 0; i < sample.n_paths; ++i) prfs[i] = prf(sample.row(i), res.attachment, res.exhaustion);
  const LossMetrics lm = loss_metrics(prfs);
  res.achieved_pfl = lm.pfl;
  res.achieved_el = lm.el;

  spec.attachment = res.attachment;
  spec.exhaustion = res.exhaustion;
  const RiskPremiums rp0{res.gamma1, 0.0, 0.0, 0.0};
  Gamma2Result g2;
  if (spec.index_rule == IndexRule::AnnualMax) {
    g2 = calibrate_gamma2_resimulated(p, rp0, spec, baseline, opt.n_paths, opt.seed, quote.coupon_obs, opt.gamma2_lo,
                                      opt.gamma2_hi, opt.gamma2_step, opt.pricing);
  } else {
    const CouponBatch batch = simulate_coupon_batch(p, rp0, spec, baseline, opt.n_paths, opt.seed, opt.pricing);
    g2 = calibrate_gamma2(batch, p, res.attachment, res.exhaustion, quote.coupon_obs, opt.gamma2_lo, opt.gamma2_hi,
                          opt.gamma2_step);
  }
  res.gamma2 = g2.gamma2;
  res.achieved_coupon = g2.coupon;
  res.gamma2_at_boundary = g2.at_boundary;
  return res;
}

}  // namespace mortfrac
