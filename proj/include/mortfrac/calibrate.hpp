#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mortfrac/model.hpp"
#include "mortfrac/pricing.hpp"

namespace mortfrac {

struct MarketQuote {
  double prob_first_loss = 0.0106;
  double expected_loss = 0.0075;
  double coupon_obs = 0.03;
  double term = 5.0;
  double target_yield = 0.0257;
  std::optional<double> premium_spread;

  void validate() const;
};

/// Simulated mortality index values, one row of n_periods per path.
struct IndexSample {
  std::size_t n_paths = 0;
  std::size_t n_periods = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * n_periods, n_periods}; }
};

IndexSample simulate_index_sample(const ModelParams& p, const std::optional<RiskPremiums>& rp, const BondSpec& spec,
                                  std::span<const double> baseline, std::size_t n_paths, std::uint64_t seed,
                                  const PricingOptions& opt = {});

/// gamma1 matching the closed-form bond price to (1 + i)^{-T}; eta1 = eta2 = 0.
double calibrate_gamma1(const ModelParams& p, const MarketQuote& quote, double lo = -20.0, double hi = 20.0);

enum class AttachmentRule {
  Pooled,      // percentile of all index values pooled over paths and periods
  PerPathMax,  // percentile of each path's largest index value
};

double calibrate_attachment(const IndexSample& sample, double pfl, AttachmentRule rule = AttachmentRule::Pooled);

/// Mean PRF over the paths whose index exceeds a in some period.
double conditional_mean_prf(const IndexSample& sample, double a, double b);

double calibrate_exhaustion(const IndexSample& sample, double attachment, double el, double pfl);

struct Gamma2Result {
  double gamma2 = 0.0;
  double coupon = 0.0;
  double gap = 0.0;
  bool at_boundary = false;
};

/// Grid search of gamma2 on [lo, hi] using one pricing-measure batch simulated at gamma2 = 0.
/// The mortality drift level is linear in gamma2, so each grid point shifts the batch's index.
Gamma2Result calibrate_gamma2(const CouponBatch& batch, const ModelParams& p, double a, double b, double coupon_obs,
                              double lo = 0.0, double hi = 2.0, double step = 0.001);

/// Same search, re-simulating each grid point from the same seed.
Gamma2Result calibrate_gamma2_resimulated(const ModelParams& p, const RiskPremiums& rp, const BondSpec& spec,
                                          std::span<const double> baseline, std::size_t n_paths, std::uint64_t seed,
                                          double coupon_obs, double lo, double hi, double step,
                                          const PricingOptions& opt = {});

struct QCalibrationOptions {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 20210701;
  AttachmentRule attachment_rule = AttachmentRule::PerPathMax;
  Measure loss_measure = Measure::Physical;
  PricingOptions pricing;
  IndexRule index_rule = IndexRule::AnnualAverage;
  int pay_freq = 1;
  double gamma2_lo = 0.0;
  double gamma2_hi = 2.0;
  double gamma2_step = 0.001;
  std::optional<double> gamma1_override;
};

struct CalibrationResult {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double attachment = 0.0;
  double exhaustion = 0.0;
  double achieved_pfl = 0.0;
  double achieved_el = 0.0;
  double achieved_coupon = 0.0;
  bool gamma2_at_boundary = false;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

CalibrationResult calibrate_q(const ModelParams& p, const MarketQuote& quote, std::span<const double> baseline,
                              const QCalibrationOptions& opt = {});

}  // namespace mortfrac
