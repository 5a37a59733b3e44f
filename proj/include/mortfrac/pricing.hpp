#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mortfrac/model.hpp"

namespace mortfrac {

/// Closed-form zero-coupon bond price at time 0. All rate inputs in decimal per annum.
double zcb_price_t0(double m, double theta, double sigma, double alpha, double hurst, double r0, double horizon);

/// Exponent of the fractional factor of the closed form, computed by quadrature of the
/// double-integral definition after integrating by parts (regular at H = 1/2).
double zcb_fractional_exponent(double theta, double sigma, double hurst, double horizon);

/// Rate-model bond price: percent parameters converted to decimal, drift under rp if given.
double zcb_price_model(const ModelParams& p, const std::optional<RiskPremiums>& rp, double horizon);

/// exp(-int_0^upto r ds) per path, trapezoid on the grid, percent rates divided by 100.
std::vector<double> mc_discount_factors(const PathSet& paths, double upto);
/// Same for a single path with step dt; upto_steps grid steps from t = 0.
double path_discount_factor(std::span<const double> rate_percent, double dt, std::size_t upto_steps);

enum class IndexRule { Point, AnnualAverage, AnnualMax };
std::string to_string(IndexRule r);
IndexRule index_rule_from_string(const std::string& s);

constexpr int kWeeksPerYear = 52;

struct BondSpec {
  double face = 100.0;
  double coupon_rate = 0.03;
  int pay_freq = 1;
  double term = 5.0;
  double attachment = 0.0;
  double exhaustion = 1.0;
  IndexRule index_rule = IndexRule::AnnualAverage;

  void validate() const;
  std::size_t n_payments() const;
  std::size_t weeks_per_period() const;
  std::size_t n_weeks() const;
};

struct MortalityIndexSeries {
  std::vector<double> values;
  IndexRule rule = IndexRule::AnnualAverage;
};

/// weekly[0] is t = 0; payment period k covers weeks (k-1)w+1 .. kw.
MortalityIndexSeries mortality_index(std::span<const double> weekly, const BondSpec& spec);
void mortality_index_into(std::span<const double> weekly, const BondSpec& spec, std::span<double> out);

double prf(std::span<const double> index, double a, double b);
inline double prf(const MortalityIndexSeries& index, double a, double b) { return prf(index.values, a, b); }

/// Adds the 52-entry seasonal baseline to simulated weekly excess mortality. Week j of the
/// simulation (j >= 1) falls in week-of-year ((start_week - 1 + j - 1) mod 52) + 1.
void add_baseline(std::span<const double> excess, std::span<const double> baseline, std::span<double> out,
                  int start_week = 1);

struct PayoutDistribution {
  std::vector<double> principal_pv;
  std::vector<double> total_pv;
  std::vector<double> prf;
  std::vector<double> discount_curve;  // P(0, t_k), closed form under the simulation measure
};

struct PricingOptions {
  SimOptions sim;
  int start_week = 1;
  bool disable_prf = false;
};

PayoutDistribution bond_payout_paths(const ModelParams& p, const std::optional<RiskPremiums>& rp, const BondSpec& spec,
                                     std::span<const double> baseline, std::size_t n_paths, std::uint64_t seed,
                                     const PricingOptions& opt = {});

/// Per-path quantities needed by the fair-coupon equation, from one pricing-measure batch.
struct CouponBatch {
  std::size_t n_paths = 0;
  std::size_t n_periods = 0;
  std::vector<double> index;          // n_paths x n_periods, row-major
  std::vector<double> discount_T;     // exp(-int_0^T r) per path
  std::vector<double> index_shift;    // d index_k / d m2 per period
  std::vector<double> discount_curve; // P(0, t_k)
  double annuity = 0.0;               // (1/freq) sum_k P(0, t_k)
  double zcb_T = 0.0;                 // P(0, T)
  bool shift_exact = true;            // false for the annual-max rule
};

CouponBatch simulate_coupon_batch(const ModelParams& p, const RiskPremiums& rp, const BondSpec& spec,
                                  std::span<const double> baseline, std::size_t n_paths, std::uint64_t seed,
                                  const PricingOptions& opt = {});

/// Fair coupon from a batch, with the mortality drift level shifted by dm2.
double coupon_from_batch(const CouponBatch& batch, double a, double b, double dm2 = 0.0);

double fair_coupon(const ModelParams& p, const RiskPremiums& rp, const BondSpec& spec, std::span<const double> baseline,
                   std::size_t n_paths, std::uint64_t seed, const PricingOptions& opt = {});

struct TailMeasure {
  double level = 0.0;
  double var = 0.0;
  double cte = 0.0;
};
struct RiskReport {
  double mean = 0.0;
  double std = 0.0;
  std::vector<TailMeasure> tails;
};
/// Lower-tail VaR (type-7 quantile) and CTE (mean of samples <= VaR).
RiskReport risk_measures(std::span<const double> samples, std::span<const double> levels = {});

struct LossMetrics {
  double pfl = 0.0;
  double el = 0.0;
  std::optional<double> cel;  // empty when no path attaches
};
LossMetrics loss_metrics(std::span<const double> prf_values);

}  // namespace mortfrac
