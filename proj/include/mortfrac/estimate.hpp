#pragma once

#include <span>
#include <string>
#include <vector>

namespace mortfrac {

enum class SeriesLabel { Rate, ExcessMortality, Other };

struct ObservedSeries {
  std::vector<double> values;
  double n = 52.0;  // observations per year
  SeriesLabel label = SeriesLabel::Other;

  std::size_t increments() const { return values.empty() ? 0 : values.size() - 1; }
  double horizon() const { return static_cast<double>(increments()) / n; }
};

struct RsOptions {
  std::size_t min_block = 8;
  std::size_t max_block_divisor = 4;  // largest block is length / divisor
  bool anis_lloyd = true;
};

struct HurstResult {
  double h = 0.5;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool clipped = false;
  std::vector<double> block_sizes;
  std::vector<double> log_rs;  // after the expected-value correction
};

/// Expected R/S of N iid normals (Anis-Lloyd with the Peters small-sample factor).
double expected_rs(std::size_t N);
/// Mean R/S over non-overlapping blocks of length N.
double rescaled_range(std::span<const double> x, std::size_t N);
/// R/S analysis of the values of x as given (pass increments for a noise series).
HurstResult estimate_hurst_rs(std::span<const double> x, const RsOptions& opt = {});

struct PowerVariations {
  double v = 0.0;
  double u = 0.0;
};
/// V = sum of squared one-step increments; U = sum of squared two-step increments,
/// rescaled by N / (N - 1) so both sums cover N terms.
PowerVariations power_variations(const ObservedSeries& x);

enum class AlphaSigmaMethod {
  Moment,     // exact finite-n moment matching of V and U
  AsPrinted,  // closed-form ratios from the first-order asymptotics
};

struct AlphaSigma {
  double alpha = 0.0;
  double sigma = 0.0;
  bool alpha_clipped = false;
};
AlphaSigma estimate_alpha_sigma(const ObservedSeries& x, double h, AlphaSigmaMethod method = AlphaSigmaMethod::Moment);

struct Drift {
  double m = 0.0;
  double theta = 0.0;
};
Drift estimate_drift_ls(const ObservedSeries& x);
Drift estimate_theta_ergodic(const ObservedSeries& x, double h, double sigma, double long_term_mean);

enum class RhoNormalization {
  PerYear,    // divide the residual cross-product sum by T
  AsPrinted,  // multiply by n
};

struct FittedComponent {
  double alpha = 0.0;
  double sigma = 0.0;
  double m = 0.0;
  double theta = 0.0;
};

struct RhoEstimate {
  double rho = 0.0;
  double raw = 0.0;
  bool clipped = false;
};
RhoEstimate estimate_rho(const ObservedSeries& r, const ObservedSeries& mu, const FittedComponent& fr,
                         const FittedComponent& fm, RhoNormalization norm = RhoNormalization::PerYear);

enum class HurstInput { Levels, Increments };

struct PhysicalOptions {
  RsOptions rs;
  HurstInput hurst_input = HurstInput::Levels;
  AlphaSigmaMethod alpha_sigma = AlphaSigmaMethod::Moment;
  RhoNormalization rho_norm = RhoNormalization::PerYear;
};

struct SeriesEstimate {
  double h = 0.5;
  double alpha = 0.0;
  double sigma = 0.0;
  double m = 0.0;
  double theta = 0.0;
  HurstResult rs;
  PowerVariations pv;
  bool alpha_clipped = false;
};

struct EstimationReport {
  SeriesEstimate rate;
  SeriesEstimate mortality;
  RhoEstimate rho;
  std::size_t n_obs = 0;
};

/// Six-step sequential estimation: H, (alpha, sigma), ergodic drift for rates; H, (alpha, sigma),
/// least-squares drift for excess mortality; then rho. Failures carry the step name.
EstimationReport calibrate_physical(const ObservedSeries& r, const ObservedSeries& mu, double long_term_mean_rate,
                                    const PhysicalOptions& opt = {});

}  // namespace mortfrac
