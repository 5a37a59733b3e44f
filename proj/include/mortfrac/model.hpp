#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mortfrac/fracnoise.hpp"

namespace mortfrac {

/// Physical-measure parameters of the bivariate rate / excess-mortality model.
/// Rates are in percent per annum; mortality in the published per-person-year scale.
struct ModelParams {
  double h1 = 0.85957, h2 = 0.78416;
  double alpha1 = 0.24815, alpha2 = 0.32636;
  double sigma1 = 1.24565, sigma2 = 0.00286;
  double m1 = 2.26377, m2 = 0.00068;
  double theta1 = 0.54157, theta2 = 1.17364;
  double rho = -0.29265;
  double r0 = 4.30;
  double mu0 = 0.0;

  void validate() const;
};

struct RiskPremiums {
  double gamma1 = 0.0, gamma2 = 0.0;
  double eta1 = 0.0, eta2 = 0.0;
};

enum class Measure { Physical, Pricing };

struct DriftLevels {
  double m1_q = 0.0;
  double m2_q = 0.0;
};

DriftLevels q_drift_levels(const ModelParams& p, const RiskPremiums& rp);
/// Parameters with the drift levels replaced by their pricing-measure values.
ModelParams pricing_params(const ModelParams& p, const RiskPremiums& rp);

/// One-dimensional mean-reverting mfBm-driven component.
struct ProcessParams {
  double hurst = 0.5;
  double alpha = 0.0;
  double sigma = 0.0;
  double m = 0.0;
  double theta = 1.0;
  double x0 = 0.0;
};
ProcessParams rate_process(const ModelParams& p);
ProcessParams mortality_process(const ModelParams& p);

enum class Scheme {
  Exponential,  // exact mean recursion, exponentially weighted noise
  Euler,
};

struct SimOptions {
  Scheme scheme = Scheme::Exponential;
  bool rates = true;
  bool mortality = true;
  SamplerMethod sampler = SamplerMethod::Auto;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PathSet {
  RowMatrix rate_paths;
  RowMatrix mortality_paths;
  double dt = 0.0;
  Measure measure = Measure::Physical;
  std::uint64_t seed = 0;

  std::size_t n_paths() const { return static_cast<std::size_t>(rate_paths.rows()); }
  std::size_t n_steps() const { return rate_paths.cols() > 0 ? static_cast<std::size_t>(rate_paths.cols()) - 1 : 0; }
};

/// Called once per path, possibly from several threads at once (distinct path indices).
/// Disabled components are passed as empty spans.
using PathVisitor = std::function<void(std::size_t path, std::span<const double> rate, std::span<const double> mortality)>;

void visit_paths(const ModelParams& p, const std::optional<RiskPremiums>& rp, std::size_t n_paths,
                 std::size_t n_steps, double horizon, std::uint64_t seed, const PathVisitor& visit,
                 const SimOptions& opt = {});

PathSet simulate_bivariate(const ModelParams& p, const std::optional<RiskPremiums>& rp, std::size_t n_paths,
                           std::size_t n_steps, double horizon, std::uint64_t seed, const SimOptions& opt = {});

/// d x_k / d m for the given scheme: the response of the path at step k to a unit drift-level shift.
std::vector<double> drift_sensitivity(double theta, double dt, std::size_t n_steps, Scheme scheme = Scheme::Exponential);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Var of sigma * int_0^t e^{-theta (t-s)} d(alpha W + B^H)_s by one-dimensional quadrature.
double nu_squared(double alpha, double sigma, double hurst, double theta, double t);
/// Same quantity through the lower incomplete gamma function and a confluent hypergeometric term.
double nu_squared_gamma_form(double alpha, double sigma, double hurst, double theta, double t);
/// t -> infinity limit alpha^2 sigma^2 / (2 theta) + sigma^2 Gamma(2H+1) / (2 theta^{2H}).
double nu_squared_limit(double alpha, double sigma, double hurst, double theta);

Moments ou_moments(const ProcessParams& q, double t);
Moments rt_moments(const ModelParams& p, double t);

/// Phi(mean / sd) of the rate at time t.
double prob_rate_nonneg(const ModelParams& p, double t);

double instantaneous_corr(const ModelParams& p, double dt);

struct TailBounds {
  double lower = 0.0;
  double upper = 0.0;
  double threshold = 0.0;  // a + E[sup]
  double nu = 0.0;
};
/// Bounds for the supremum of excess mortality over [0, horizon].
TailBounds tail_bounds(const ModelParams& p, double horizon, double a, double e_sup_estimate);

/// Per-path grid supremum of simulated excess mortality (physical measure).
std::vector<double> sample_mortality_sup(const ModelParams& p, std::size_t n_paths, std::size_t n_steps,
                                         double horizon, std::uint64_t seed, const SimOptions& opt = {});

}  // namespace mortfrac
