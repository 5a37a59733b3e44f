#include "mortfrac/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include "mortfrac/errors.hpp"
#include "mortfrac/numerics.hpp"
#include "mortfrac/parallel.hpp"

namespace mortfrac {

namespace {
void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite parameter ") + name);
}

void check_model_hurst(double h, const char* name) {
  if (!(h >= 0.5 && h < 0.999)) throw DomainError(std::string(name) + " must lie in [0.5, 0.999), got " + std::to_string(h));
}
}  // namespace

void ModelParams::validate() const {
  const std::pair<double, const char*> all[] = {{h1, "h1"},         {h2, "h2"},         {alpha1, "alpha1"},
                                                {alpha2, "alpha2"}, {sigma1, "sigma1"}, {sigma2, "sigma2"},
                                                {m1, "m1"},         {m2, "m2"},         {theta1, "theta1"},
                                                {theta2, "theta2"}, {rho, "rho"},       {r0, "r0"},
                                                {mu0, "mu0"}};
  for (const auto& [v, name] : all) require_finite(v, name);
  check_model_hurst(h1, "h1");
  check_model_hurst(h2, "h2");
  if (alpha1 < 0.0 || alpha2 < 0.0) throw DomainError("alpha weights must be nonnegative");
  if (sigma1 < 0.0 || sigma2 < 0.0) throw DomainError("volatilities must be nonnegative");
  if (!(theta1 > 0.0) || !(theta2 > 0.0)) throw DomainError("mean-reversion speeds must be positive");
  if (std::abs(rho) > 1.0) throw DomainError("rho must lie in [-1, 1]");
}

DriftLevels q_drift_levels(const ModelParams& p, const RiskPremiums& rp) {
  DriftLevels d;
  d.m1_q = p.m1 + p.alpha1 * p.sigma1 * rp.gamma1 + p.sigma1 * rp.eta1;
  d.m2_q = p.m2 + p.alpha2 * p.sigma2 * p.rho * rp.gamma1 +
           p.alpha2 * p.sigma2 * std::sqrt(1.0 - p.rho * p.rho) * rp.gamma2 + p.sigma2 * rp.eta2;
  return d;
}

ModelParams pricing_params(const ModelParams& p, const RiskPremiums& rp) {
  const DriftLevels d = q_drift_levels(p, rp);
  ModelParams q = p;
  q.m1 = d.m1_q;
  q.m2 = d.m2_q;
  return q;
}

ProcessParams rate_process(const ModelParams& p) { return {p.h1, p.alpha1, p.sigma1, p.m1, p.theta1, p.r0}; }
ProcessParams mortality_process(const ModelParams& p) { return {p.h2, p.alpha2, p.sigma2, p.m2, p.theta2, p.mu0}; }

namespace {

struct Stepper {
  Scheme scheme;
  double m, theta, sigma, alpha, dt;
  double level, decay, half_decay;

  Stepper(const ProcessParams& q, double dt_, Scheme s)
      : scheme(s), m(q.m), theta(q.theta), sigma(q.sigma), alpha(q.alpha), dt(dt_) {
    level = m / theta;
    decay = std::exp(-theta * dt);
    half_decay = std::exp(-0.5 * theta * dt);
  }

  double step(double x, double dw, double db) const {
    if (scheme == Scheme::Euler) return x + (m - theta * x) * dt + sigma * (alpha * dw + db);
    return level + decay * (x - level) + sigma * half_decay * (alpha * dw + db);
  }
};

}  // namespace

void visit_paths(const ModelParams& p, const std::optional<RiskPremiums>& rp, std::size_t n_paths,
                 std::size_t n_steps, double horizon, std::uint64_t seed, const PathVisitor& visit,
                 const SimOptions& opt) {
  p.validate();
  if (n_paths < 1) throw DomainError("n_paths must be positive");
  if (n_steps < 1) throw DomainError("n_steps must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive");
  if (rp) {
    for (double v : {rp->gamma1, rp->gamma2, rp->eta1, rp->eta2}) require_finite(v, "risk premium");
  }
  const ModelParams q = rp ? pricing_params(p, *rp) : p;
  const double dt = horizon / static_cast<double>(n_steps);
  const double sqdt = std::sqrt(dt);

  std::unique_ptr<FgnSampler> s1, s2;
  if (opt.rates && q.h1 != 0.5) s1 = std::make_unique<FgnSampler>(q.h1, n_steps, dt, opt.sampler);
  if (opt.mortality && q.h2 != 0.5) s2 = std::make_unique<FgnSampler>(q.h2, n_steps, dt, opt.sampler);
  const Stepper st1(rate_process(q), dt, opt.scheme);
  const Stepper st2(mortality_process(q), dt, opt.scheme);
  const double rho = q.rho;
  const double rho_c = std::sqrt(std::max(0.0, 1.0 - rho * rho));

  parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
    std::vector<double> dw1(n_steps), dw2(n_steps), db1(n_steps), db2(n_steps);
    std::vector<double> r(opt.rates ? n_steps + 1 : 0), mu(opt.mortality ? n_steps + 1 : 0);
    for (std::size_t i = begin; i < end; ++i) {
      rng::NormalStream zw1(seed, i, rng::Tag::W1);
      for (double& x : dw1) x = sqdt * zw1();
      if (opt.rates) {
        rng::NormalStream zb1(seed, i, rng::Tag::B1);
        if (s1) {
          s1->sample(zb1, db1);
        } else {
          for (double& x : db1) x = sqdt * zb1();
        }
        r[0] = q.r0;
        for (std::size_t k = 0; k < n_steps; ++k) r[k + 1] = st1.step(r[k], dw1[k], db1[k]);
      }
      if (opt.mortality) {
        rng::NormalStream zw2(seed, i, rng::Tag::W2);
        rng::NormalStream zb2(seed, i, rng::Tag::B2);
        for (double& x : dw2) x = sqdt * zw2();
        if (s2) {
          s2->sample(zb2, db2);
        } else {
          for (double& x : db2) x = sqdt * zb2();
        }
        mu[0] = q.mu0;
        for (std::size_t k = 0; k < n_steps; ++k) {
          const double shock = rho * dw1[k] + rho_c * dw2[k];
          mu[k + 1] = st2.step(mu[k], shock, db2[k]);
        }
      }
      visit(i, r, mu);
    }
  });
}

PathSet simulate_bivariate(const ModelParams& p, const std::optional<RiskPremiums>& rp, std::size_t n_paths,
                           std::size_t n_steps, double horizon, std::uint64_t seed, const SimOptions& opt) {
  PathSet ps;
  ps.dt = horizon / static_cast<double>(n_steps);
  ps.measure = rp ? Measure::Pricing : Measure::Physical;
  ps.seed = seed;
  ps.rate_paths.resize(static_cast<Eigen::Index>(n_paths), opt.rates ? static_cast<Eigen::Index>(n_steps + 1) : 0);
  ps.mortality_paths.resize(static_cast<Eigen::Index>(n_paths), opt.mortality ? static_cast<Eigen::Index>(n_steps + 1) : 0);
  visit_paths(p, rp, n_paths, n_steps, horizon, seed,
              [&](std::size_t i, std::span<const double> r, std::span<const double> mu) {
                const auto row = static_cast<Eigen::Index>(i);
                std::copy(r.begin(), r.end(), ps.rate_paths.row(row).data());
                std::copy(mu.begin(), mu.end(), ps.mortality_paths.row(row).data());
              },
              opt);
  return ps;
}

std::vector<double> drift_sensitivity(double theta, double dt, std::size_t n_steps, Scheme scheme) {
  std::vector<double> d(n_steps + 1, 0.0);
  const double decay = scheme == Scheme::Euler ? 1.0 - theta * dt : std::exp(-theta * dt);
  const double gain = scheme == Scheme::Euler ? dt : (1.0 - std::exp(-theta * dt)) / theta;
  for (std::size_t k = 0; k < n_steps; ++k) d[k + 1] = gain + decay * d[k];
  return d;
}

double nu_squared(double alpha, double sigma, double hurst, double theta, double t) {
  if (t < 0.0) throw DomainError("nu_squared: negative time");
  if (!(theta > 0.0)) throw DomainError("nu_squared: theta must be positive");
  if (!(hurst >= 0.5 && hurst < 1.0)) throw DomainError("nu_squared: hurst must lie in [0.5, 1)");
  if (t == 0.0) return 0.0;
  const double s2 = sigma * sigma;
  const double brown_w = hurst == 0.5 ? alpha * alpha + 1.0 : alpha * alpha;
  const double brownian = brown_w * s2 * (-std::expm1(-2.0 * theta * t)) / (2.0 * theta);
  if (hurst == 0.5) return brownian;
  const double e = 2.0 * hurst - 2.0;
  const double alpha_h = hurst * (2.0 * hurst - 1.0);
  const double integral = num::integrate(
      [&](double x) {
        if (x <= 0.0) return 0.0;
        return std::pow(x, e) * std::exp(-theta * x) * -std::expm1(2.0 * theta * (x - t));
      },
      0.0, t, 1e-10);
  return brownian + s2 * alpha_h / theta * integral;
}

double nu_squared_gamma_form(double alpha, double sigma, double hurst, double theta, double t) {
  if (t < 0.0) throw DomainError("nu_squared_gamma_form: negative time");
  if (!(hurst > 0.5 && hurst < 1.0)) throw DomainError("nu_squared_gamma_form: hurst must lie in (0.5, 1)");
  if (t == 0.0) return 0.0;
  const double s2 = sigma * sigma;
  const double u = 2.0 * hurst - 1.0;
  const double x = theta * t;
  const double brownian = alpha * alpha * s2 * (-std::expm1(-2.0 * x)) / (2.0 * theta);
  const double lower = boost::math::tgamma_lower(u, x);
  // int_0^x y^{u-1} e^{y} dy = x^u / u * 1F1(u; u+1; x)
  const double growing = std::pow(x, u) / u * boost::math::hypergeometric_1F1(u, u + 1.0, x);
  const double frac = s2 * hurst * u * std::pow(theta, -2.0 * hurst) * (lower - std::exp(-2.0 * x) * growing);
  return brownian + frac;
}

double nu_squared_limit(double alpha, double sigma, double hurst, double theta) {
  const double s2 = sigma * sigma;
  if (hurst == 0.5) return (alpha * alpha + 1.0) * s2 / (2.0 * theta);
  return alpha * alpha * s2 / (2.0 * theta) + s2 * std::tgamma(2.0 * hurst + 1.0) / (2.0 * std::pow(theta, 2.0 * hurst));
}

Moments ou_moments(const ProcessParams& q, double t) {
  if (t < 0.0) throw DomainError("moments: negative time");
  Moments mo;
  const double level = q.m / q.theta;
  mo.mean = level + std::exp(-q.theta * t) * (q.x0 - level);
  mo.variance = nu_squared(q.alpha, q.sigma, q.hurst, q.theta, t);
  return mo;
}

Moments rt_moments(const ModelParams& p, double t) { return ou_moments(rate_process(p), t); }

double prob_rate_nonneg(const ModelParams& p, double t) {
  if (!(t > 0.0)) throw DomainError("prob_rate_nonneg: t must be positive");
  const Moments mo = rt_moments(p, t);
  if (mo.variance <= 0.0) return mo.mean >= 0.0 ? 1.0 : 0.0;
  return num::normal_cdf(mo.mean / std::sqrt(mo.variance));
}

double instantaneous_corr(const ModelParams& p, double dt) {
  if (!(dt > 0.0)) throw DomainError("instantaneous_corr: dt must be positive");
  const double v1 = p.sigma1 * p.sigma1 * (p.alpha1 * p.alpha1 * dt + std::pow(dt, 2.0 * p.h1));
  const double v2 = p.sigma2 * p.sigma2 * (p.alpha2 * p.alpha2 * dt + std::pow(dt, 2.0 * p.h2));
  if (v1 <= 0.0 || v2 <= 0.0) return 0.0;
  return p.rho * p.sigma1 * p.sigma2 * p.alpha1 * p.alpha2 * dt / (std::sqrt(v1) * std::sqrt(v2));
}

TailBounds tail_bounds(const ModelParams& p, double horizon, double a, double e_sup_estimate) {
  if (a < 0.0) throw DomainError("tail_bounds: a must be nonnegative");
  if (!(horizon > 0.0)) throw DomainError("tail_bounds: horizon must be positive");
  TailBounds tb;
  const double nu2 = nu_squared(p.alpha2, p.sigma2, p.h2, p.theta2, horizon);
  tb.nu = std::sqrt(nu2);
  tb.threshold = a + e_sup_estimate;
  if (nu2 <= 0.0) {
    tb.lower = a == 0.0 ? 1.0 : 0.0;
    tb.upper = a == 0.0 ? 1.0 : 0.0;
    return tb;
  }
  const double c_star = a / tb.nu;
  tb.lower = std::clamp(2.0 * (1.0 - num::normal_cdf(c_star)), 0.0, 1.0);
  tb.upper = std::clamp(std::exp(-a * a / (2.0 * nu2)), 0.0, 1.0);
  return tb;
}

std::vector<double> sample_mortality_sup(const ModelParams& p, std::size_t n_paths, std::size_t n_steps,
                                         double horizon, std::uint64_t seed, const SimOptions& opt) {
  SimOptions o = opt;
  o.rates = false;
  o.mortality = true;
  std::vector<double> sup(n_paths);
  visit_paths(p, std::nullopt, n_paths, n_steps, horizon, seed,
              [&](std::size_t i, std::span<const double>, std::span<const double> mu) {
                sup[i] = *std::max_element(mu.begin(), mu.end());
              },
              o);
  return sup;
}

}  // namespace mortfrac
