#include <doctest.h>

#include <cmath>
#include <vector>

#include "mortfrac/errors.hpp"
#include "mortfrac/model.hpp"
#include "mortfrac/numerics.hpp"

using namespace mortfrac;

TEST_SUITE("model") {
  TEST_CASE("pricing-measure drift levels") {
    const ModelParams p;
    const auto d0 = q_drift_levels(p, {});
    CHECK(d0.m1_q == p.m1);
    CHECK(d0.m2_q == p.m2);
    const auto d = q_drift_levels(p, {3.8701, 1.0620, 0.0, 0.0});
    CHECK(d.m1_q == doctest::Approx(2.26377 + 0.24815 * 1.24565 * 3.8701).epsilon(1e-12));
    ModelParams q = p;
    q.rho = 0.0;
    const auto dq = q_drift_levels(q, {1.0, 2.0, 0.0, 0.0});
    CHECK(dq.m1_q == doctest::Approx(q.m1 + q.alpha1 * q.sigma1));
    CHECK(dq.m2_q == doctest::Approx(q.m2 + 2.0 * q.alpha2 * q.sigma2));
  }

  TEST_CASE("parameter validation") {
    ModelParams p;
    p.h1 = 0.3;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = ModelParams{};
    p.rho = 1.5;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = ModelParams{};
    p.theta2 = 0.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = ModelParams{};
    p.m1 = std::nan("");
    CHECK_THROWS_AS(p.validate(), DomainError);
  }

  TEST_CASE("noiseless paths follow the ODE") {
    ModelParams p;
    p.sigma1 = p.sigma2 = 0.0;
    for (Scheme sch : {Scheme::Exponential, Scheme::Euler}) {
      SimOptions o;
      o.scheme = sch;
      const PathSet ps = simulate_bivariate(p, std::nullopt, 3, 52, 1.0, 5, o);
      const double lvl = p.m1 / p.theta1;
      const double exact = lvl + std::exp(-p.theta1) * (p.r0 - lvl);
      const double tol = sch == Scheme::Exponential ? 1e-12 : 1e-2;
      CHECK(ps.rate_paths(2, 52) == doctest::Approx(exact).epsilon(tol));
      CHECK(ps.rate_paths(0, 0) == p.r0);
      CHECK(ps.mortality_paths(1, 0) == p.mu0);
    }
  }

  TEST_CASE("measure change equals replacing the drift levels") {
    const ModelParams p;
    const RiskPremiums rp{3.8701, 1.0620, 0.0, 0.0};
    const PathSet a = simulate_bivariate(p, rp, 20, 104, 2.0, 77);
    const PathSet b = simulate_bivariate(pricing_params(p, rp), std::nullopt, 20, 104, 2.0, 77);
    CHECK(a.measure == Measure::Pricing);
    CHECK(b.measure == Measure::Physical);
    CHECK((a.rate_paths - b.rate_paths).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.mortality_paths - b.mortality_paths).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("nu squared: quadrature, gamma form, limit") {
    // Independent high-precision double-integral oracle.
    CHECK(nu_squared(0.0, 1.0, 0.7, 1.0, 1.0) == doctest::Approx(0.41490072580237041).epsilon(1e-9));
    CHECK(nu_squared(0.3, 0.8, 0.85, 0.5, 3.0) == doctest::Approx(1.2055584157809749).epsilon(1e-9));
    for (double h : {0.55, 0.7, 0.85957, 0.95})
      for (double t : {0.1, 1.0, 5.0})
        CHECK(nu_squared_gamma_form(0.25, 1.2, h, 0.54, t) == doctest::Approx(nu_squared(0.25, 1.2, h, 0.54, t)).epsilon(1e-8));
    CHECK(nu_squared(0.4, 1.0, 0.5, 2.0, 1.0) ==
          doctest::Approx((0.16 + 1.0) * (1 - std::exp(-4.0)) / 4.0).epsilon(1e-12));
    const ModelParams p;
    const double lim = nu_squared_limit(p.alpha1, p.sigma1, p.h1, p.theta1);
    CHECK(rt_moments(p, 40.0 / p.theta1).variance == doctest::Approx(lim).epsilon(1e-6));
    double prev = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      const double v = rt_moments(p, t).variance;
      CHECK(v >= prev);
      prev = v;
    }
    const auto m0 = rt_moments(p, 0.0);
    CHECK(m0.mean == p.r0);
    CHECK(m0.variance == 0.0);
  }

  TEST_CASE("positivity probability") {
    ModelParams p;
    p.r0 = 0.0;
    p.m1 = 0.0;
    CHECK(prob_rate_nonneg(p, 2.0) == doctest::Approx(0.5));
    p = ModelParams{};
    p.r0 = p.m1 / p.theta1;
    const double nu = std::sqrt(rt_moments(p, 1.0).variance);
    CHECK(prob_rate_nonneg(p, 1.0) == doctest::Approx(num::normal_cdf(p.r0 / nu)));
  }

  TEST_CASE("instantaneous correlation") {
    ModelParams p;
    CHECK(std::abs(instantaneous_corr(p, 1.0 / 52)) < 0.29265);
    CHECK(instantaneous_corr(p, 1e-8) * (p.rho < 0 ? -1 : 1) > 0);
    ModelParams e = p;
    e.h1 = e.h2 = 0.8;
    CHECK(instantaneous_corr(e, 1e-8) == doctest::Approx(e.rho).epsilon(1e-3));
    e.rho = 0.0;
    CHECK(instantaneous_corr(e, 0.1) == 0.0);
  }

  TEST_CASE("tail bounds at zero distance") {
    const ModelParams p;
    const auto tb = tail_bounds(p, 5.0, 0.0, 0.01);
    CHECK(tb.upper == doctest::Approx(1.0));
    CHECK(tb.lower == doctest::Approx(1.0));
    const auto tb2 = tail_bounds(p, 5.0, 0.002, 0.01);
    CHECK(tb2.upper < 1.0);
    CHECK(tb2.threshold == doctest::Approx(0.012));
  }

  TEST_CASE("simulated terminal rate is Gaussian with the analytic moments") {
    const ModelParams p;
    const std::size_t n = 10000;
    const PathSet ps = simulate_bivariate(p, std::nullopt, n, 52, 1.0, 4242);
    const auto mom = rt_moments(p, 1.0);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = (ps.rate_paths(static_cast<Eigen::Index>(i), 52) - mom.mean) / std::sqrt(mom.variance);
    const double d = num::ks_statistic(z, num::normal_cdf);
    CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(num::mean(z)) < 3.0 / std::sqrt(static_cast<double>(n)));
  }

  TEST_CASE("drift sensitivity matches a finite difference") {
    const ModelParams p;
    ModelParams q = p;
    q.m2 += 1e-3;
    SimOptions o;
    o.rates = false;
    const PathSet a = simulate_bivariate(p, std::nullopt, 2, 104, 2.0, 3, o);
    const PathSet b = simulate_bivariate(q, std::nullopt, 2, 104, 2.0, 3, o);
    const auto d = drift_sensitivity(p.theta2, 1.0 / 52, 104);
    for (std::size_t k : {1u, 50u, 104u})
      CHECK((b.mortality_paths(1, static_cast<Eigen::Index>(k)) - a.mortality_paths(1, static_cast<Eigen::Index>(k))) / 1e-3 ==
            doctest::Approx(d[k]).epsilon(1e-6));
  }
}
