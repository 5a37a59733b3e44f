#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mortfrac/data.hpp"
#include "mortfrac/errors.hpp"
#include "mortfrac/numerics.hpp"
#include "mortfrac/pricing.hpp"

using namespace mortfrac;

namespace {
std::vector<double> flat_baseline(double v = 0.0) { return std::vector<double>(52, v); }
}  // namespace

TEST_SUITE("pricing") {
  TEST_CASE("deterministic-rate limit") {
    const double m = 0.04, th = 0.6, r0 = 0.03, T = 5;
    const double lvl = m / th;
    const double ode = std::exp(-lvl * T + (lvl - r0) * (1 - std::exp(-th * T)) / th);
    CHECK(zcb_price_t0(m, th, 0.0, 0.3, 0.75, r0, T) == doctest::Approx(ode).epsilon(1e-12));
  }

  TEST_CASE("closed form against independent double-integral oracles") {
    CHECK(zcb_fractional_exponent(0.6, 0.02, 0.75, 5.0) == doctest::Approx(0.0031137058285593955).epsilon(1e-9));
    CHECK(zcb_fractional_exponent(1.0, 0.5, 0.75, 2.0) == doctest::Approx(0.12408064307008516).epsilon(1e-9));
    CHECK(zcb_price_t0(0.04, 0.6, 0.02, 0.3, 0.75, 0.03, 5.0) == doctest::Approx(0.76184065076335528).epsilon(1e-10));
    CHECK(zcb_price_t0(0.10, 1.0, 0.01, 0.0, 0.9, 0.05, 2.0) == doctest::Approx(0.85495305765482708).epsilon(1e-10));
  }

  TEST_CASE("printed and regularised fractional exponents agree") {
    for (double h : {0.55, 0.7, 0.85957, 0.95}) {
      const double lvl = 0.05 / 0.8, r0 = 0.02, T = 3.0, th = 0.8, s = 0.015;
      const double e1 = -lvl * T + (lvl - r0) * (1 - std::exp(-th * T)) / th;
      const double via_reg = std::exp(e1 + zcb_fractional_exponent(th, s, h, T));
      CHECK(zcb_price_t0(0.05, th, s, 0.0, h, r0, T) == doctest::Approx(via_reg).epsilon(1e-9));
    }
    // At H = 1/2 the fractional part is a second Brownian motion.
    CHECK(zcb_price_t0(0.05, 0.8, 0.015, 0.3, 0.5, 0.02, 3.0) ==
          doctest::Approx(zcb_price_t0(0.05, 0.8, 0.015 * std::sqrt(1.09), 0.0, 0.5, 0.02, 3.0)).epsilon(1e-13));
  }

  TEST_CASE("comparative statics of the closed form") {
    double prev = 0.0;
    for (double h : {0.5, 0.6, 0.7, 0.8, 0.9}) {
      const double v = zcb_price_t0(0.10, 1.0, 0.01, 0.0, h, 0.05, 5.0);
      CHECK(v > prev);
      prev = v;
    }
    CHECK(zcb_price_t0(0.10, 1.0, 0.01, 0.0, 0.7, 0.06, 5.0) < zcb_price_t0(0.10, 1.0, 0.01, 0.0, 0.7, 0.05, 5.0));
    CHECK(zcb_price_t0(0.11, 1.0, 0.01, 0.0, 0.7, 0.05, 5.0) < zcb_price_t0(0.10, 1.0, 0.01, 0.0, 0.7, 0.05, 5.0));
    CHECK_THROWS_AS(zcb_price_t0(-500.0, 0.01, 0.0, 0.0, 0.7, 0.0, 5.0), NumericalError);
  }

  TEST_CASE("MC discount factors") {
    PathSet ps;
    ps.dt = 0.5;
    ps.rate_paths = RowMatrix::Constant(2, 5, 5.0);
    ps.mortality_paths = RowMatrix::Zero(2, 5);
    const auto df = mc_discount_factors(ps, 2.0);
    CHECK(df[0] == doctest::Approx(std::exp(-0.1)).epsilon(1e-14));
    ps.rate_paths.setZero();
    CHECK(mc_discount_factors(ps, 1.5)[1] == 1.0);
    CHECK_THROWS_AS(mc_discount_factors(ps, 1.25), DomainError);
    CHECK_THROWS_AS(mc_discount_factors(ps, 3.0), DomainError);
  }

  TEST_CASE("MC discounting agrees with the closed form") {
    ModelParams p;
    const RiskPremiums rp{3.8701, 1.0620, 0, 0};
    SimOptions o;
    o.mortality = false;
    const PathSet ps = simulate_bivariate(p, rp, 20000, 260, 5.0, 2024, o);
    for (double T : {1.0, 5.0}) {
      const auto df = mc_discount_factors(ps, T);
      const double se = num::stddev(df) / std::sqrt(static_cast<double>(df.size()));
      CHECK(std::abs(num::mean(df) - zcb_price_model(p, rp, T)) < 3.0 * se + 2e-4);
    }
  }

  TEST_CASE("mortality index rules") {
    BondSpec spec;
    spec.term = 3;
    std::vector<double> weekly(157, 0.01);
    for (auto rule : {IndexRule::Point, IndexRule::AnnualAverage, IndexRule::AnnualMax}) {
      spec.index_rule = rule;
      const auto idx = mortality_index(weekly, spec);
      REQUIRE(idx.values.size() == 3);
      for (double v : idx.values) CHECK(v == doctest::Approx(0.01));
    }
    weekly[60] = 0.5;  // a spike in year 2
    spec.index_rule = IndexRule::AnnualMax;
    const auto mx = mortality_index(weekly, spec).values;
    CHECK(mx[0] == 0.01);
    CHECK(mx[1] == 0.5);
    CHECK(mx[2] == 0.01);
    for (std::size_t j = 0; j < weekly.size(); ++j) weekly[j] = std::sin(0.1 * static_cast<double>(j)) + 0.001 * j;
    spec.index_rule = IndexRule::AnnualAverage;
    const auto av = mortality_index(weekly, spec).values;
    for (std::size_t k = 0; k < 3; ++k) {
      double s = 0.0;
      for (std::size_t w = 1; w <= 52; ++w) s += weekly[52 * k + w];
      CHECK(av[k] == doctest::Approx(s / 52).epsilon(1e-13));
    }
    spec.index_rule = IndexRule::Point;
    CHECK(mortality_index(weekly, spec).values[1] == weekly[104]);
    CHECK_THROWS_AS(mortality_index(std::vector<double>(100, 0.0), spec), InsufficientDataError);
    CHECK(index_rule_from_string(to_string(IndexRule::AnnualMax)) == IndexRule::AnnualMax);
  }

  TEST_CASE("principal reduction factor") {
    const double a = 1.0, b = 2.0;
    CHECK(prf(std::vector<double>{0.5, 0.9, 1.0}, a, b) == 0.0);
    CHECK(prf(std::vector<double>{0.5, 2.5, 0.0}, a, b) == 1.0);
    CHECK(prf(std::vector<double>{1.5, 0.1, 0.2}, a, b) == doctest::Approx(0.5));
    CHECK(prf(std::vector<double>{1.5, 1.5, 0.2}, a, b) == doctest::Approx(1.0));
    CHECK(prf(std::vector<double>{0.2, 1.25, 0.2}, a, b) == prf(std::vector<double>{1.25, 0.2, 0.2}, a, b));
    CHECK(prf(std::vector<double>{2.0}, a, b) == 1.0);
    CHECK_THROWS_AS(prf(std::vector<double>{1.0}, 2.0, 2.0), DomainError);
  }

  TEST_CASE("baseline week mapping") {
    std::vector<double> base(52);
    std::iota(base.begin(), base.end(), 1.0);
    std::vector<double> excess(105, 0.0), out(105);
    add_baseline(excess, base, out, 1);
    CHECK(out[0] == 52.0);
    CHECK(out[1] == 1.0);
    CHECK(out[52] == 52.0);
    CHECK(out[53] == 1.0);
    add_baseline(excess, base, out, 10);
    CHECK(out[1] == 10.0);
  }

  TEST_CASE("risk measures") {
    std::vector<double> xs(100);
    std::iota(xs.begin(), xs.end(), 1.0);
    const auto r = risk_measures(xs);
    CHECK(r.tails[0].var == doctest::Approx(5.95));
    CHECK(r.tails[0].cte == doctest::Approx(3.0));
    const auto c = risk_measures(std::vector<double>(200, 7.0));
    CHECK(c.mean == 7.0);
    CHECK(c.tails[1].var == 7.0);
    CHECK(c.tails[1].cte == 7.0);
    CHECK_THROWS_AS(risk_measures(std::vector<double>(10, 1.0)), InsufficientDataError);
  }

  TEST_CASE("loss metrics") {
    std::vector<double> v(100, 0.0);
    v[3] = 1.0;
    v[7] = 0.5;
    const auto lm = loss_metrics(v);
    CHECK(lm.pfl == doctest::Approx(0.02));
    CHECK(lm.el == doctest::Approx(0.015));
    CHECK(*lm.cel == doctest::Approx(0.75));
    CHECK_FALSE(loss_metrics(std::vector<double>(5, 0.0)).cel.has_value());
  }

  TEST_CASE("par yield when mortality risk is switched off") {
    ModelParams p;
    p.sigma1 = 0.0;
    p.r0 = 4.0;
    p.m1 = p.theta1 * p.r0;  // constant 4% rate
    BondSpec spec;
    spec.attachment = 0.0;
    spec.exhaustion = 1.0;
    PricingOptions o;
    o.disable_prf = true;
    const double c = fair_coupon(p, {}, spec, flat_baseline(), 200, 1, o);
    const double v = std::exp(-0.04);
    double ann = 0.0;
    for (int k = 1; k <= 5; ++k) ann += std::pow(v, k);
    CHECK(c == doctest::Approx((1 - std::pow(v, 5)) / ann).epsilon(1e-10));
  }

  TEST_CASE("payout paths without principal risk") {
    const ModelParams p;
    BondSpec spec;
    spec.attachment = 10.0;
    spec.exhaustion = 11.0;
    const auto pd = bond_payout_paths(p, std::nullopt, spec, flat_baseline(0.0087), 300, 9);
    const auto df = bond_payout_paths(p, std::nullopt, spec, flat_baseline(0.0087), 300, 9);
    CHECK(pd.total_pv == df.total_pv);
    for (std::size_t i = 0; i < pd.total_pv.size(); ++i) {
      CHECK(pd.prf[i] == 0.0);
      CHECK(pd.total_pv[i] > pd.principal_pv[i]);
    }
    BondSpec z = spec;
    z.coupon_rate = 0.0;
    z.attachment = -2.0;
    z.exhaustion = -1.0;
    const auto lost = bond_payout_paths(p, std::nullopt, z, flat_baseline(0.0087), 100, 9);
    for (double v : lost.total_pv) CHECK(v == 0.0);
  }

  TEST_CASE("fair coupon decreases in attachment and exhaustion") {
    const ModelParams p;
    const RiskPremiums rp{3.8701, 1.0620, 0, 0};
    BondSpec spec;
    const auto base = reference_seasonal_baseline().expected_rate;
    const auto batch = simulate_coupon_batch(p, rp, spec, std::vector<double>(base.begin(), base.end()), 2000, 5);
    double prev_a = 1.0;
    for (double a = 0.0100; a < 0.0160; a += 0.0005) {
      const double c = coupon_from_batch(batch, a, 0.0165);
      CHECK(c <= prev_a);
      prev_a = c;
    }
    double prev_b = 1.0;
    for (double b = 0.0125; b < 0.0200; b += 0.0005) {
      const double c = coupon_from_batch(batch, 0.0120, b);
      CHECK(c <= prev_b);
      prev_b = c;
    }
  }

  TEST_CASE("drift shift of a batch equals re-simulation") {
    const ModelParams p;
    const auto base = reference_seasonal_baseline().expected_rate;
    const std::vector<double> bl(base.begin(), base.end());
    BondSpec spec;
    const RiskPremiums r0{3.8701, 0.0, 0, 0}, r1{3.8701, 1.0620, 0, 0};
    const auto b0 = simulate_coupon_batch(p, r0, spec, bl, 500, 17);
    const auto b1 = simulate_coupon_batch(p, r1, spec, bl, 500, 17);
    const double dm2 = p.alpha2 * p.sigma2 * std::sqrt(1 - p.rho * p.rho) * 1.0620;
    for (double a : {0.0105, 0.012})
      CHECK(coupon_from_batch(b0, a, a + 0.001, dm2) == doctest::Approx(coupon_from_batch(b1, a, a + 0.001)).epsilon(1e-10));
  }
}
