#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "mortfrac/calibrate.hpp"
#include "mortfrac/data.hpp"
#include "mortfrac/errors.hpp"

using namespace mortfrac;

namespace {
std::vector<double> seasonal() {
  const auto b = reference_seasonal_baseline().expected_rate;
  return {b.begin(), b.end()};
}
}  // namespace

TEST_SUITE("calibrate") {
  TEST_CASE("gamma1 fixed point and monotonicity") {
    const ModelParams p;
    MarketQuote q;
    q.target_yield = std::pow(zcb_price_model(p, std::nullopt, 5.0), -1.0 / 5.0) - 1.0;
    CHECK(std::abs(calibrate_gamma1(p, q)) < 1e-9);
    double prev = -1e9;
    for (double i : {0.02, 0.025, 0.03, 0.035}) {
      q.target_yield = i;
      const double g = calibrate_gamma1(p, q);
      RiskPremiums rp;
      rp.gamma1 = g;
      CHECK(std::abs(zcb_price_model(p, rp, 5.0) - std::pow(1 + i, -5.0)) < 1e-10);
      CHECK(g > prev);
      prev = g;
    }
    q.target_yield = 0.9;
    CHECK_THROWS_AS(calibrate_gamma1(p, q, -1.0, 1.0), NumericalError);
  }

  TEST_CASE("attachment percentile") {
    IndexSample s;
    s.n_paths = 10000;
    s.n_periods = 1;
    s.values.resize(10000);
    std::iota(s.values.begin(), s.values.end(), 1.0);
    CHECK(calibrate_attachment(s, 1.0) == 1.0);
    CHECK(calibrate_attachment(s, 0.0106) == doctest::Approx(9894.0106));
    IndexSample two;
    two.n_paths = 3;
    two.n_periods = 2;
    two.values = {1, 5, 2, 3, 4, 0};
    CHECK(calibrate_attachment(two, 1.0, AttachmentRule::PerPathMax) == 3.0);
    CHECK(calibrate_attachment(two, 1.0, AttachmentRule::Pooled) == 0.0);
  }

  TEST_CASE("exhaustion from a constructed fixed point") {
    const double a = 1.0, b0 = 3.0;
    IndexSample s;
    s.n_paths = 1000;
    s.n_periods = 2;
    for (std::size_t i = 0; i < s.n_paths; ++i) {
      const bool hit = i % 10 == 0;
      s.values.push_back(0.5);
      s.values.push_back(hit ? a + (b0 - a) / 2 : 0.2);
    }
    CHECK(conditional_mean_prf(s, a, b0) == doctest::Approx(0.5));
    CHECK(calibrate_exhaustion(s, a, 0.05, 0.1) == doctest::Approx(b0).epsilon(1e-10));
    const double full = calibrate_exhaustion(s, a, 0.1, 0.1);
    CHECK(full > a);
    CHECK(full - a < 1e-9);
    CHECK_THROWS_AS(calibrate_exhaustion(s, a, 0.2, 0.1), DomainError);
  }

  TEST_CASE("round trip of the loss layer") {
    const ModelParams p;
    BondSpec spec;
    const auto bl = seasonal();
    const auto sample = simulate_index_sample(p, std::nullopt, spec, bl, 10000, 2718);
    const double a = calibrate_attachment(sample, 0.0106, AttachmentRule::PerPathMax);
    const double b = calibrate_exhaustion(sample, a, 0.0075, 0.0106);
    std::vector<double> prfs(sample.n_paths);
    for (std::size_t i = 0; i < sample.n_paths; ++i) prfs[i] = prf(sample.row(i), a, b);
    const auto lm = loss_metrics(prfs);
    CHECK(lm.pfl == doctest::Approx(0.0106).epsilon(0.03));
    CHECK(lm.el == doctest::Approx(0.0075).epsilon(0.03));
    CHECK(*lm.cel == doctest::Approx(0.0075 / 0.0106).epsilon(0.03));
  }

  TEST_CASE("gamma2 grid: fixed point and monotone response") {
    const ModelParams p;
    const auto bl = seasonal();
    BondSpec spec;
    spec.attachment = 0.0140;
    spec.exhaustion = 0.0150;
    const RiskPremiums rp{3.8701, 0.0, 0, 0};
    const auto batch = simulate_coupon_batch(p, rp, spec, bl, 2000, 8);
    const double c0 = coupon_from_batch(batch, spec.attachment, spec.exhaustion);
    const auto at0 = calibrate_gamma2(batch, p, spec.attachment, spec.exhaustion, c0);
    CHECK(at0.gamma2 == 0.0);
    const double per = p.alpha2 * p.sigma2 * std::sqrt(1 - p.rho * p.rho);
    const double c1 = coupon_from_batch(batch, spec.attachment, spec.exhaustion, per * 1.062);
    const auto g1 = calibrate_gamma2(batch, p, spec.attachment, spec.exhaustion, c1);
    CHECK(g1.gamma2 == doctest::Approx(1.062).epsilon(0.01));
    const auto g2 = calibrate_gamma2(batch, p, spec.attachment, spec.exhaustion, c1 + 0.0025);
    CHECK(g2.gamma2 > g1.gamma2);
    BondSpec mx = spec;
    mx.index_rule = IndexRule::AnnualMax;
    const auto bmax = simulate_coupon_batch(p, rp, mx, bl, 100, 8);
    CHECK_FALSE(bmax.shift_exact);
    CHECK_THROWS_AS(calibrate_gamma2(bmax, p, spec.attachment, spec.exhaustion, 0.03), DomainError);
  }

  TEST_CASE("full calibration is reproducible") {
    const ModelParams p;
    QCalibrationOptions o;
    o.n_paths = 2000;
    o.gamma2_step = 0.01;
    const auto bl = seasonal();
    const auto r1 = calibrate_q(p, MarketQuote{}, bl, o);
    const auto r2 = calibrate_q(p, MarketQuote{}, bl, o);
    CHECK(r1.gamma1 == r2.gamma1);
    CHECK(r1.attachment == r2.attachment);
    CHECK(r1.exhaustion == r2.exhaustion);
    CHECK(r1.gamma2 == r2.gamma2);
    CHECK(r1.exhaustion > r1.attachment);
  }

  TEST_CASE("quote validation") {
    MarketQuote q;
    q.expected_loss = 0.02;
    CHECK_THROWS_AS(q.validate(), DomainError);
  }
}
