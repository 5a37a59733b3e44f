#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "mortfrac/errors.hpp"
#include "mortfrac/numerics.hpp"
#include "mortfrac/parallel.hpp"
#include "mortfrac/rng.hpp"

using namespace mortfrac;

TEST_SUITE("numerics") {
  TEST_CASE("quadrature handles the x^{2H-2} endpoint singularity") {
    const double v = num::integrate([](double x) { return std::pow(x, -0.4); }, 0.0, 1.0);
    CHECK(v == doctest::Approx(1.0 / 0.6).epsilon(1e-10));
    CHECK(num::integrate([](double x) { return x; }, 1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(num::integrate([](double x) { return x; }, 1.0, 0.0), DomainError);
  }

  TEST_CASE("type-7 quantile") {
    std::vector<double> xs(100);
    std::iota(xs.begin(), xs.end(), 1.0);
    CHECK(num::quantile_linear(xs, 0.05) == doctest::Approx(5.95));
    CHECK(num::quantile_linear(xs, 0.0) == 1.0);
    CHECK(num::quantile_linear(xs, 1.0) == 100.0);
    CHECK_THROWS_AS(num::quantile_linear(std::vector<double>{}, 0.5), InsufficientDataError);
  }

  TEST_CASE("pairwise sum and moments") {
    std::vector<double> xs(1000, 0.1);
    CHECK(num::pairwise_sum(xs) == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(num::variance(std::vector<double>{1, 2, 3, 4}) == doctest::Approx(5.0 / 3.0));
  }

  TEST_CASE("least squares recovers an exact line") {
    std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    const auto f = num::least_squares_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r_squared == doctest::Approx(1.0));
  }

  TEST_CASE("root finding and golden section") {
    CHECK(num::find_root([](double x) { return x * x - 2.0; }, 0.0, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
    CHECK_THROWS_AS(num::find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0), NumericalError);
    const auto g = num::golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 2.0);
    CHECK(g.x == doctest::Approx(0.3).epsilon(1e-8));
  }

  TEST_CASE("two-sample KS: identical laws vs shifted laws") {
    rng::NormalStream a(1), b(2);
    std::vector<double> x(4000), y(4000), z(4000);
    a.fill(x);
    b.fill(y);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = y[i] + 0.3;
    CHECK(num::ks_two_sample(x, y).p_value > 0.01);
    CHECK(num::ks_two_sample(x, z).p_value < 1e-6);
  }

  TEST_CASE("substreams are distinct and reproducible") {
    CHECK(rng::substream_seed(7, 0, rng::Tag::W1) != rng::substream_seed(7, 0, rng::Tag::W2));
    CHECK(rng::substream_seed(7, 0, rng::Tag::W1) != rng::substream_seed(7, 1, rng::Tag::W1));
    rng::NormalStream s1(7, 3, rng::Tag::B1), s2(7, 3, rng::Tag::B1);
    for (int i = 0; i < 10; ++i) CHECK(s1() == s2());
  }

  TEST_CASE("parallel_for covers the range and rethrows") {
    std::vector<int> hit(1000, 0);
    parallel_for(hit.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) hit[i]++;
    });
    CHECK(std::accumulate(hit.begin(), hit.end(), 0) == 1000);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t, std::size_t) { throw NumericalError("x"); }), NumericalError);
  }
}
