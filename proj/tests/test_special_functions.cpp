#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "statfidelity/special_functions.hpp"

namespace k = statfidelity::kernel;

namespace {

const std::vector<double> kShapes = {0.5, 0.9, 1.0, 1.7, 3.0, 8.0,
                                     21.0, 55.0, 120.0, 200.0};
const std::vector<double> kFractions = {0.02, 0.1, 0.25, 0.5,
                                        0.75, 0.9, 0.98};

}  // namespace

TEST_CASE("log_gamma against the standard library") {
  for (double x : {0.5, 1.0, 1.5, 4.2, 30.0, 171.5, 1000.0}) {
    const double ref = static_cast<double>(std::lgamma((long double)x));
    CHECK(k::log_gamma(x) ==
          doctest::Approx(ref).epsilon(1e-14).scale(std::fabs(ref) + 1.0));
  }
}

TEST_CASE("regularized incomplete beta matches quadrature") {
  for (double a : kShapes)
    for (double b : kShapes)
      for (double f : kFractions) {
        // spread evaluation points around the mean a/(a+b)
        const double x = f * 0.4 + 0.6 * f * a / (a + b);
        const double got = k::reg_inc_beta(a, b, x);
        const double want = oracle::inc_beta(a, b, x);
        CHECK(std::fabs(got - want) <= 1e-11);
      }
}

TEST_CASE("incomplete beta edge behavior") {
  CHECK(k::reg_inc_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(k::reg_inc_beta(2.0, 3.0, 1.0) == 1.0);
  CHECK(k::reg_inc_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-14));
  // symmetry
  for (double a : {0.7, 2.0, 9.0})
    for (double x : {0.1, 0.4, 0.8})
      CHECK(k::reg_inc_beta(a, 3.1, x) ==
            doctest::Approx(1.0 - k::reg_inc_beta(3.1, a, 1.0 - x))
                .epsilon(5e-13)
                .scale(1.0));
  CHECK_THROWS_AS(k::reg_inc_beta(-1.0, 2.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(k::reg_inc_beta(1.0, 2.0, 1.5), std::domain_error);
}

TEST_CASE("incomplete beta inverse round-trips") {
  for (double a : {0.8, 2.0, 14.0, 191.0})
    for (double b : {0.6, 5.0, 29.0, 240.0})
      for (double q : {1e-6, 0.025, 0.2, 0.5, 0.8, 0.975, 1.0 - 1e-6}) {
        const double x = k::reg_inc_beta_inv(a, b, q);
        CHECK(k::reg_inc_beta(a, b, x) == doctest::Approx(q).epsilon(1e-9));
      }
  CHECK(k::reg_inc_beta_inv(3.0, 4.0, 0.0) == 0.0);
  CHECK(k::reg_inc_beta_inv(3.0, 4.0, 1.0) == 1.0);
}

TEST_CASE("regularized incomplete gamma matches series and quadrature") {
  for (double s : kShapes)
    for (double r : {0.125, 0.5, 0.9, 1.0, 1.1, 2.0, 5.0}) {
      const double x = s * r;
      const double got = k::reg_inc_gamma_lower(s, x);
      const double want = oracle::inc_gamma_lower(s, x);
      CHECK(std::fabs(got - want) <= 1e-11);
      CHECK(k::reg_inc_gamma_lower(s, x) + k::reg_inc_gamma_upper(s, x) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  CHECK(k::reg_inc_gamma_lower(3.0, 0.0) == 0.0);
  CHECK_THROWS_AS(k::reg_inc_gamma_lower(0.0, 1.0), std::domain_error);
}

TEST_CASE("normal cdf and quantile") {
  CHECK(k::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(k::normal_cdf(1.959963984540054) ==
        doctest::Approx(0.975).epsilon(1e-12));
  CHECK(k::normal_cdf(-8.0) == doctest::Approx(6.22096057e-16).epsilon(1e-6));
  for (double q : {1e-10, 1e-4, 0.025, 0.31, 0.5, 0.69, 0.975, 1.0 - 1e-4}) {
    CHECK(k::normal_cdf(k::normal_quantile(q)) ==
          doctest::Approx(q).epsilon(1e-12));
  }
  CHECK(k::normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("noncentral chi-square cdf") {
  // ncp = 0 degenerates to the central distribution
  for (double df : {1.0, 2.0, 7.0})
    for (double x : {0.3, 2.0, 11.0})
      CHECK(k::noncentral_chisq_cdf(df, 0.0, x) ==
            doctest::Approx(k::reg_inc_gamma_lower(df / 2.0, x / 2.0))
                .epsilon(1e-12));
  // Poisson mixture summed from j = 0 with the oracle gamma
  for (double df : {1.0, 2.0, 5.0, 10.0})
    for (double ncp : {0.5, 3.0, 12.0, 40.0})
      for (double x : {2.0, 8.0, 25.0, 60.0}) {
        long double sum = 0.0L;
        long double lw = -ncp / 2.0;  // log Poisson weight at j = 0
        for (int j = 0; j < 500; ++j) {
          sum += std::exp(lw) *
                 (long double)oracle::inc_gamma_lower(df / 2.0 + j, x / 2.0);
          lw += std::log((long double)ncp / 2.0) - std::log((long double)j + 1.0);
          if (lw < -60.0L && j > ncp) break;
        }
        CHECK(std::fabs(k::noncentral_chisq_cdf(df, ncp, x) -
                        (double)sum) <= 1e-10);
      }
}

TEST_CASE("noncentrality bracket inverts the cdf") {
  const auto wide = k::noncentral_chisq_ncp_interval(88.803, 3.0, 0.95);
  CHECK(k::noncentral_chisq_cdf(3.0, wide.lo, 88.803) ==
        doctest::Approx(0.975).epsilon(1e-7));
  CHECK(k::noncentral_chisq_cdf(3.0, wide.hi, 88.803) ==
        doctest::Approx(0.025).epsilon(1e-7));
  // statistic compatible with independence: lower bound clamps to zero
  const auto narrow = k::noncentral_chisq_ncp_interval(0.197, 2.0, 0.95);
  CHECK(narrow.lo == 0.0);
  CHECK(k::noncentral_chisq_cdf(2.0, narrow.hi, 0.197) ==
        doctest::Approx(0.025).epsilon(1e-7));
}
