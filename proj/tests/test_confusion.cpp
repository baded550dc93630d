#include <cmath>

#include "doctest.h"
#include "statfidelity/confusion.hpp"

namespace cp = statfidelity::corpus;

namespace {

double r2(double x) { return std::round(x * 100.0) / 100.0; }

}  // namespace

TEST_CASE("error detection matrix reproduces published metrics") {
  const auto m = cp::confusion_metrics(29, 5, 0, 218);
  CHECK(r2(m.accuracy) == doctest::Approx(0.98));
  CHECK(r2(m.acc_ci_lo) == doctest::Approx(0.95));
  CHECK(r2(m.acc_ci_hi) == doctest::Approx(0.99));
  CHECK(r2(m.nir) == doctest::Approx(0.88));
  CHECK(m.p_acc_gt_nir < 0.001);
  CHECK(r2(m.sensitivity) == doctest::Approx(1.00));
  CHECK(r2(m.specificity) == doctest::Approx(0.98));
  CHECK(r2(m.ppv) == doctest::Approx(0.85));
  CHECK(r2(m.f1) == doctest::Approx(0.92));
}

TEST_CASE("significance matrix reproduces published metrics") {
  const auto m = cp::confusion_metrics(191, 12, 1, 47);
  CHECK(r2(m.accuracy) == doctest::Approx(0.95));
  CHECK(r2(m.acc_ci_lo) == doctest::Approx(0.91));
  CHECK(r2(m.acc_ci_hi) == doctest::Approx(0.97));
  CHECK(r2(m.nir) == doctest::Approx(0.76));
  CHECK(m.p_acc_gt_nir < 0.001);
  CHECK(r2(m.sensitivity) == doctest::Approx(0.99));
  CHECK(r2(m.specificity) == doctest::Approx(0.80));
  CHECK(r2(m.ppv) == doctest::Approx(0.94));
  CHECK(r2(m.f1) == doctest::Approx(0.97));
}

TEST_CASE("exact cell-derived ratios") {
  const auto m = cp::confusion_metrics(191, 12, 1, 47);
  CHECK(m.accuracy == doctest::Approx(238.0 / 251.0).epsilon(1e-14));
  CHECK(m.nir == doctest::Approx(192.0 / 251.0).epsilon(1e-14));
  CHECK(m.sensitivity == doctest::Approx(191.0 / 192.0).epsilon(1e-14));
  CHECK(m.specificity == doctest::Approx(47.0 / 59.0).epsilon(1e-14));
  CHECK(m.ppv == doctest::Approx(191.0 / 203.0).epsilon(1e-14));
  const double f1 = 2.0 * m.ppv * m.sensitivity / (m.ppv + m.sensitivity);
  CHECK(m.f1 == doctest::Approx(f1).epsilon(1e-14));
  CHECK(m.acc_ci_lo < m.accuracy);
  CHECK(m.acc_ci_hi > m.accuracy);
}

TEST_CASE("degenerate margins yield NaN, not crashes") {
  // no reference positives: sensitivity undefined
  auto m = cp::confusion_metrics(0, 3, 0, 10);
  CHECK(std::isnan(m.sensitivity));
  CHECK_FALSE(std::isnan(m.specificity));

  // no predicted positives: ppv and f1 undefined
  m = cp::confusion_metrics(0, 0, 4, 10);
  CHECK(std::isnan(m.ppv));
  CHECK(std::isnan(m.f1));

  // no reference negatives: specificity undefined
  m = cp::confusion_metrics(5, 0, 1, 0);
  CHECK(std::isnan(m.specificity));
}

TEST_CASE("perfect classifier hits the CI boundary") {
  const auto m = cp::confusion_metrics(20, 0, 0, 30);
  CHECK(m.accuracy == 1.0);
  CHECK(m.acc_ci_hi == 1.0);
  CHECK(m.acc_ci_lo > 0.9);
  CHECK(m.f1 == doctest::Approx(1.0));
}
