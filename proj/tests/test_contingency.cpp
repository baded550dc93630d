#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "statfidelity/contingency.hpp"

namespace cp = statfidelity::corpus;

namespace {

cp::ContingencyTable make_table(std::vector<std::vector<long long>> counts) {
  cp::ContingencyTable t;
  t.counts = std::move(counts);
  for (std::size_t i = 0; i < t.counts.size(); ++i)
    t.row_labels.push_back("r" + std::to_string(i));
  for (std::size_t j = 0; j < t.counts[0].size(); ++j)
    t.col_labels.push_back("c" + std::to_string(j));
  return t;
}

// paper-level outcome x MCC-use table: chi2(3) = 88.803
const cp::ContingencyTable kOutcomeByMcc =
    make_table({{27, 12, 6, 69}, {58, 25, 16, 0}});

// restricted to complete papers: chi2(2) = 0.197
const cp::ContingencyTable kCompleteByMcc =
    make_table({{27, 12, 6}, {58, 25, 16}});

}  // namespace

TEST_CASE("table validation and sums") {
  auto t = make_table({{1, 2}, {3, 4}});
  CHECK_NOTHROW(t.validate());
  CHECK(t.row_sum(0) == 3);
  CHECK(t.col_sum(1) == 6);
  CHECK(t.total() == 10);

  t.counts[1][1] = -1;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t.counts[1][1] = 4;
  t.counts[1].push_back(9);
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);

  auto one_row = make_table({{1, 2}});
  CHECK_THROWS_AS(one_row.validate(), std::invalid_argument);
}

TEST_CASE("expected counts") {
  const auto t = make_table({{10, 20}, {30, 40}});
  const auto e = cp::expected_counts(t);
  CHECK(e[0][0] == doctest::Approx(30.0 * 40.0 / 100.0));
  CHECK(e[1][1] == doctest::Approx(70.0 * 60.0 / 100.0));
  CHECK_FALSE(cp::any_expected_below(t, 5.0));
  CHECK(cp::any_expected_below(make_table({{1, 1}, {1, 20}}), 5.0));
}

TEST_CASE("chi-square independence on the published tables") {
  const auto full = cp::chisq_independence(kOutcomeByMcc);
  CHECK(full.method == cp::AssocMethod::ChiSquare);
  CHECK(full.statistic.value() == doctest::Approx(88.803).epsilon(5e-5));
  CHECK(full.df.value() == 3);
  CHECK(full.p < 0.001);
  CHECK(full.cramers_v == doctest::Approx(0.646).epsilon(1e-3));
  CHECK(full.v_ci_lo == doctest::Approx(0.503).epsilon(2e-3));
  CHECK(full.v_ci_hi == doctest::Approx(0.773).epsilon(2e-3));
  CHECK_FALSE(full.expected_count_warning);

  const auto restricted = cp::chisq_independence(kCompleteByMcc);
  CHECK(restricted.statistic.value() == doctest::Approx(0.197).epsilon(5e-3));
  CHECK(restricted.df.value() == 2);
  CHECK(restricted.p == doctest::Approx(0.906).epsilon(1e-3));
  CHECK(restricted.cramers_v == doctest::Approx(0.037).epsilon(2e-2));
  CHECK(restricted.v_ci_lo == 0.0);

  auto zero_margin = make_table({{0, 0}, {3, 4}});
  CHECK_THROWS_AS(cp::chisq_independence(zero_margin), std::invalid_argument);
}

TEST_CASE("cramers v basics") {
  CHECK(cp::cramers_v_from_chisq(88.803, 213, 2, 4) ==
        doctest::Approx(std::sqrt(88.803 / 213.0)).epsilon(1e-12));
  // CI bounds stay in [0, 1] even for extreme association
  const auto extreme = make_table({{50, 0}, {0, 50}});
  const auto ci = cp::cramers_v_ci(extreme);
  CHECK(ci.first >= 0.0);
  CHECK(ci.second <= 1.0);
  CHECK(ci.first <= ci.second);
}

TEST_CASE("bootstrap CI is deterministic and ordered") {
  const auto a = cp::cramers_v_ci_bootstrap(kOutcomeByMcc, 400, 7);
  const auto b = cp::cramers_v_ci_bootstrap(kOutcomeByMcc, 400, 7);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first >= 0.0);
  CHECK(a.second <= 1.0);
  CHECK(a.first < a.second);
  // roughly where the analytic CI sits
  CHECK(a.first == doctest::Approx(0.55).epsilon(0.15));
  CHECK(a.second == doctest::Approx(0.72).epsilon(0.15));
  CHECK_THROWS_AS(cp::cramers_v_ci_bootstrap(kOutcomeByMcc, 99, 7),
                  std::invalid_argument);
}

TEST_CASE("monte carlo fisher matches exact enumeration on 2x2") {
  struct Case {
    long long n11, n12, n21, n22;
  };
  for (const Case c : {Case{3, 7, 9, 2}, Case{1, 9, 10, 2}, Case{5, 5, 5, 5},
                       Case{12, 2, 3, 11}}) {
    const double exact = oracle::fisher_exact_2x2(c.n11, c.n12, c.n21, c.n22);
    const auto t = make_table({{c.n11, c.n12}, {c.n21, c.n22}});
    const auto mc = cp::fisher_exact_mc(t, 200000, 42);
    CHECK(mc.method == cp::AssocMethod::FisherMC);
    REQUIRE(mc.mc_standard_error.has_value());
    // MC estimate within 4 standard errors of the exact tail probability
    CHECK(std::fabs(mc.p - exact) <= 4.0 * *mc.mc_standard_error + 1e-9);
  }
}

TEST_CASE("fisher mc parallel equals serial and is seed-stable") {
  const auto t = make_table({{19, 10, 5, 43}, {0, 1, 0, 3}, {1, 1, 0, 6}});
  const auto par = cp::fisher_exact_mc(t, 20000, 123);
  const auto ser = cp::fisher_exact_mc_serial(t, 20000, 123);
  CHECK(par.p == ser.p);
  CHECK(*par.mc_standard_error == *ser.mc_standard_error);

  const auto again = cp::fisher_exact_mc(t, 20000, 123);
  CHECK(par.p == again.p);

  CHECK(par.expected_count_warning);
  CHECK_FALSE(par.statistic.has_value());
  CHECK_FALSE(par.df.has_value());
  CHECK(*par.mc_standard_error ==
        doctest::Approx(std::sqrt(par.p * (1.0 - par.p) / 20000.0))
            .epsilon(1e-12));
  CHECK_THROWS_AS(cp::fisher_exact_mc(t, 999, 1), std::invalid_argument);
}

TEST_CASE("fisher mc degenerate association") {
  // identical rows: every permutation table is at least as probable
  const auto t = make_table({{5, 5}, {5, 5}});
  const auto mc = cp::fisher_exact_mc(t, 2000, 9);
  CHECK(mc.p == doctest::Approx(1.0).epsilon(0.05));
}
