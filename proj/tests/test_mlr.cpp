#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "statfidelity/mlr.hpp"

namespace ml = statfidelity::mlr;

namespace {

// analytic score of the weighted multinomial log-likelihood
std::vector<double> score(const std::vector<std::vector<double>>& X,
                          const std::vector<int>& y,
                          const std::vector<double>& w, std::size_t k_levels,
                          const std::vector<double>& theta) {
  const std::size_t n = X.size(), p = X[0].size(), kc = k_levels - 1;
  std::vector<double> g(kc * p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> eta(kc, 0.0);
    double denom = 1.0;
    for (std::size_t k = 0; k < kc; ++k) {
      for (std::size_t j = 0; j < p; ++j) eta[k] += theta[k * p + j] * X[i][j];
      denom += std::exp(eta[k]);
    }
    for (std::size_t k = 0; k < kc; ++k) {
      const double pk = std::exp(eta[k]) / denom;
      const double resid = (y[i] == static_cast<int>(k) + 1 ? 1.0 : 0.0) - pk;
      for (std::size_t j = 0; j < p; ++j)
        g[k * p + j] += w[i] * resid * X[i][j];
    }
  }
  return g;
}

// two groups, binary outcome: the MLE has a closed form
const std::vector<std::vector<double>> kX = {
    {1.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {1.0, 1.0}};
const std::vector<int> kY = {0, 1, 0, 1};
const std::vector<double> kW = {70.0, 30.0, 40.0, 60.0};
const std::vector<std::string> kTerms = {"(Intercept)", "x"};
const std::vector<std::string> kLevels = {"A", "B"};

std::vector<ml::Observation> three_level_records() {
  std::vector<ml::Observation> rows;
  const char* outcomes[] = {"Low", "Mid", "High"};
  int idx = 0;
  for (int year = 2006; year <= 2011; ++year)
    for (const char* venue : {"SOUPS", "CCS", "PETS"})
      for (int o = 0; o < 3; ++o) {
        ml::Observation r;
        r.outcome = outcomes[o];
        r.year = year;
        r.venue = venue;
        // deterministic counts with real venue and year structure
        r.weight = 3.0 + ((idx * 7 + o * 5 + year) % 11) +
                   (venue[0] == 'S' && o == 2 ? 6.0 : 0.0) +
                   (year >= 2009 && o == 1 ? 4.0 : 0.0);
        rows.push_back(r);
        ++idx;
      }
  return rows;
}

}  // namespace

TEST_CASE("binary logit recovers the closed-form solution") {
  const auto m = ml::fit_design(kX, kY, kW, kTerms, kLevels);
  REQUIRE(m.n_contrasts == 1);
  REQUIRE(m.term_names.size() == 2);
  CHECK(m.coef(0, 0) == doctest::Approx(std::log(30.0 / 70.0)).epsilon(1e-9));
  CHECK(m.coef(0, 1) ==
        doctest::Approx(std::log((60.0 / 40.0) / (30.0 / 70.0))).epsilon(1e-9));
  const double ll = 70.0 * std::log(0.7) + 30.0 * std::log(0.3) +
                    40.0 * std::log(0.4) + 60.0 * std::log(0.6);
  CHECK(m.log_likelihood == doctest::Approx(ll).epsilon(1e-12));
  CHECK(m.n == 200);
  CHECK_FALSE(m.separation_warning);

  // grouped-logistic information has a closed form too
  CHECK(std::sqrt(m.covariance[0]) == doctest::Approx(std::sqrt(24.0 / 504.0))
                                          .epsilon(1e-6));
  CHECK(std::sqrt(m.covariance[3]) == doctest::Approx(std::sqrt(45.0 / 504.0))
                                          .epsilon(1e-6));
}

TEST_CASE("score vanishes at the reported optimum") {
  const auto recs = three_level_records();
  ml::PredictorSpec spec;
  const auto m = ml::fit_multinomial(recs, spec, "Low");

  // rebuild the design exactly as the model encodes it
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::vector<double> w;
  for (const auto& r : recs) {
    std::vector<double> row = {1.0, r.year - m.year_center};
    for (const auto& lvl : m.venue_dummy_levels)
      row.push_back(r.venue == lvl ? 1.0 : 0.0);
    X.push_back(row);
    int yi = 0;
    for (std::size_t k = 0; k < m.outcome_levels.size(); ++k)
      if (m.outcome_levels[k] == r.outcome) yi = static_cast<int>(k);
    y.push_back(yi);
    w.push_back(r.weight);
  }
  const auto g = score(X, y, w, m.outcome_levels.size(), m.coefficients);
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::fabs(v));
  CHECK(gmax < 1e-6);

  // and the covariance inverts the finite-difference information
  const auto info = oracle::mlr_info_fd(X, y, w, m.outcome_levels.size(),
                                        m.coefficients, 1e-5);
  const auto cov = oracle::invert(info, g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double want = cov[i * g.size() + j];
      const double got = m.covariance[i * g.size() + j];
      CHECK(std::fabs(got - want) <=
            1e-4 * std::max({std::fabs(want), std::fabs(got), 1e-8}));
    }
}

TEST_CASE("reference level changes reparameterize, not refit quality") {
  const auto recs = three_level_records();
  ml::PredictorSpec spec;
  const auto a = ml::fit_multinomial(recs, spec, "Low");
  const auto b = ml::fit_multinomial(recs, spec, "High");
  CHECK(a.reference_level == "Low");
  CHECK(b.reference_level == "High");
  CHECK(a.log_likelihood == doctest::Approx(b.log_likelihood).epsilon(1e-9));

  ml::GridPoint at{2008.0, "CCS"};
  const auto pa = ml::predict(a, at);
  const auto pb = ml::predict(b, at);
  double sum = 0.0;
  for (const auto& [level, prob] : pa) {
    CHECK(prob == doctest::Approx(pb.at(level)).epsilon(1e-6));
    sum += prob;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(ml::fit_multinomial(recs, spec, "Absent"),
                  std::invalid_argument);
}

TEST_CASE("likelihood ratio tests between nested fits") {
  const auto recs = three_level_records();
  ml::PredictorSpec full_spec;
  ml::PredictorSpec null_spec;
  null_spec.include_year = false;
  null_spec.include_venue = false;
  ml::PredictorSpec year_spec;
  year_spec.include_venue = false;

  const auto full = ml::fit_multinomial(recs, full_spec, "Low");
  const auto null_m = ml::fit_multinomial(recs, null_spec, "Low");
  const auto year_m = ml::fit_multinomial(recs, year_spec, "Low");

  const auto vs_null = ml::lr_test(full, null_m);
  CHECK(vs_null.chi_sq >= 0.0);
  CHECK(vs_null.df == static_cast<int>(2 * (full.term_names.size() - 1)));
  CHECK(vs_null.p >= 0.0);
  CHECK(vs_null.p <= 1.0);
  CHECK(vs_null.mcfadden_r2 ==
        doctest::Approx(1.0 - full.log_likelihood / null_m.log_likelihood));

  const auto vs_year = ml::lr_test(full, year_m);
  CHECK(vs_year.df == static_cast<int>(2 * (full.term_names.size() - 2)));
  CHECK(vs_year.chi_sq <= vs_null.chi_sq + 1e-9);

  // swapped arguments are not nested
  CHECK_THROWS_AS(ml::lr_test(null_m, full), std::invalid_argument);
}

TEST_CASE("rank-deficient designs are rejected by name") {
  const std::vector<std::vector<double>> X = {
      {1.0, 2.0, 2.0}, {1.0, 3.0, 3.0}, {1.0, 5.0, 5.0}, {1.0, 7.0, 7.0}};
  const std::vector<int> y = {0, 1, 0, 1};
  const std::vector<double> w = {5.0, 5.0, 5.0, 5.0};
  try {
    ml::fit_design(X, y, w, {"(Intercept)", "left", "right"}, {"A", "B"});
    FAIL("expected rank-deficiency throw");
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    CHECK(what.find("rank deficient") != std::string::npos);
    // pivoting may blame either of the two identical columns
    CHECK((what.find("left") != std::string::npos ||
           what.find("right") != std::string::npos));
  }
}

TEST_CASE("complete separation raises the warning") {
  const std::vector<std::vector<double>> X = {{1.0, 0.0}, {1.0, 1.0}};
  const std::vector<int> y = {0, 1};
  const std::vector<double> w = {20.0, 20.0};
  const auto m = ml::fit_design(X, y, w, {"(Intercept)", "x"}, {"A", "B"});
  CHECK(m.separation_warning);
  CHECK_FALSE(m.warnings.empty());
}

TEST_CASE("weights replicate rows exactly") {
  const auto weighted = ml::fit_design(kX, kY, kW, kTerms, kLevels);
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::vector<double> w;
  for (std::size_t i = 0; i < kX.size(); ++i)
    for (int rep = 0; rep < static_cast<int>(kW[i]); ++rep) {
      X.push_back(kX[i]);
      y.push_back(kY[i]);
      w.push_back(1.0);
    }
  const auto expanded = ml::fit_design(X, y, w, kTerms, kLevels);
  CHECK(weighted.log_likelihood ==
        doctest::Approx(expanded.log_likelihood).epsilon(1e-10));
  for (std::size_t j = 0; j < weighted.coefficients.size(); ++j)
    CHECK(weighted.coefficients[j] ==
          doctest::Approx(expanded.coefficients[j]).epsilon(1e-7));
}

TEST_CASE("coefficient table and effect display") {
  const auto recs = three_level_records();
  ml::PredictorSpec spec;
  spec.center_year = true;
  const auto m = ml::fit_multinomial(recs, spec, "Low");

  const auto rows = ml::coefficient_table(m, "High");
  REQUIRE(rows.size() == m.term_names.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    CHECK(rows[j].term == m.term_names[j]);
    CHECK(rows[j].se > 0.0);
    CHECK(rows[j].odds_ratio == doctest::Approx(std::exp(rows[j].b)));
    CHECK(rows[j].or_ci_lo < rows[j].odds_ratio);
    CHECK(rows[j].or_ci_hi > rows[j].odds_ratio);
    CHECK(rows[j].p >= 0.0);
    CHECK(rows[j].p <= 1.0);
  }
  CHECK_THROWS_AS(ml::coefficient_table(m, "Low"), std::invalid_argument);
  CHECK_THROWS_AS(ml::coefficient_table(m, "Absent"), std::invalid_argument);

  std::vector<ml::GridPoint> grid;
  for (int year = 2006; year <= 2011; ++year)
    grid.push_back({static_cast<double>(year), "SOUPS"});
  const auto disp = ml::effect_display(m, grid, 0.95);
  CHECK(disp.grid.size() == grid.size());
  REQUIRE(disp.curves.size() == 3);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    for (const auto& [level, bands] : disp.curves) {
      REQUIRE(bands.size() == grid.size());
      const auto& band = bands[g];
      CHECK(band.lo >= 0.0);
      CHECK(band.hi <= 1.0);
      CHECK(band.lo <= band.probability);
      CHECK(band.hi >= band.probability);
      sum += band.probability;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("venue collapsing and yearless specs") {
  const auto recs = three_level_records();
  ml::PredictorSpec spec;
  spec.collapse_venues = true;
  const auto m = ml::fit_multinomial(recs, spec, "Low");
  // SOUPS vs OTHER: exactly one venue dummy
  CHECK(m.venue_dummy_levels.size() == 1);
  CHECK(m.term_names.size() == 3);

  const auto p_soups = ml::predict(m, {2008.0, "SOUPS"});
  const auto p_ccs = ml::predict(m, {2008.0, "CCS"});
  const auto p_pets = ml::predict(m, {2008.0, "PETS"});
  for (const auto& [level, prob] : p_ccs)
    CHECK(prob == doctest::Approx(p_pets.at(level)).epsilon(1e-12));
  CHECK(p_soups.at("High") != doctest::Approx(p_ccs.at("High")));
}
