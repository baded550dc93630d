#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace statfidelity::mlr {

// One analysis row; weight lets aggregated counts stand in for
// repeated identical observations.
struct Observation {
  std::string outcome;
  double year = 0.0;
  std::string venue;
  double weight = 1.0;
};

struct PredictorSpec {
  bool include_year = true;
  bool center_year = false;
  bool include_venue = true;
  // Collapse every venue except `collapse_keep` into "OTHER".
  bool collapse_venues = false;
  std::string collapse_keep = "SOUPS";
  std::optional<std::string> venue_reference;
};

struct MLRModel {
  std::vector<std::string> outcome_levels;  // reference level first
  std::string reference_level;
  std::vector<std::string> term_names;      // P predictors, intercept first
  std::size_t n_contrasts = 0;              // K - 1
  std::vector<double> coefficients;         // (K-1) x P, row-major
  std::vector<double> covariance;           // ((K-1)P)^2, row-major
  double log_likelihood = 0.0;
  long long n = 0;
  bool separation_warning = false;
  std::vector<std::string> warnings;
  // encoding carried for prediction
  PredictorSpec spec;
  std::vector<std::string> venue_dummy_levels;
  double year_center = 0.0;
  double year_min = 0.0, year_max = 0.0;

  double coef(std::size_t contrast, std::size_t term) const {
    return coefficients[contrast * term_names.size() + term];
  }
};

struct CoefficientRow {
  std::string term;
  double b = 0.0, se = 0.0, z = 0.0, p = 1.0;
  double odds_ratio = 1.0, or_ci_lo = 1.0, or_ci_hi = 1.0;
};

struct FitComparison {
  double chi_sq = 0.0;
  int df = 0;
  double p = 1.0;
  double mcfadden_r2 = 0.0;
};

// Damped-Newton maximum likelihood on the full (K-1)P parameter
// vector; converged when max |score| < 1e-8 or the relative
// log-likelihood change drops below 1e-12. Covariance is the inverse
// observed information. Throws on rank-deficient designs (naming the
// collinear columns); flags separation (any |b| > 15) as a warning.
MLRModel fit_multinomial(const std::vector<Observation>& records,
                         const PredictorSpec& spec,
                         const std::string& reference = "");

// Same fit on an explicit design matrix (intercept included by the
// caller). y holds outcome indices, 0 = reference.
MLRModel fit_design(const std::vector<std::vector<double>>& X,
                    const std::vector<int>& y, const std::vector<double>& w,
                    const std::vector<std::string>& term_names,
                    const std::vector<std::string>& outcome_levels);

// chi_sq = 2 (ll_full - ll_nested), df = parameter difference,
// McFadden R^2 = 1 - ll_full/ll_nested. Throws if not nested.
FitComparison lr_test(const MLRModel& full, const MLRModel& nested);

std::vector<CoefficientRow> coefficient_table(const MLRModel& model,
                                              const std::string& outcome_level);

struct GridPoint {
  double year = 0.0;
  std::string venue;
};

struct EffectBand {
  double probability = 0.0;
  double lo = 0.0, hi = 0.0;
};

struct EffectDisplay {
  std::vector<GridPoint> grid;
  // per outcome level, one band per grid point (reference included)
  std::map<std::string, std::vector<EffectBand>> curves;
  std::vector<std::string> warnings;
};

// Predicted category probabilities over the grid with delta-method
// bands on each category logit, transformed back.
EffectDisplay effect_display(const MLRModel& model,
                             const std::vector<GridPoint>& grid,
                             double confidence);

// Probabilities at one point (softmax of the linear predictors),
// keyed by outcome level.
std::map<std::string, double> predict(const MLRModel& model,
                                      const GridPoint& at);

}  // namespace statfidelity::mlr
