#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace statfidelity::corpus {

struct ContingencyTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<long long>> counts;

  std::size_t rows() const { return counts.size(); }
  std::size_t cols() const { return counts.empty() ? 0 : counts[0].size(); }
  long long row_sum(std::size_t i) const;
  long long col_sum(std::size_t j) const;
  long long total() const;
  // Throws std::invalid_argument on shape/label mismatch, dimensions
  // below 2x2, or negative counts.
  void validate() const;
};

enum class AssocMethod { ChiSquare, FisherMC };

struct AssociationResult {
  AssocMethod method = AssocMethod::ChiSquare;
  std::optional<double> statistic;  // Pearson chi-square
  std::optional<int> df;            // present iff method ChiSquare
  double p = 1.0;
  double cramers_v = 0.0;
  double v_ci_lo = 0.0;
  double v_ci_hi = 0.0;
  std::optional<double> mc_standard_error;
  bool expected_count_warning = false;  // some expected cell < 5
};

std::vector<std::vector<double>> expected_counts(const ContingencyTable& t);
bool any_expected_below(const ContingencyTable& t, double threshold);

double pearson_chi_square(const ContingencyTable& t);
double cramers_v_from_chisq(double chi_sq, long long n, std::size_t rows,
                            std::size_t cols);

// 95% CI on Cramer's V by inverting the noncentral chi-square CDF for
// the noncentrality parameter and mapping V = sqrt(ncp / (n * m)).
// The lower bound clamps to 0 when the statistic is compatible with
// independence. Deterministic.
std::pair<double, double> cramers_v_ci(const ContingencyTable& t,
                                       double confidence = 0.95);

// Percentile bootstrap CI (multinomial resampling of cells at fixed n),
// 2.5/97.5 percentiles. Deterministic for a fixed seed and independent
// of worker count.
std::pair<double, double> cramers_v_ci_bootstrap(const ContingencyTable& t,
                                                 long long replicates,
                                                 std::uint64_t seed);

// Pearson chi-square independence test with df = (r-1)(c-1); fills
// Cramer's V and its noncentral CI. Throws on zero margins.
AssociationResult chisq_independence(const ContingencyTable& t);

// Monte-Carlo Fisher exact test: `replicates` tables drawn from the
// fixed-margins distribution by sequential conditioned-hypergeometric
// cell filling; p = (1 + #{T_sim <= T_obs}) / (replicates + 1) where T
// is the table log-probability with 1e-12 slack for ties.
AssociationResult fisher_exact_mc(const ContingencyTable& t,
                                  long long replicates, std::uint64_t seed);
// Single-threaded reference with identical output.
AssociationResult fisher_exact_mc_serial(const ContingencyTable& t,
                                         long long replicates,
                                         std::uint64_t seed);

}  // namespace statfidelity::corpus
