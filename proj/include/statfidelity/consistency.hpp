#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "statfidelity/extraction.hpp"

namespace statfidelity::consistency {

struct Config {
  double alpha = 0.05;
  bool one_tailed_detection = true;
  // Paper uses multiple-comparison corrections: a recomputation that
  // flips significance is then an Inconsistency, not a DecisionError.
  bool mcc_used = false;
  long long replicates = 100000;
  std::uint64_t seed = 42;
  std::vector<std::string> one_tailed_keywords =
      extraction::default_one_tailed_keywords();
};

enum class TestOutcome { CorrectNHST, Inconsistency, DecisionError };

enum class PaperCategory { CorrectNHST, Inconsistency, DecisionError, Incomplete };

struct EvaluatedTest {
  extraction::RawReport raw;
  double recomputed_p_lo = 0.0;
  double recomputed_p_hi = 1.0;
  TestOutcome outcome = TestOutcome::CorrectNHST;
  bool one_tailed_applied = false;
  // reported minus midpoint recomputed; Eq-operator reports only
  std::optional<double> p_difference;
};

struct PaperOutcome {
  std::string paper_id;
  PaperCategory outcome = PaperCategory::Incomplete;
  long long n_complete = 0;
  long long n_incomplete = 0;
  long long n_inconsistent = 0;
  long long n_decision_errors = 0;
};

// The half-up rounding interval [v - u/2, v + u/2) of a reported
// decimal, where u is one unit in the last printed place (exponents
// honored). Throws std::invalid_argument on non-numeric text.
std::pair<double, double> rounding_interval(const std::string& value_text);

// Def.-1 classification of one report: recompute the p interval over
// the statistic's rounding interval, intersect with the reported
// constraint, rescue via one-tailed recomputation for t/z/r when the
// context says so, and escalate to DecisionError when the report and
// the recomputation disagree about significance at alpha.
EvaluatedTest evaluate_test(const extraction::RawReport& raw,
                            const Config& cfg);

struct HistogramBin {
  double center = 0.0;
  long long count = 0;
};

// Zero-centered bins of width bin_width tiling the observed range of
// p_difference (empty bins included); counts sum to the number of
// Eq-operator reports.
std::vector<HistogramBin> p_difference_histogram(
    const std::vector<EvaluatedTest>& tests, double bin_width);

// Paper-level Def. 1: Incomplete iff no complete test exists at all;
// otherwise DecisionError > Inconsistency > CorrectNHST. Throws when
// both lists are empty (paper out of sample).
PaperOutcome aggregate_paper(const std::string& paper_id,
                             const std::vector<EvaluatedTest>& tests,
                             const std::vector<extraction::IncompletePValue>&
                                 incompletes);

const char* to_string(TestOutcome o);
const char* to_string(PaperCategory c);
std::optional<PaperCategory> paper_category_from_string(const std::string& s);

}  // namespace statfidelity::consistency
