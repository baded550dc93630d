#pragma once

#include <cstdint>
#include <optional>

namespace statfidelity::kernel {

enum class StatKind { StudentT, F, ChiSq, Z, PearsonR };
enum class Tails { One, Two };

// A typed test statistic as reported in text: the recomputation input.
// df1 is the (first) degrees-of-freedom parameter, absent for Z; df2 is
// the denominator df for F; n is the sample size for Pearson r.
struct TestStatistic {
  StatKind kind = StatKind::StudentT;
  double value = 0.0;
  std::optional<double> df1;
  std::optional<double> df2;
  std::optional<long long> n;
  Tails tails = Tails::Two;
};

// Throws std::domain_error when the statistic violates its invariants
// (df > 0, n >= 3 and |r| < 1 for Pearson r, F and chi-square >= 0).
void validate(const TestStatistic& stat);

// Recomputed p-value. t and Z are two-tailed by default (half for one
// tail); F and chi-square are upper-tail probabilities regardless of
// the tails field; Pearson r converts to t with df = n - 2.
double p_from_statistic(const TestStatistic& stat);

}  // namespace statfidelity::kernel
