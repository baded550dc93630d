#pragma once

namespace statfidelity::kernel {

// log Gamma(x), x > 0. Thread-safe wrapper (std::lgamma touches signgam).
double log_gamma(double x);

// log Beta(a, b), a, b > 0.
double log_beta(double a, double b);

// Regularized incomplete beta I_x(a, b). Continued fraction (modified
// Lentz), switching representation at x > (a+1)/(a+b+2).
// Absolute error <= 1e-10 for a, b <= 1e4. Throws std::domain_error.
double reg_inc_beta(double a, double b, double x);

// Inverse of I_x(a, b) in x for fixed a, b. Used for Clopper-Pearson.
double reg_inc_beta_inv(double a, double b, double p);

// Regularized lower incomplete gamma P(s, x): series for x < s+1,
// continued fraction otherwise. Absolute error <= 1e-10 for s <= 1e4.
double reg_inc_gamma_lower(double s, double x);

// Upper tail Q(s, x) = 1 - P(s, x), computed directly (no cancellation).
double reg_inc_gamma_upper(double s, double x);

// Standard normal CDF and quantile.
double normal_cdf(double z);
double normal_quantile(double p);

// CDF of the noncentral chi-square distribution at x, via the Poisson
// mixture of central chi-squares.
double noncentral_chisq_cdf(double df, double ncp, double x);

// 95%-style confidence bracket [ncp_lo, ncp_hi] for the noncentrality
// parameter given an observed chi-square statistic; bounds clamp to 0
// when the statistic is consistent with ncp = 0 at the given tail.
struct NcpInterval {
  double lo;
  double hi;
};
NcpInterval noncentral_chisq_ncp_interval(double statistic, double df,
                                          double confidence);

}  // namespace statfidelity::kernel
