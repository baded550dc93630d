#include "statfidelity/special_functions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace statfidelity::kernel {

namespace {

constexpr double kEps = 3e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 5000;

// Continued fraction for I_x(a,b), Lentz's method with underflow guards.
double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("beta continued fraction did not converge");
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma requires x > 0");
#if defined(__unix__) || defined(__APPLE__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double log_beta(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("reg_inc_beta requires a, b > 0");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("reg_inc_beta requires x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front =
      std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - log_beta(a, b)) *
                   beta_cf(b, a, 1.0 - x) / b;
}

double reg_inc_beta_inv(double a, double b, double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("reg_inc_beta_inv requires p in [0, 1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  double lo = 0.0, hi = 1.0, x = 0.5;
  for (int i = 0; i < 80; ++i) {
    x = 0.5 * (lo + hi);
    if (reg_inc_beta(a, b, x) < p)
      lo = x;
    else
      hi = x;
  }
  // Newton polish; the density is the derivative of I_x.
  const double lb = log_beta(a, b);
  for (int i = 0; i < 8; ++i) {
    if (x <= 0.0 || x >= 1.0) break;
    const double f = reg_inc_beta(a, b, x) - p;
    const double dens =
        std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lb);
    if (dens <= 0.0 || !std::isfinite(dens)) break;
    double step = f / dens;
    double nx = x - step;
    if (nx <= lo || nx >= hi) break;
    x = nx;
  }
  return x;
}

double reg_inc_gamma_lower(double s, double x) {
  if (!(s > 0.0)) throw std::domain_error("reg_inc_gamma requires s > 0");
  if (!(x >= 0.0)) throw std::domain_error("reg_inc_gamma requires x >= 0");
  if (x == 0.0) return 0.0;
  if (x < s + 1.0) {
    double ap = s;
    double del = 1.0 / s;
    double sum = del;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps)
        return sum * std::exp(-x + s * std::log(x) - log_gamma(s));
    }
    throw std::runtime_error("incomplete gamma series did not converge");
  }
  return 1.0 - reg_inc_gamma_upper(s, x);
}

double reg_inc_gamma_upper(double s, double x) {
  if (!(s > 0.0)) throw std::domain_error("reg_inc_gamma requires s > 0");
  if (!(x >= 0.0)) throw std::domain_error("reg_inc_gamma requires x >= 0");
  if (x == 0.0) return 1.0;
  if (x < s + 1.0) return 1.0 - reg_inc_gamma_lower(s, x);
  // Lentz continued fraction for Q(s, x).
  double b = x + 1.0 - s;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps)
      return h * std::exp(-x + s * std::log(x) - log_gamma(s));
  }
  throw std::runtime_error("incomplete gamma continued fraction did not converge");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("normal_quantile requires p in (0, 1)");
  // Acklam's rational approximation, then one Halley step on erfc.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double noncentral_chisq_cdf(double df, double ncp, double x) {
  if (!(df > 0.0)) throw std::domain_error("noncentral_chisq_cdf: df > 0");
  if (!(ncp >= 0.0)) throw std::domain_error("noncentral_chisq_cdf: ncp >= 0");
  if (!(x >= 0.0)) return 0.0;
  if (x == 0.0) return 0.0;
  if (ncp == 0.0) return reg_inc_gamma_lower(df / 2.0, x / 2.0);
  const double lambda = ncp / 2.0;
  const long j0 = static_cast<long>(lambda);
  const double logw0 = -lambda + j0 * std::log(lambda) - log_gamma(j0 + 1.0);
  const double w0 = std::exp(logw0);
  double total = w0 * reg_inc_gamma_lower(df / 2.0 + j0, x / 2.0);
  // Walk outward from the Poisson mode until weights are negligible.
  double w = w0;
  for (long j = j0 + 1; j < j0 + 100000; ++j) {
    w *= lambda / j;
    if (w < 1e-17) break;
    total += w * reg_inc_gamma_lower(df / 2.0 + j, x / 2.0);
  }
  w = w0;
  for (long j = j0; j >= 1; --j) {
    w *= j / lambda;
    if (w < 1e-17) break;
    total += w * reg_inc_gamma_lower(df / 2.0 + (j - 1), x / 2.0);
  }
  if (total > 1.0) total = 1.0;
  return total;
}

NcpInterval noncentral_chisq_ncp_interval(double statistic, double df,
                                          double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::domain_error("confidence must be in (0, 1)");
  const double tail = (1.0 - confidence) / 2.0;
  // cdf(statistic; df, ncp) decreases monotonically in ncp.
  auto solve = [&](double target) -> double {
    if (noncentral_chisq_cdf(df, 0.0, statistic) <= target) return 0.0;
    double lo = 0.0;
    double hi = std::max(4.0 * statistic + 4.0 * df, 10.0);
    while (noncentral_chisq_cdf(df, hi, statistic) > target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e9) break;
    }
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (noncentral_chisq_cdf(df, mid, statistic) > target)
        lo = mid;
      else
        hi = mid;
      if (hi - lo < 1e-10 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
  };
  NcpInterval iv;
  iv.lo = solve(1.0 - tail);
  iv.hi = solve(tail);
  if (iv.hi < iv.lo) iv.hi = iv.lo;
  return iv;
}

}  // namespace statfidelity::kernel
