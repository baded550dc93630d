#include "statfidelity/p_value.hpp"

#include <cmath>
#include <stdexcept>

#include "statfidelity/special_functions.hpp"

namespace statfidelity::kernel {

void validate(const TestStatistic& stat) {
  if (!std::isfinite(stat.value))
    throw std::domain_error("statistic value must be finite");
  switch (stat.kind) {
    case StatKind::StudentT:
      if (!stat.df1 || !(*stat.df1 > 0.0))
        throw std::domain_error("t statistic requires df > 0");
      break;
    case StatKind::F:
      if (!stat.df1 || !(*stat.df1 > 0.0) || !stat.df2 || !(*stat.df2 > 0.0))
        throw std::domain_error("F statistic requires df1, df2 > 0");
      if (stat.value < 0.0)
        throw std::domain_error("F statistic must be nonnegative");
      break;
    case StatKind::ChiSq:
      if (!stat.df1 || !(*stat.df1 > 0.0))
        throw std::domain_error("chi-square statistic requires df > 0");
      if (stat.value < 0.0)
        throw std::domain_error("chi-square statistic must be nonnegative");
      break;
    case StatKind::Z:
      if (stat.df1)
        throw std::domain_error("z statistic takes no degrees of freedom");
      break;
    case StatKind::PearsonR:
      if (!stat.n || *stat.n < 3)
        throw std::domain_error("Pearson r requires n >= 3");
      if (!(stat.value > -1.0 && stat.value < 1.0))
        throw std::domain_error("Pearson r must lie in (-1, 1)");
      break;
  }
}

namespace {

double t_two_tailed(double t, double df) {
  if (t == 0.0) return 1.0;
  return reg_inc_beta(df / 2.0, 0.5, df / (df + t * t));
}

}  // namespace

double p_from_statistic(const TestStatistic& stat) {
  validate(stat);
  const bool one_tailed = stat.tails == Tails::One;
  switch (stat.kind) {
    case StatKind::StudentT: {
      const double p = t_two_tailed(stat.value, *stat.df1);
      return one_tailed ? p / 2.0 : p;
    }
    case StatKind::F: {
      if (stat.value == 0.0) return 1.0;
      const double d1 = *stat.df1, d2 = *stat.df2;
      return reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * stat.value));
    }
    case StatKind::ChiSq:
      return reg_inc_gamma_upper(*stat.df1 / 2.0, stat.value / 2.0);
    case StatKind::Z: {
      const double p = std::erfc(std::fabs(stat.value) / std::sqrt(2.0));
      return one_tailed ? p / 2.0 : p;
    }
    case StatKind::PearsonR: {
      const double df = static_cast<double>(*stat.n - 2);
      const double r = stat.value;
      const double t = r * std::sqrt(df / (1.0 - r * r));
      const double p = t_two_tailed(t, df);
      return one_tailed ? p / 2.0 : p;
    }
  }
  throw std::domain_error("unknown statistic kind");
}

}  // namespace statfidelity::kernel
