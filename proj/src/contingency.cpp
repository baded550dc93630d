#include "statfidelity/contingency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "statfidelity/p_value.hpp"
#include "statfidelity/rng.hpp"
#include "statfidelity/special_functions.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace statfidelity::corpus {

long long ContingencyTable::row_sum(std::size_t i) const {
  long long s = 0;
  for (long long v : counts[i]) s += v;
  return s;
}

long long ContingencyTable::col_sum(std::size_t j) const {
  long long s = 0;
  for (const auto& row : counts) s += row[j];
  return s;
}

long long ContingencyTable::total() const {
  long long s = 0;
  for (std::size_t i = 0; i < rows(); ++i) s += row_sum(i);
  return s;
}

void ContingencyTable::validate() const {
  if (rows() < 2 || cols() < 2)
    throw std::invalid_argument("contingency table needs at least 2x2");
  if (row_labels.size() != rows() || col_labels.size() != cols())
    throw std::invalid_argument("contingency table labels do not match counts");
  for (const auto& row : counts) {
    if (row.size() != cols())
      throw std::invalid_argument("ragged contingency table");
    for (long long v : row)
      if (v < 0) throw std::invalid_argument("negative cell count");
  }
}

namespace {

void require_positive_margins(const ContingencyTable& t) {
  for (std::size_t i = 0; i < t.rows(); ++i)
    if (t.row_sum(i) == 0)
      throw std::invalid_argument("zero row margin in contingency table");
  for (std::size_t j = 0; j < t.cols(); ++j)
    if (t.col_sum(j) == 0)
      throw std::invalid_argument("zero column margin in contingency table");
}

double chi_square_of(const std::vector<std::vector<long long>>& counts) {
  const std::size_t r = counts.size(), c = counts[0].size();
  std::vector<long long> rs(r, 0), cs(c, 0);
  long long n = 0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      rs[i] += counts[i][j];
      cs[j] += counts[i][j];
      n += counts[i][j];
    }
  double chi = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      if (rs[i] == 0 || cs[j] == 0) continue;
      const double e = static_cast<double>(rs[i]) * cs[j] / n;
      const double d = counts[i][j] - e;
      chi += d * d / e;
    }
  return chi;
}

}  // namespace

std::vector<std::vector<double>> expected_counts(const ContingencyTable& t) {
  t.validate();
  require_positive_margins(t);
  const double n = static_cast<double>(t.total());
  std::vector<std::vector<double>> e(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j)
      e[i][j] = t.row_sum(i) * t.col_sum(j) / n;
  return e;
}

bool any_expected_below(const ContingencyTable& t, double threshold) {
  for (const auto& row : expected_counts(t))
    for (double v : row)
      if (v < threshold) return true;
  return false;
}

double pearson_chi_square(const ContingencyTable& t) {
  t.validate();
  require_positive_margins(t);
  return chi_square_of(t.counts);
}

double cramers_v_from_chisq(double chi_sq, long long n, std::size_t rows,
                            std::size_t cols) {
  const double m = static_cast<double>(std::min(rows, cols) - 1);
  if (n <= 0 || m <= 0.0) return 0.0;
  return std::sqrt(chi_sq / (static_cast<double>(n) * m));
}

std::pair<double, double> cramers_v_ci(const ContingencyTable& t,
                                       double confidence) {
  const double chi = pearson_chi_square(t);
  const double df =
      static_cast<double>((t.rows() - 1) * (t.cols() - 1));
  const long long n = t.total();
  const double v = cramers_v_from_chisq(chi, n, t.rows(), t.cols());
  const auto ncp = kernel::noncentral_chisq_ncp_interval(chi, df, confidence);
  const double m = static_cast<double>(std::min(t.rows(), t.cols()) - 1);
  double lo = std::sqrt(ncp.lo / (n * m));
  double hi = std::min(1.0, std::sqrt(ncp.hi / (n * m)));
  lo = std::min(lo, v);
  hi = std::max(hi, v);
  return {lo, hi};
}

std::pair<double, double> cramers_v_ci_bootstrap(const ContingencyTable& t,
                                                 long long replicates,
                                                 std::uint64_t seed) {
  t.validate();
  if (replicates < 100)
    throw std::invalid_argument("bootstrap needs at least 100 replicates");
  const long long n = t.total();
  if (n < 2) throw std::invalid_argument("degenerate table: total below 2");
  const std::size_t r = t.rows(), c = t.cols();
  const std::size_t cells = r * c;
  std::vector<double> cum(cells);
  double acc = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      acc += static_cast<double>(t.counts[i][j]) / n;
      cum[i * c + j] = acc;
    }
  cum[cells - 1] = 1.0;

  std::vector<double> vs(static_cast<std::size_t>(replicates));
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (long long b = 0; b < replicates; ++b) {
    Rng rng(seed, static_cast<std::uint64_t>(b));
    std::vector<std::vector<long long>> sample(r, std::vector<long long>(c, 0));
    for (long long k = 0; k < n; ++k) {
      const double u = rng.uniform();
      const std::size_t idx = static_cast<std::size_t>(
          std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
      sample[idx / c][idx % c] += 1;
    }
    // Drop empty rows/cols before computing V on the resample.
    std::vector<std::size_t> keep_r, keep_c;
    for (std::size_t i = 0; i < r; ++i) {
      long long s = 0;
      for (long long v : sample[i]) s += v;
      if (s > 0) keep_r.push_back(i);
    }
    for (std::size_t j = 0; j < c; ++j) {
      long long s = 0;
      for (std::size_t i = 0; i < r; ++i) s += sample[i][j];
      if (s > 0) keep_c.push_back(j);
    }
    if (keep_r.size() < 2 || keep_c.size() < 2) {
      vs[static_cast<std::size_t>(b)] = 0.0;
      continue;
    }
    std::vector<std::vector<long long>> sub(keep_r.size(),
                                            std::vector<long long>(keep_c.size()));
    for (std::size_t i = 0; i < keep_r.size(); ++i)
      for (std::size_t j = 0; j < keep_c.size(); ++j)
        sub[i][j] = sample[keep_r[i]][keep_c[j]];
    const double chi = chi_square_of(sub);
    vs[static_cast<std::size_t>(b)] =
        cramers_v_from_chisq(chi, n, keep_r.size(), keep_c.size());
  }
  std::sort(vs.begin(), vs.end());
  const auto pick = [&](double q) {
    const double pos = q * static_cast<double>(vs.size() - 1);
    return vs[static_cast<std::size_t>(std::llround(pos))];
  };
  return {pick(0.025), pick(0.975)};
}

AssociationResult chisq_independence(const ContingencyTable& t) {
  const double chi = pearson_chi_square(t);
  const int df = static_cast<int>((t.rows() - 1) * (t.cols() - 1));
  AssociationResult out;
  out.method = AssocMethod::ChiSquare;
  out.statistic = chi;
  out.df = df;
  out.p = kernel::reg_inc_gamma_upper(df / 2.0, chi / 2.0);
  out.cramers_v = cramers_v_from_chisq(chi, t.total(), t.rows(), t.cols());
  const auto ci = cramers_v_ci(t);
  out.v_ci_lo = ci.first;
  out.v_ci_hi = ci.second;
  out.expected_count_warning = any_expected_below(t, 5.0);
  return out;
}

namespace {

struct McSetup {
  std::vector<long long> row_sums;
  std::vector<long long> col_sums;
  std::vector<double> lgamma_table;  // lgamma_table[k] = log Gamma(k + 1)
  double observed_stat = 0.0;        // -sum lgamma(n_ij + 1)
};

McSetup mc_setup(const ContingencyTable& t) {
  McSetup s;
  const std::size_t r = t.rows(), c = t.cols();
  for (std::size_t i = 0; i < r; ++i) s.row_sums.push_back(t.row_sum(i));
  for (std::size_t j = 0; j < c; ++j) s.col_sums.push_back(t.col_sum(j));
  const long long n = t.total();
  s.lgamma_table.resize(static_cast<std::size_t>(n) + 2);
  for (std::size_t k = 0; k < s.lgamma_table.size(); ++k)
    s.lgamma_table[k] = kernel::log_gamma(static_cast<double>(k) + 1.0);
  s.observed_stat = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      s.observed_stat -= s.lgamma_table[static_cast<std::size_t>(t.counts[i][j])];
  return s;
}

// One replicate: sample a table with the given margins and report
// whether it is at most as probable as the observed one.
bool mc_replicate(const McSetup& s, std::uint64_t seed, std::uint64_t index) {
  Rng rng(seed, index);
  const std::size_t r = s.row_sums.size(), c = s.col_sums.size();
  std::vector<long long> col_rem(s.col_sums);
  long long remaining = 0;
  for (long long v : col_rem) remaining += v;
  double stat = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    long long row_rem = s.row_sums[i];
    long long pool = remaining;
    for (std::size_t j = 0; j + 1 < c; ++j) {
      const long long k = hypergeometric(rng, pool, col_rem[j], row_rem);
      stat -= s.lgamma_table[static_cast<std::size_t>(k)];
      pool -= col_rem[j];
      col_rem[j] -= k;
      row_rem -= k;
    }
    stat -= s.lgamma_table[static_cast<std::size_t>(row_rem)];
    col_rem[c - 1] -= row_rem;
    remaining -= s.row_sums[i];
  }
  return stat <= s.observed_stat + 1e-12;
}

AssociationResult mc_result(const ContingencyTable& t, long long replicates,
                            long long count) {
  AssociationResult out;
  out.method = AssocMethod::FisherMC;
  out.p = static_cast<double>(1 + count) / static_cast<double>(replicates + 1);
  out.mc_standard_error =
      std::sqrt(out.p * (1.0 - out.p) / static_cast<double>(replicates));
  const double chi = pearson_chi_square(t);
  out.cramers_v = cramers_v_from_chisq(chi, t.total(), t.rows(), t.cols());
  const auto ci = cramers_v_ci(t);
  out.v_ci_lo = ci.first;
  out.v_ci_hi = ci.second;
  out.expected_count_warning = any_expected_below(t, 5.0);
  return out;
}

void mc_validate(const ContingencyTable& t, long long replicates) {
  t.validate();
  require_positive_margins(t);
  if (replicates < 1000)
    throw std::invalid_argument("fisher_exact_mc needs >= 1000 replicates");
}

}  // namespace

AssociationResult fisher_exact_mc_serial(const ContingencyTable& t,
                                         long long replicates,
                                         std::uint64_t seed) {
  mc_validate(t, replicates);
  const McSetup s = mc_setup(t);
  long long count = 0;
  for (long long b = 0; b < replicates; ++b)
    if (mc_replicate(s, seed, static_cast<std::uint64_t>(b))) ++count;
  return mc_result(t, replicates, count);
}

AssociationResult fisher_exact_mc(const ContingencyTable& t,
                                  long long replicates, std::uint64_t seed) {
  mc_validate(t, replicates);
  const McSetup s = mc_setup(t);
  long long count = 0;
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) reduction(+ : count)
#endif
  for (long long b = 0; b < replicates; ++b)
    if (mc_replicate(s, seed, static_cast<std::uint64_t>(b))) ++count;
  return mc_result(t, replicates, count);
}

}  // namespace statfidelity::corpus
