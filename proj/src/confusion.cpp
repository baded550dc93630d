#include "statfidelity/confusion.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "statfidelity/special_functions.hpp"

namespace statfidelity::corpus {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double ratio(long long num, long long den) {
  return den == 0 ? kNan : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

ConfusionMetrics confusion_metrics(long long tp, long long fp, long long fn,
                                   long long tn) {
  if (tp < 0 || fp < 0 || fn < 0 || tn < 0)
    throw std::invalid_argument("confusion counts must be nonnegative");
  const long long n = tp + fp + fn + tn;
  if (n == 0) throw std::invalid_argument("confusion matrix is empty");
  ConfusionMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  const long long correct = tp + tn;
  m.accuracy = ratio(correct, n);
  // Clopper-Pearson exact interval on the accuracy.
  m.acc_ci_lo = correct == 0 ? 0.0
                             : kernel::reg_inc_beta_inv(
                                   static_cast<double>(correct),
                                   static_cast<double>(n - correct + 1), 0.025);
  m.acc_ci_hi = correct == n
                    ? 1.0
                    : kernel::reg_inc_beta_inv(static_cast<double>(correct + 1),
                                               static_cast<double>(n - correct),
                                               0.975);
  const long long ref_pos = tp + fn;
  const long long ref_neg = fp + tn;
  m.nir = ratio(std::max(ref_pos, ref_neg), n);
  // P(X >= correct) for X ~ Binomial(n, nir): exact one-sided test of
  // accuracy against the no-information rate.
  if (correct == 0) {
    m.p_acc_gt_nir = 1.0;
  } else {
    m.p_acc_gt_nir = kernel::reg_inc_beta(static_cast<double>(correct),
                                          static_cast<double>(n - correct + 1),
                                          m.nir);
  }
  m.sensitivity = ratio(tp, tp + fn);
  m.specificity = ratio(tn, tn + fp);
  m.ppv = ratio(tp, tp + fp);
  m.f1 = (m.ppv != m.ppv || m.sensitivity != m.sensitivity ||
          m.ppv + m.sensitivity == 0.0)
             ? kNan
             : 2.0 * m.ppv * m.sensitivity / (m.ppv + m.sensitivity);
  return m;
}

}  // namespace statfidelity::corpus
