#pragma once

namespace statfidelity::corpus {

// Binary classification metrics. Reference (human/recomputed) positives
// are tp + fn; predicted positives are tp + fp. Undefined ratios (zero
// denominators) come back as NaN rather than failing.
struct ConfusionMetrics {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  double acc_ci_lo = 0.0, acc_ci_hi = 0.0;  // Clopper-Pearson 95%
  double nir = 0.0;                         // no-information rate
  double p_acc_gt_nir = 1.0;                // exact one-sided binomial
  double sensitivity = 0.0;
  double specificity = 0.0;
  double ppv = 0.0;
  double f1 = 0.0;
};

ConfusionMetrics confusion_metrics(long long tp, long long fp, long long fn,
                                   long long tn);

}  // namespace statfidelity::corpus
