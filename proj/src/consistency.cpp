#include "statfidelity/consistency.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "statfidelity/p_value.hpp"

namespace statfidelity::consistency {

std::pair<double, double> rounding_interval(const std::string& value_text) {
  std::string normalized;
  int decimals = 0;
  int exponent = 0;
  bool seen_digit = false, seen_dot = false, seen_exp = false;
  for (std::size_t i = 0; i < value_text.size();) {
    const char c = value_text[i];
    if (c == '\xE2' && i + 2 < value_text.size() &&
        value_text[i + 1] == '\x88' && value_text[i + 2] == '\x92') {
      normalized += '-';
      i += 3;
      continue;
    }
    if (c == ',' ) {  // thousands separator
      ++i;
      continue;
    }
    if (c == 'e' || c == 'E') {
      if (seen_exp || !seen_digit)
        throw std::invalid_argument("bad numeric text: " + value_text);
      seen_exp = true;
      normalized += 'e';
      std::size_t j = i + 1;
      std::string digits;
      bool neg = false;
      if (j < value_text.size() &&
          (value_text[j] == '-' || value_text[j] == '+')) {
        neg = value_text[j] == '-';
        normalized += value_text[j];
        ++j;
      }
      while (j < value_text.size() &&
             std::isdigit(static_cast<unsigned char>(value_text[j]))) {
        digits += value_text[j];
        normalized += value_text[j];
        ++j;
      }
      if (digits.empty())
        throw std::invalid_argument("bad numeric text: " + value_text);
      exponent = std::atoi(digits.c_str()) * (neg ? -1 : 1);
      i = j;
      continue;
    }
    if (c == '.') {
      if (seen_dot || seen_exp)
        throw std::invalid_argument("bad numeric text: " + value_text);
      seen_dot = true;
      normalized += c;
      ++i;
      continue;
    }
    if (c == '-' || c == '+') {
      if (seen_digit || seen_dot)
        throw std::invalid_argument("bad numeric text: " + value_text);
      normalized += c;
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      seen_digit = true;
      if (seen_dot && !seen_exp) ++decimals;
      normalized += c;
      ++i;
      continue;
    }
    throw std::invalid_argument("bad numeric text: " + value_text);
  }
  if (!seen_digit)
    throw std::invalid_argument("bad numeric text: " + value_text);
  const double value = std::strtod(normalized.c_str(), nullptr);
  if (!std::isfinite(value))
    throw std::invalid_argument("bad numeric text: " + value_text);
  const double half_ulp = 0.5 * std::pow(10.0, exponent - decimals);
  return {value - half_ulp, value + half_ulp};
}

namespace {

using extraction::POperator;
using kernel::StatKind;
using kernel::TestStatistic;

std::pair<double, double> recomputed_interval(const TestStatistic& proto,
                                              double stat_lo, double stat_hi,
                                              kernel::Tails tails) {
  TestStatistic s = proto;
  s.tails = tails;
  auto eval = [&](double v) {
    s.value = v;
    return kernel::p_from_statistic(s);
  };
  const bool sign_symmetric = proto.kind == StatKind::StudentT ||
                              proto.kind == StatKind::Z ||
                              proto.kind == StatKind::PearsonR;
  if (sign_symmetric) {
    double abs_lo, abs_hi;
    if (stat_lo <= 0.0 && 0.0 <= stat_hi) {
      abs_lo = 0.0;
      abs_hi = std::max(-stat_lo, stat_hi);
    } else {
      abs_lo = std::min(std::fabs(stat_lo), std::fabs(stat_hi));
      abs_hi = std::max(std::fabs(stat_lo), std::fabs(stat_hi));
    }
    return {eval(abs_hi), eval(abs_lo)};
  }
  return {eval(stat_hi), eval(stat_lo)};
}

// Does the reported constraint intersect the recomputed interval?
bool intersects(POperator op, double rep_lo, double rep_hi, double rec_lo,
                double rec_hi) {
  switch (op) {
    case POperator::Eq:
      return rec_lo < rep_hi && rec_hi >= rep_lo;
    case POperator::Lt:
      return rec_lo < rep_hi;  // rep_hi holds the bound
    case POperator::Leq:
      return rec_lo <= rep_hi;
    case POperator::Gt:
      return rec_hi > rep_lo;  // rep_lo holds the bound
    case POperator::Geq:
      return rec_hi >= rep_lo;
  }
  return false;
}

enum class Claim { Significant, NonSignificant, None };

Claim reported_claim(POperator op, double rep_lo, double rep_hi, double bound,
                     double alpha) {
  switch (op) {
    case POperator::Eq:
      if (rep_hi <= alpha) return Claim::Significant;
      if (rep_lo >= alpha) return Claim::NonSignificant;
      return Claim::None;
    case POperator::Lt:
      return bound <= alpha ? Claim::Significant : Claim::None;
    case POperator::Leq:
      return bound < alpha ? Claim::Significant : Claim::None;
    case POperator::Gt:
    case POperator::Geq:
      return bound >= alpha ? Claim::NonSignificant : Claim::None;
  }
  return Claim::None;
}

}  // namespace

EvaluatedTest evaluate_test(const extraction::RawReport& raw,
                            const Config& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw std::domain_error("alpha must be in (0, 1)");
  EvaluatedTest out;
  out.raw = raw;

  auto stat_iv = rounding_interval(raw.statistic_text);
  if (raw.statistic.kind == StatKind::F ||
      raw.statistic.kind == StatKind::ChiSq) {
    stat_iv.first = std::max(stat_iv.first, 0.0);
  } else if (raw.statistic.kind == StatKind::PearsonR) {
    stat_iv.first = std::max(stat_iv.first, -1.0 + 1e-12);
    stat_iv.second = std::min(stat_iv.second, 1.0 - 1e-12);
  }

  double rep_lo, rep_hi, bound = raw.p_value;
  if (raw.p_operator == POperator::Eq) {
    const auto iv = rounding_interval(raw.p_text);
    rep_lo = std::max(iv.first, 0.0);
    rep_hi = iv.second;
  } else {
    rep_lo = bound;
    rep_hi = bound;
  }

  auto rec = recomputed_interval(raw.statistic, stat_iv.first, stat_iv.second,
                                 kernel::Tails::Two);
  bool consistent =
      intersects(raw.p_operator, rep_lo, rep_hi, rec.first, rec.second);

  const bool halvable = raw.statistic.kind == StatKind::StudentT ||
                        raw.statistic.kind == StatKind::Z ||
                        raw.statistic.kind == StatKind::PearsonR;
  if (!consistent && halvable && cfg.one_tailed_detection &&
      extraction::detect_one_tailed_context(raw.context,
                                            cfg.one_tailed_keywords)) {
    const auto rec1 = recomputed_interval(raw.statistic, stat_iv.first,
                                          stat_iv.second, kernel::Tails::One);
    if (intersects(raw.p_operator, rep_lo, rep_hi, rec1.first, rec1.second)) {
      rec = rec1;
      consistent = true;
      out.one_tailed_applied = true;
    }
  }

  out.recomputed_p_lo = rec.first;
  out.recomputed_p_hi = rec.second;

  if (consistent) {
    out.outcome = TestOutcome::CorrectNHST;
  } else {
    const Claim claim =
        reported_claim(raw.p_operator, rep_lo, rep_hi, bound, cfg.alpha);
    const bool rec_sig = rec.second < cfg.alpha;
    const bool rec_nonsig = rec.first >= cfg.alpha;
    const bool flipped = (claim == Claim::Significant && rec_nonsig) ||
                         (claim == Claim::NonSignificant && rec_sig);
    out.outcome = flipped && !cfg.mcc_used ? TestOutcome::DecisionError
                                           : TestOutcome::Inconsistency;
  }

  if (raw.p_operator == POperator::Eq)
    out.p_difference = raw.p_value - 0.5 * (rec.first + rec.second);
  return out;
}

std::vector<HistogramBin> p_difference_histogram(
    const std::vector<EvaluatedTest>& tests, double bin_width) {
  if (!(bin_width > 0.0))
    throw std::invalid_argument("bin_width must be positive");
  std::vector<double> diffs;
  for (const auto& t : tests)
    if (t.p_difference) diffs.push_back(*t.p_difference);
  if (diffs.empty()) return {};
  long long k_min = 0, k_max = 0;
  bool first = true;
  for (double d : diffs) {
    const long long k = std::llround(d / bin_width);
    if (first) {
      k_min = k_max = k;
      first = false;
    } else {
      k_min = std::min(k_min, k);
      k_max = std::max(k_max, k);
    }
  }
  std::vector<HistogramBin> bins;
  for (long long k = k_min; k <= k_max; ++k)
    bins.push_back({k * bin_width, 0});
  for (double d : diffs) {
    const long long k = std::llround(d / bin_width);
    bins[static_cast<std::size_t>(k - k_min)].count += 1;
  }
  return bins;
}

PaperOutcome aggregate_paper(
    const std::string& paper_id, const std::vector<EvaluatedTest>& tests,
    const std::vector<extraction::IncompletePValue>& incompletes) {
  if (tests.empty() && incompletes.empty())
    throw std::invalid_argument("paper " + paper_id +
                                " has no statistical content to aggregate");
  PaperOutcome out;
  out.paper_id = paper_id;
  out.n_complete = static_cast<long long>(tests.size());
  out.n_incomplete = static_cast<long long>(incompletes.size());
  for (const auto& t : tests) {
    if (t.outcome == TestOutcome::Inconsistency) ++out.n_inconsistent;
    if (t.outcome == TestOutcome::DecisionError) ++out.n_decision_errors;
  }
  if (tests.empty()) {
    out.outcome = PaperCategory::Incomplete;
  } else if (out.n_decision_errors > 0) {
    out.outcome = PaperCategory::DecisionError;
  } else if (out.n_inconsistent > 0) {
    out.outcome = PaperCategory::Inconsistency;
  } else {
    out.outcome = PaperCategory::CorrectNHST;
  }
  return out;
}

const char* to_string(TestOutcome o) {
  switch (o) {
    case TestOutcome::CorrectNHST: return "CorrectNHST";
    case TestOutcome::Inconsistency: return "Inconsistency";
    case TestOutcome::DecisionError: return "DecisionError";
  }
  return "?";
}

const char* to_string(PaperCategory c) {
  switch (c) {
    case PaperCategory::CorrectNHST: return "CorrectNHST";
    case PaperCategory::Inconsistency: return "Inconsistency";
    case PaperCategory::DecisionError: return "DecisionError";
    case PaperCategory::Incomplete: return "Incomplete";
  }
  return "?";
}

std::optional<PaperCategory> paper_category_from_string(const std::string& s) {
  if (s == "CorrectNHST") return PaperCategory::CorrectNHST;
  if (s == "Inconsistency") return PaperCategory::Inconsistency;
  if (s == "DecisionError") return PaperCategory::DecisionError;
  if (s == "Incomplete") return PaperCategory::Incomplete;
  return std::nullopt;
}

}  // namespace statfidelity::consistency
