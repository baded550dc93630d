#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "statfidelity/p_value.hpp"

namespace statfidelity::extraction {

struct SourceSpan {
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;
  std::size_t line = 1;
};

enum class POperator { Eq, Lt, Gt, Leq, Geq };
enum class IncompleteOperator { Eq, Lt, Gt, Leq, Geq, DeclaredNS, DeclaredSig };

// A complete reported test: statistic clause plus its paired p clause,
// with the textual precision preserved for rounding-tolerant checks.
struct RawReport {
  SourceSpan span;
  kernel::TestStatistic statistic;  // tails provisionally Two
  std::string statistic_text;
  int statistic_decimals = 0;
  POperator p_operator = POperator::Eq;
  std::string p_text;
  double p_value = 0.0;
  int p_decimals = 0;
  std::string context;  // window of +-200 characters
};

// A p-value (or significance declaration) with no usable statistic.
struct IncompletePValue {
  SourceSpan span;
  IncompleteOperator op = IncompleteOperator::Eq;
  std::optional<double> p_value;
  std::string context;
};

enum class IncompleteClass {
  ExactP,
  SigAtAlpha,
  SigBelowAlpha,
  NonSigDeclared,
  BoundAboveAlpha,
  ImpossibleZero
};

// Parse-level problem (negative F, |r| >= 1, df <= 0, ...): recorded,
// never fatal.
struct Diagnostic {
  SourceSpan span;
  std::string message;
};

struct ScanResult {
  std::vector<RawReport> reports;
  std::vector<IncompletePValue> incomplete;
  std::vector<Diagnostic> diagnostics;
};

// Scan plain text for test reports and bare p-values. Maximal
// non-overlapping matches in document order; a p clause within 80
// characters after a statistic clause (with no second statistic in
// between) is consumed by the report and not double-counted.
ScanResult scan_document(const std::string& text);

const std::vector<std::string>& default_one_tailed_keywords();
bool detect_one_tailed_context(const std::string& context);
bool detect_one_tailed_context(const std::string& context,
                               const std::vector<std::string>& keywords);

// Appendix-style subclassification of incomplete p-values at level
// alpha. Throws std::domain_error unless 0 < alpha < 1.
IncompleteClass classify_incomplete(const IncompletePValue& ip, double alpha);

const char* to_string(POperator op);
const char* to_string(IncompleteOperator op);
const char* to_string(IncompleteClass c);
const char* to_string(kernel::StatKind k);
std::optional<IncompleteOperator> incomplete_operator_from_string(
    const std::string& s);

}  // namespace statfidelity::extraction
