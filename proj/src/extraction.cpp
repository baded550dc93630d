#include "statfidelity/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace statfidelity::extraction {

namespace {

constexpr std::size_t kPairWindow = 80;    // statistic-to-p adjacency
constexpr std::size_t kDeclaredWindow = 80;
constexpr std::size_t kContextWindow = 200;

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '_'; }

bool boundary_before(const std::string& t, std::size_t pos) {
  return pos == 0 || !is_word_byte(static_cast<unsigned char>(t[pos - 1]));
}

bool boundary_after(const std::string& t, std::size_t pos) {
  return pos >= t.size() || !is_word_byte(static_cast<unsigned char>(t[pos]));
}

std::size_t skip_ws(const std::string& t, std::size_t pos) {
  while (pos < t.size() &&
         (t[pos] == ' ' || t[pos] == '\t' || t[pos] == '\n' || t[pos] == '\r'))
    ++pos;
  return pos;
}

bool starts_with(const std::string& t, std::size_t pos, const char* lit) {
  for (std::size_t i = 0; lit[i]; ++i)
    if (pos + i >= t.size() || t[pos + i] != lit[i]) return false;
  return true;
}

// Case-insensitive literal match; a single space in the pattern matches
// any nonempty whitespace run.
bool match_phrase(const std::string& t, std::size_t pos, const char* pat,
                  std::size_t* end) {
  std::size_t i = pos;
  for (std::size_t k = 0; pat[k];) {
    if (pat[k] == ' ') {
      std::size_t j = skip_ws(t, i);
      if (j == i) return false;
      i = j;
      ++k;
      continue;
    }
    if (i >= t.size() ||
        std::tolower(static_cast<unsigned char>(t[i])) !=
            std::tolower(static_cast<unsigned char>(pat[k])))
      return false;
    ++i;
    ++k;
  }
  *end = i;
  return true;
}

struct Operator {
  POperator op;
  std::size_t len;
};

std::optional<Operator> match_operator(const std::string& t, std::size_t pos) {
  if (starts_with(t, pos, "\xE2\x89\xA4")) return Operator{POperator::Leq, 3};
  if (starts_with(t, pos, "\xE2\x89\xA5")) return Operator{POperator::Geq, 3};
  if (starts_with(t, pos, "<=")) return Operator{POperator::Leq, 2};
  if (starts_with(t, pos, ">=")) return Operator{POperator::Geq, 2};
  if (starts_with(t, pos, "<")) return Operator{POperator::Lt, 1};
  if (starts_with(t, pos, ">")) return Operator{POperator::Gt, 1};
  if (starts_with(t, pos, "=")) return Operator{POperator::Eq, 1};
  return std::nullopt;
}

struct Number {
  double value = 0.0;
  int decimals = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Decimal number with optional sign (ASCII or unicode minus), optional
// thousands separators in the integer part, optional exponent.
std::optional<Number> parse_number(const std::string& t, std::size_t pos,
                                   bool allow_sign, bool allow_thousands) {
  std::string normalized;
  Number num;
  num.begin = pos;
  std::size_t i = pos;
  if (allow_sign && i < t.size()) {
    if (t[i] == '-' || t[i] == '+') {
      normalized += t[i];
      ++i;
    } else if (starts_with(t, i, "\xE2\x88\x92")) {
      normalized += '-';
      i += 3;
    }
  }
  bool any_digit = false;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) {
    normalized += t[i];
    ++i;
    any_digit = true;
    if (allow_thousands && i < t.size() && t[i] == ',' && i + 3 < t.size() &&
        std::isdigit(static_cast<unsigned char>(t[i + 1])) &&
        std::isdigit(static_cast<unsigned char>(t[i + 2])) &&
        std::isdigit(static_cast<unsigned char>(t[i + 3])) &&
        (i + 4 >= t.size() ||
         !std::isdigit(static_cast<unsigned char>(t[i + 4])))) {
      ++i;  // separator consumed, digits follow on the next loop turns
    }
  }
  if (i < t.size() && t[i] == '.') {
    std::size_t j = i + 1;
    int d = 0;
    std::string frac;
    while (j < t.size() && std::isdigit(static_cast<unsigned char>(t[j]))) {
      frac += t[j];
      ++j;
      ++d;
    }
    if (d > 0) {
      normalized += '.';
      normalized += frac;
      num.decimals = d;
      i = j;
      any_digit = true;
    }
  }
  if (!any_digit) return std::nullopt;
  if (i < t.size() && (t[i] == 'e' || t[i] == 'E')) {
    std::size_t j = i + 1;
    std::string exp = "e";
    if (j < t.size() && (t[j] == '-' || t[j] == '+')) {
      exp += t[j];
      ++j;
    } else if (starts_with(t, j, "\xE2\x88\x92")) {
      exp += '-';
      j += 3;
    }
    std::size_t digits = 0;
    while (j < t.size() && std::isdigit(static_cast<unsigned char>(t[j]))) {
      exp += t[j];
      ++j;
      ++digits;
    }
    if (digits > 0) {
      normalized += exp;
      i = j;
    }
  }
  num.end = i;
  num.value = std::strtod(normalized.c_str(), nullptr);
  return num;
}

struct StatHead {
  kernel::StatKind kind;
  std::size_t end;
};

// Chi-square spellings, longest first. Mixed-case words are matched
// case-insensitively; X2 variants require uppercase X.
std::optional<std::size_t> match_chi_head(const std::string& t,
                                          std::size_t pos) {
  static const char* words[] = {"chi-squared", "chi squared", "chi-square",
                                "chi square",  "chi-sq",      "chisq",
                                "chi2"};
  for (const char* w : words) {
    std::size_t end;
    if (match_phrase(t, pos, w, &end) && boundary_after(t, end)) return end;
  }
  // Greek chi (lower or capital), LaTeX \chi, or uppercase X, followed
  // by a squared marker.
  std::size_t i = pos;
  bool head = false;
  if (starts_with(t, i, "\xCF\x87") || starts_with(t, i, "\xCE\xA7")) {
    i += 2;
    head = true;
  } else if (starts_with(t, i, "\\chi")) {
    i += 4;
    head = true;
  } else if (i < t.size() && t[i] == 'X') {
    i += 1;
    head = true;
  }
  if (!head) return std::nullopt;
  if (starts_with(t, i, "\xC2\xB2")) return i + 2;    // superscript two
  if (starts_with(t, i, "^{2}")) return i + 4;
  if (starts_with(t, i, "^2")) return i + 2;
  if (i < t.size() && t[i] == '2') return i + 1;
  return std::nullopt;
}

std::optional<StatHead> match_stat_head(const std::string& t,
                                        std::size_t pos) {
  if (auto end = match_chi_head(t, pos))
    return StatHead{kernel::StatKind::ChiSq, *end};
  const char c = t[pos];
  if (c == 't') return StatHead{kernel::StatKind::StudentT, pos + 1};
  if (c == 'F') return StatHead{kernel::StatKind::F, pos + 1};
  if (c == 'r') return StatHead{kernel::StatKind::PearsonR, pos + 1};
  if (c == 'z' || c == 'Z') return StatHead{kernel::StatKind::Z, pos + 1};
  return std::nullopt;
}

struct StatParse {
  bool matched = false;  // a statistic clause was recognized at all
  bool valid = false;    // it also satisfies the type invariants
  kernel::TestStatistic stat;
  std::string text;
  int decimals = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string problem;
};

StatParse try_statistic(const std::string& t, std::size_t pos) {
  StatParse out;
  const auto head = match_stat_head(t, pos);
  if (!head) return out;
  const auto kind = head->kind;
  std::size_t i = head->end;
  std::optional<double> df1, df2;
  if (kind != kernel::StatKind::Z) {
    i = skip_ws(t, i);
    if (i >= t.size() || t[i] != '(') return out;
    i = skip_ws(t, i + 1);
    const auto d1 = parse_number(t, i, false, false);
    if (!d1) return out;
    df1 = d1->value;
    i = skip_ws(t, d1->end);
    if (kind == kernel::StatKind::F) {
      if (i >= t.size() || t[i] != ',') return out;
      i = skip_ws(t, i + 1);
      const auto d2 = parse_number(t, i, false, false);
      if (!d2) return out;
      df2 = d2->value;
      i = skip_ws(t, d2->end);
    } else if (kind == kernel::StatKind::ChiSq && i < t.size() &&
               t[i] == ',') {
      // optional sample-size note: chi2(3, N = 114)
      std::size_t j = skip_ws(t, i + 1);
      if (j < t.size() && (t[j] == 'N' || t[j] == 'n')) {
        j = skip_ws(t, j + 1);
        if (j < t.size() && t[j] == '=') {
          j = skip_ws(t, j + 1);
          const auto nn = parse_number(t, j, false, true);
          if (nn) i = skip_ws(t, nn->end);
        }
      }
    }
    if (i >= t.size() || t[i] != ')') return out;
    i = skip_ws(t, i + 1);
  } else {
    i = skip_ws(t, i);
  }
  const auto op = match_operator(t, i);
  if (!op) return out;
  i = skip_ws(t, i + op->len);
  const auto val = parse_number(t, i, true, true);
  if (!val) return out;

  out.matched = true;
  out.begin = pos;
  out.end = val->end;
  out.text = t.substr(val->begin, val->end - val->begin);
  out.decimals = val->decimals;
  out.stat.kind = kind;
  out.stat.value = val->value;
  out.stat.tails = kernel::Tails::Two;

  if (kind != kernel::StatKind::Z) {
    if (!(df1 && *df1 > 0.0)) {
      out.problem = "degrees of freedom must be positive";
      return out;
    }
  }
  switch (kind) {
    case kernel::StatKind::StudentT:
      out.stat.df1 = df1;
      break;
    case kernel::StatKind::F:
      if (!(df2 && *df2 > 0.0)) {
        out.problem = "denominator degrees of freedom must be positive";
        return out;
      }
      if (val->value < 0.0) {
        out.problem = "negative F statistic";
        return out;
      }
      out.stat.df1 = df1;
      out.stat.df2 = df2;
      break;
    case kernel::StatKind::ChiSq:
      if (val->value < 0.0) {
        out.problem = "negative chi-square statistic";
        return out;
      }
      out.stat.df1 = df1;
      break;
    case kernel::StatKind::Z:
      break;
    case kernel::StatKind::PearsonR: {
      if (!(val->value > -1.0 && val->value < 1.0)) {
        out.problem = "correlation magnitude at or above 1";
        return out;
      }
      if (std::fabs(*df1 - std::llround(*df1)) > 1e-9) {
        out.problem = "non-integer degrees of freedom for r";
        return out;
      }
      out.stat.n = std::llround(*df1) + 2;  // df reported as n - 2
      break;
    }
  }
  out.valid = true;
  return out;
}

struct PParse {
  POperator op;
  double value = 0.0;
  int decimals = 0;
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::optional<PParse> try_p_clause(const std::string& t, std::size_t pos) {
  if (t[pos] != 'p' && t[pos] != 'P') return std::nullopt;
  std::size_t i = pos + 1;
  if (i < t.size() && (t[i] == 'r' || t[i] == 'R')) ++i;  // Pr
  if (!boundary_after(t, i)) return std::nullopt;
  std::size_t end_suffix;
  if (match_phrase(t, i, "-values", &end_suffix) ||
      match_phrase(t, i, "-value", &end_suffix))
    i = end_suffix;
  i = skip_ws(t, i);
  const auto op = match_operator(t, i);
  if (!op) return std::nullopt;
  i = skip_ws(t, i + op->len);
  const auto val = parse_number(t, i, false, false);
  if (!val) return std::nullopt;
  if (val->value < 0.0 || val->value > 1.0) return std::nullopt;
  PParse out;
  out.op = op->op;
  out.value = val->value;
  out.decimals = val->decimals;
  out.text = t.substr(val->begin, val->end - val->begin);
  out.begin = pos;
  out.end = val->end;
  return out;
}

struct DeclaredParse {
  IncompleteOperator op;
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::optional<DeclaredParse> try_declared(const std::string& t,
                                          std::size_t pos) {
  static const char* ns_phrases[] = {
      "not statistically significant", "not significant", "non-significant",
      "non significant", "nonsignificant", "n.s.", "n.s", "ns"};
  for (const char* ph : ns_phrases) {
    std::size_t end;
    if (match_phrase(t, pos, ph, &end) && boundary_after(t, end))
      return DeclaredParse{IncompleteOperator::DeclaredNS, pos, end};
  }
  std::size_t end;
  if (match_phrase(t, pos, "statistically significant", &end) &&
      boundary_after(t, end))
    return DeclaredParse{IncompleteOperator::DeclaredSig, pos, end};
  return std::nullopt;
}

// Clamp a byte offset to a UTF-8 codepoint start so context windows
// stay valid character data.
std::size_t utf8_floor(const std::string& t, std::size_t pos) {
  while (pos > 0 && pos < t.size() &&
         (static_cast<unsigned char>(t[pos]) & 0xC0) == 0x80)
    --pos;
  return pos;
}

std::string context_window(const std::string& t, std::size_t begin,
                           std::size_t end) {
  const std::size_t lo =
      utf8_floor(t, begin > kContextWindow ? begin - kContextWindow : 0);
  const std::size_t hi = utf8_floor(t, std::min(t.size(), end + kContextWindow));
  return t.substr(lo, hi - lo);
}

std::size_t gap_between(const SourceSpan& a, const SourceSpan& b) {
  if (a.byte_start >= b.byte_end) return a.byte_start - b.byte_end;
  if (b.byte_start >= a.byte_end) return b.byte_start - a.byte_end;
  return 0;
}

}  // namespace

ScanResult scan_document(const std::string& text) {
  ScanResult out;
  std::vector<IncompletePValue> declared;
  std::size_t pos = 0;
  const std::size_t n = text.size();
  while (pos < n) {
    const unsigned char c = static_cast<unsigned char>(text[pos]);
    const bool candidate = c == 't' || c == 'F' || c == 'r' || c == 'z' ||
                           c == 'Z' || c == 'p' || c == 'P' || c == 'c' ||
                           c == 'C' || c == 'X' || c == 'n' || c == 'N' ||
                           c == 's' || c == 'S' || c == '\\' || c == 0xCF ||
                           c == 0xCE;
    if (!candidate || !boundary_before(text, pos)) {
      ++pos;
      continue;
    }
    StatParse sp = try_statistic(text, pos);
    if (sp.matched) {
      if (!sp.valid) {
        Diagnostic d;
        d.span = SourceSpan{sp.begin, sp.end, 1};
        d.message = sp.problem;
        out.diagnostics.push_back(d);
        pos = sp.end;  // the p clause, if any, surfaces as incomplete
        continue;
      }
      // Pair with a p clause in the window after the statistic clause,
      // with no second statistic in between.
      std::optional<PParse> paired;
      const std::size_t limit = std::min(n, sp.end + kPairWindow);
      for (std::size_t k = sp.end; k < limit; ++k) {
        if (!boundary_before(text, k)) continue;
        const StatParse other = try_statistic(text, k);
        if (other.matched) break;
        if (auto pc = try_p_clause(text, k)) {
          paired = pc;
          break;
        }
      }
      if (paired) {
        RawReport r;
        r.span = SourceSpan{sp.begin, paired->end, 1};
        r.statistic = sp.stat;
        r.statistic_text = sp.text;
        r.statistic_decimals = sp.decimals;
        r.p_operator = paired->op;
        r.p_text = paired->text;
        r.p_value = paired->value;
        r.p_decimals = paired->decimals;
        r.context = context_window(text, sp.begin, paired->end);
        out.reports.push_back(std::move(r));
        pos = paired->end;
      } else {
        pos = sp.end;
      }
      continue;
    }
    if (auto pc = try_p_clause(text, pos)) {
      IncompletePValue ip;
      ip.span = SourceSpan{pc->begin, pc->end, 1};
      switch (pc->op) {
        case POperator::Eq: ip.op = IncompleteOperator::Eq; break;
        case POperator::Lt: ip.op = IncompleteOperator::Lt; break;
        case POperator::Gt: ip.op = IncompleteOperator::Gt; break;
        case POperator::Leq: ip.op = IncompleteOperator::Leq; break;
        case POperator::Geq: ip.op = IncompleteOperator::Geq; break;
      }
      ip.p_value = pc->value;
      ip.context = context_window(text, pc->begin, pc->end);
      out.incomplete.push_back(std::move(ip));
      pos = pc->end;
      continue;
    }
    if (auto dp = try_declared(text, pos)) {
      IncompletePValue ip;
      ip.span = SourceSpan{dp->begin, dp->end, 1};
      ip.op = dp->op;
      ip.context = context_window(text, dp->begin, dp->end);
      declared.push_back(std::move(ip));
      pos = dp->end;
      continue;
    }
    ++pos;
  }

  // A declaration near an explicit p (either direction) is redundant
  // wording, not a separate incomplete p-value.
  for (auto& d : declared) {
    bool suppressed = false;
    for (const auto& r : out.reports)
      if (gap_between(d.span, r.span) <= kDeclaredWindow) {
        suppressed = true;
        break;
      }
    if (!suppressed)
      for (const auto& ip : out.incomplete)
        if (gap_between(d.span, ip.span) <= kDeclaredWindow) {
          suppressed = true;
          break;
        }
    if (!suppressed) out.incomplete.push_back(std::move(d));
  }
  std::sort(out.incomplete.begin(), out.incomplete.end(),
            [](const IncompletePValue& a, const IncompletePValue& b) {
              return a.span.byte_start < b.span.byte_start;
            });

  // Fill line numbers in one pass over the text.
  std::size_t upto = 0, line = 1;
  auto line_at = [&](std::size_t byte) {
    while (upto < byte && upto < text.size()) {
      if (text[upto] == '\n') ++line;
      ++upto;
    }
    return line;
  };
  std::vector<SourceSpan*> spans;
  for (auto& r : out.reports) spans.push_back(&r.span);
  for (auto& ip : out.incomplete) spans.push_back(&ip.span);
  for (auto& d : out.diagnostics) spans.push_back(&d.span);
  std::sort(spans.begin(), spans.end(),
            [](const SourceSpan* a, const SourceSpan* b) {
              return a->byte_start < b->byte_start;
            });
  for (SourceSpan* s : spans) s->line = line_at(s->byte_start);
  return out;
}

const std::vector<std::string>& default_one_tailed_keywords() {
  static const std::vector<std::string> keywords = {"one-tailed", "one-sided",
                                                    "one-tail", "directional"};
  return keywords;
}

bool detect_one_tailed_context(const std::string& context) {
  return detect_one_tailed_context(context, default_one_tailed_keywords());
}

bool detect_one_tailed_context(const std::string& context,
                               const std::vector<std::string>& keywords) {
  std::string lower(context);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  for (const auto& kw : keywords) {
    std::string k(kw);
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) {
      return static_cast<char>(std::tolower(c));
    });
    if (lower.find(k) != std::string::npos) return true;
  }
  return false;
}

IncompleteClass classify_incomplete(const IncompletePValue& ip, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("alpha must be in (0, 1)");
  switch (ip.op) {
    case IncompleteOperator::Eq:
      if (!ip.p_value) throw std::domain_error("Eq incomplete p without value");
      return *ip.p_value == 0.0 ? IncompleteClass::ImpossibleZero
                                : IncompleteClass::ExactP;
    case IncompleteOperator::Lt:
    case IncompleteOperator::Leq: {
      if (!ip.p_value)
        throw std::domain_error("bounded incomplete p without value");
      const double b = *ip.p_value;
      if (b < alpha) return IncompleteClass::SigBelowAlpha;
      if (b == alpha) return IncompleteClass::SigAtAlpha;
      return IncompleteClass::BoundAboveAlpha;
    }
    case IncompleteOperator::Gt:
    case IncompleteOperator::Geq:
      return IncompleteClass::BoundAboveAlpha;
    case IncompleteOperator::DeclaredNS:
      return IncompleteClass::NonSigDeclared;
    case IncompleteOperator::DeclaredSig:
      return IncompleteClass::SigAtAlpha;
  }
  throw std::domain_error("unknown incomplete operator");
}

const char* to_string(POperator op) {
  switch (op) {
    case POperator::Eq: return "=";
    case POperator::Lt: return "<";
    case POperator::Gt: return ">";
    case POperator::Leq: return "<=";
    case POperator::Geq: return ">=";
  }
  return "?";
}

const char* to_string(IncompleteOperator op) {
  switch (op) {
    case IncompleteOperator::Eq: return "=";
    case IncompleteOperator::Lt: return "<";
    case IncompleteOperator::Gt: return ">";
    case IncompleteOperator::Leq: return "<=";
    case IncompleteOperator::Geq: return ">=";
    case IncompleteOperator::DeclaredNS: return "declared-ns";
    case IncompleteOperator::DeclaredSig: return "declared-sig";
  }
  return "?";
}

const char* to_string(IncompleteClass c) {
  switch (c) {
    case IncompleteClass::ExactP: return "ExactP";
    case IncompleteClass::SigAtAlpha: return "SigAtAlpha";
    case IncompleteClass::SigBelowAlpha: return "SigBelowAlpha";
    case IncompleteClass::NonSigDeclared: return "NonSigDeclared";
    case IncompleteClass::BoundAboveAlpha: return "BoundAboveAlpha";
    case IncompleteClass::ImpossibleZero: return "ImpossibleZero";
  }
  return "?";
}

const char* to_string(kernel::StatKind k) {
  switch (k) {
    case kernel::StatKind::StudentT: return "t";
    case kernel::StatKind::F: return "F";
    case kernel::StatKind::ChiSq: return "chi2";
    case kernel::StatKind::Z: return "z";
    case kernel::StatKind::PearsonR: return "r";
  }
  return "?";
}

std::optional<IncompleteOperator> incomplete_operator_from_string(
    const std::string& s) {
  if (s == "=") return IncompleteOperator::Eq;
  if (s == "<") return IncompleteOperator::Lt;
  if (s == ">") return IncompleteOperator::Gt;
  if (s == "<=") return IncompleteOperator::Leq;
  if (s == ">=") return IncompleteOperator::Geq;
  if (s == "declared-ns") return IncompleteOperator::DeclaredNS;
  if (s == "declared-sig") return IncompleteOperator::DeclaredSig;
  return std::nullopt;
}

}  // namespace statfidelity::extraction
