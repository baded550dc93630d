#include <stdexcept>
#include <string>

#include "doctest.h"
#include "statfidelity/extraction.hpp"

namespace ex = statfidelity::extraction;
namespace k = statfidelity::kernel;

TEST_CASE("t report with equality p") {
  const auto r = ex::scan_document("We found t(24) = 2.52, p = .019 overall.");
  REQUIRE(r.reports.size() == 1);
  REQUIRE(r.incomplete.empty());
  const auto& rep = r.reports[0];
  CHECK(rep.statistic.kind == k::StatKind::StudentT);
  CHECK(rep.statistic.value == doctest::Approx(2.52));
  CHECK(rep.statistic.df1.value() == doctest::Approx(24.0));
  CHECK(rep.statistic_text == "2.52");
  CHECK(rep.statistic_decimals == 2);
  CHECK(rep.p_operator == ex::POperator::Eq);
  CHECK(rep.p_text == ".019");
  CHECK(rep.p_value == doctest::Approx(0.019));
  CHECK(rep.p_decimals == 3);
  CHECK(rep.span.line == 1);
}

TEST_CASE("F report with two df") {
  const auto r = ex::scan_document("ANOVA: F(2, 58) = 4.81, p < .05.");
  REQUIRE(r.reports.size() == 1);
  const auto& rep = r.reports[0];
  CHECK(rep.statistic.kind == k::StatKind::F);
  CHECK(rep.statistic.df1.value() == doctest::Approx(2.0));
  CHECK(rep.statistic.df2.value() == doctest::Approx(58.0));
  CHECK(rep.p_operator == ex::POperator::Lt);
  CHECK(rep.p_value == doctest::Approx(0.05));
}

TEST_CASE("chi-square spellings") {
  for (const std::string text :
       {std::string("\xCF\x87\xC2\xB2(2, N = 170) = 14.14, p < .001"),
        std::string("\xCF\x87""2(2) = 14.14, p < .001"),
        std::string("chi2(2) = 14.14, p < .001"),
        std::string("X2(2) = 14.14, p < .001"),
        std::string("chi-square(2) = 14.14, p < .001")}) {
    const auto r = ex::scan_document(text);
    REQUIRE_MESSAGE(r.reports.size() == 1, text);
    CHECK(r.reports[0].statistic.kind == k::StatKind::ChiSq);
    CHECK(r.reports[0].statistic.df1.value() == doctest::Approx(2.0));
    CHECK(r.reports[0].statistic.value == doctest::Approx(14.14));
  }
  const auto with_n =
      ex::scan_document("\xCF\x87\xC2\xB2(4, N = 1,232) = 9.30, p = .054");
  REQUIRE(with_n.reports.size() == 1);
  CHECK(with_n.reports[0].statistic.n.value() == 1232);
}

TEST_CASE("z and r reports") {
  const auto z = ex::scan_document("Wilcoxon signed-rank, Z = -2.13, p = .033");
  REQUIRE(z.reports.size() == 1);
  CHECK(z.reports[0].statistic.kind == k::StatKind::Z);
  CHECK(z.reports[0].statistic.value == doctest::Approx(-2.13));
  CHECK_FALSE(z.reports[0].statistic.df1.has_value());

  const auto r = ex::scan_document("correlated, r(58) = .32, p = .013");
  REQUIRE(r.reports.size() == 1);
  CHECK(r.reports[0].statistic.kind == k::StatKind::PearsonR);
  CHECK(r.reports[0].statistic.value == doctest::Approx(0.32));
  // r(df) carries df = n - 2
  CHECK(r.reports[0].statistic.n.value() == 60);
}

TEST_CASE("unicode operators and minus sign") {
  const auto r = ex::scan_document(
      "t(11) = \xE2\x88\x92""2.04, p \xE2\x89\xA4 .066");
  REQUIRE(r.reports.size() == 1);
  CHECK(r.reports[0].statistic.value == doctest::Approx(-2.04));
  CHECK(r.reports[0].p_operator == ex::POperator::Leq);
}

TEST_CASE("scientific notation p-values") {
  const auto r = ex::scan_document("t(120) = 6.5, p = 1.9e-9");
  REQUIRE(r.reports.size() == 1);
  CHECK(r.reports[0].p_value == doctest::Approx(1.9e-9));
}

TEST_CASE("pairing window limits") {
  // p clause more than 80 characters after the statistic stays unpaired
  std::string gap(90, 'x');
  const auto far = ex::scan_document("t(24) = 2.52. " + gap + " p = .019");
  REQUIRE(far.reports.empty());
  REQUIRE(far.incomplete.size() == 1);
  CHECK(far.incomplete[0].op == ex::IncompleteOperator::Eq);
  CHECK(far.incomplete[0].p_value.value() == doctest::Approx(0.019));

  // a second statistic in between claims the p clause
  const auto two = ex::scan_document(
      "t(24) = 2.52; t(30) = 1.11, p = .276 under the second model.");
  REQUIRE(two.reports.size() == 1);
  CHECK(two.reports[0].statistic.value == doctest::Approx(1.11));
}

TEST_CASE("bare p-values and significance declarations") {
  const auto r = ex::scan_document(
      "The effect was significant (p < .001). A second model was n.s. "
      "and a third gave p = .21.");
  REQUIRE(r.reports.empty());
  REQUIRE(r.incomplete.size() == 3);
  CHECK(r.incomplete[0].op == ex::IncompleteOperator::Lt);
  CHECK(r.incomplete[0].p_value.value() == doctest::Approx(0.001));
  CHECK(r.incomplete[1].op == ex::IncompleteOperator::DeclaredNS);
  CHECK_FALSE(r.incomplete[1].p_value.has_value());
  CHECK(r.incomplete[2].op == ex::IncompleteOperator::Eq);
}

TEST_CASE("declarations adjacent to a p clause are suppressed") {
  const auto r = ex::scan_document(
      "The difference was not significant, p = .62.");
  CHECK(r.reports.empty());
  REQUIRE(r.incomplete.size() == 1);
  CHECK(r.incomplete[0].op == ex::IncompleteOperator::Eq);
}

TEST_CASE("invalid statistics produce diagnostics, not reports") {
  const auto r = ex::scan_document("t(0) = 2.52, p = .019 and r(1) = .5, "
                                   "p = .2 and F(2, 10) = -3.0, p = .9");
  CHECK(r.reports.empty());
  CHECK(r.diagnostics.size() == 3);
}

TEST_CASE("one-tailed context detection") {
  CHECK(ex::detect_one_tailed_context("we used a one-tailed test here"));
  CHECK(ex::detect_one_tailed_context("a one tailed comparison"));
  CHECK(ex::detect_one_tailed_context("directional hypothesis, one-sided"));
  CHECK_FALSE(ex::detect_one_tailed_context("a two-tailed test"));
  CHECK_FALSE(ex::detect_one_tailed_context("nothing of interest"));
  CHECK(ex::detect_one_tailed_context("custom marker", {"marker"}));
  CHECK_FALSE(ex::detect_one_tailed_context("one-tailed", {"marker"}));
}

TEST_CASE("incomplete p-value classification") {
  using IC = ex::IncompleteClass;
  ex::IncompletePValue ip;

  ip.op = ex::IncompleteOperator::Eq;
  ip.p_value = 0.21;
  CHECK(ex::classify_incomplete(ip, 0.05) == IC::ExactP);

  ip.op = ex::IncompleteOperator::Lt;
  ip.p_value = 0.05;
  CHECK(ex::classify_incomplete(ip, 0.05) == IC::SigAtAlpha);
  ip.p_value = 0.001;
  CHECK(ex::classify_incomplete(ip, 0.05) == IC::SigBelowAlpha);
  ip.p_value = 0.1;
  CHECK(ex::classify_incomplete(ip, 0.05) == IC::BoundAboveAlpha);
  ip.p_value = 0.0;
  CHECK(ex::classify_incomplete(ip, 0.05) == IC::ImpossibleZero);

  ip.op = ex::IncompleteOperator::DeclaredNS;
  ip.p_value.reset();
  CHECK(ex::classify_incomplete(ip, 0.05) == IC::NonSigDeclared);
  ip.op = ex::IncompleteOperator::DeclaredSig;
  CHECK(ex::classify_incomplete(ip, 0.05) == IC::SigAtAlpha);

  ip.op = ex::IncompleteOperator::Eq;
  ip.p_value = 0.2;
  CHECK_THROWS_AS(ex::classify_incomplete(ip, 0.0), std::domain_error);
  CHECK_THROWS_AS(ex::classify_incomplete(ip, 1.0), std::domain_error);
}

TEST_CASE("spans track bytes and lines") {
  const std::string text = "first line\nsecond t(24) = 2.52, p = .019 end";
  const auto r = ex::scan_document(text);
  REQUIRE(r.reports.size() == 1);
  const auto& sp = r.reports[0].span;
  CHECK(sp.line == 2);
  CHECK(text.substr(sp.byte_start, sp.byte_end - sp.byte_start) ==
        "t(24) = 2.52, p = .019");
}

TEST_CASE("enum string round-trips") {
  CHECK(std::string(ex::to_string(ex::POperator::Leq)) == "<=");
  CHECK(std::string(ex::to_string(ex::IncompleteOperator::DeclaredNS)) ==
        "declared-ns");
  CHECK(std::string(ex::to_string(ex::IncompleteClass::BoundAboveAlpha)) ==
        "BoundAboveAlpha");
  CHECK(std::string(ex::to_string(k::StatKind::ChiSq)) == "chi2");
  CHECK(ex::incomplete_operator_from_string("declared-sig").value() ==
        ex::IncompleteOperator::DeclaredSig);
  CHECK_FALSE(ex::incomplete_operator_from_string("bogus").has_value());
}
