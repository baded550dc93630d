#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "statfidelity/corpus.hpp"
#include "statfidelity/csv.hpp"
#include "statfidelity/mlr.hpp"

namespace sf = statfidelity;
using sf::corpus::json;

namespace {

std::uint64_t seed_default() {
  const char* env = std::getenv("STATFIDELITY_SEED");
  if (!env || !*env) return 42;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end)
    throw std::invalid_argument("bad STATFIDELITY_SEED: " + std::string(env));
  return v;
}

json load_bundle(const std::string& path) {
  return json::parse(sf::read_file(path));
}

std::string basename_of(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::string stat_label(const sf::extraction::RawReport& r) {
  using sf::kernel::StatKind;
  const auto& s = r.statistic;
  char buf[64] = "";
  switch (s.kind) {
    case StatKind::StudentT:
    case StatKind::ChiSq:
      std::snprintf(buf, sizeof buf, "(%g)", *s.df1);
      break;
    case StatKind::F:
      std::snprintf(buf, sizeof buf, "(%g, %g)", *s.df1, *s.df2);
      break;
    case StatKind::PearsonR:
      std::snprintf(buf, sizeof buf, "(%lld)", *s.n - 2);
      break;
    case StatKind::Z:
      break;
  }
  return std::string(sf::extraction::to_string(s.kind)) + buf + " = " +
         r.statistic_text + ", p " +
         sf::extraction::to_string(r.p_operator) + " " + r.p_text;
}

void print_scan(const sf::corpus::PaperScan& scan,
                const sf::consistency::Config& cfg) {
  std::printf("tests (%zu)\n", scan.tests.size());
  for (const auto& t : scan.tests) {
    std::printf("  line %-5zu %-36s recomputed [%.6g, %.6g]  %s%s\n",
                t.raw.span.line, stat_label(t.raw).c_str(), t.recomputed_p_lo,
                t.recomputed_p_hi, sf::consistency::to_string(t.outcome),
                t.one_tailed_applied ? " (one-tailed)" : "");
  }
  std::printf("incomplete p-values (%zu)\n", scan.incomplete.size());
  for (const auto& ip : scan.incomplete) {
    const std::string val = ip.p_value ? std::to_string(*ip.p_value) : "";
    std::printf("  line %-5zu p %s %-12s %s\n", ip.span.line,
                sf::extraction::to_string(ip.op), val.c_str(),
                sf::extraction::to_string(
                    sf::extraction::classify_incomplete(ip, cfg.alpha)));
  }
  if (!scan.diagnostics.empty()) {
    std::printf("diagnostics (%zu)\n", scan.diagnostics.size());
    for (const auto& d : scan.diagnostics)
      std::printf("  line %-5zu %s\n", d.span.line, d.message.c_str());
  }
  if (scan.outcome) {
    const auto& o = *scan.outcome;
    std::printf(
        "paper outcome: %s  (%lld complete, %lld incomplete, "
        "%lld inconsistencies, %lld decision errors)\n",
        sf::consistency::to_string(o.outcome), o.n_complete, o.n_incomplete,
        o.n_inconsistent, o.n_decision_errors);
  } else {
    std::printf("paper outcome: none (no statistical reporting found)\n");
  }
}

void print_association(const sf::corpus::AssociationResult& a) {
  if (a.method == sf::corpus::AssocMethod::ChiSquare)
    std::printf("  chi-square(%d) = %.3f, p = %.4g\n", *a.df, *a.statistic,
                a.p);
  else
    std::printf("  MC Fisher exact p = %.4g  (SE %.2g)\n", a.p,
                *a.mc_standard_error);
  std::printf("  Cramer's V = %.3f  95%% CI [%.3f, %.3f]\n", a.cramers_v,
              a.v_ci_lo, a.v_ci_hi);
  if (a.expected_count_warning)
    std::printf("  note: some expected cell counts fall below 5\n");
}

void print_table_association(const char* name, const json& tj) {
  const json& a = tj.at("association");
  if (a.is_null()) {
    std::printf("  %-26s not enough data\n", name);
    return;
  }
  if (a.at("method").get<std::string>() == "chi_square")
    std::printf("  %-26s chi2(%d) = %.3f, p = %.4g, V = %.3f [%.3f, %.3f]\n",
                name, a.at("df").get<int>(), a.at("statistic").get<double>(),
                a.at("p").get<double>(), a.at("cramers_v").get<double>(),
                a.at("v_ci_lo").get<double>(), a.at("v_ci_hi").get<double>());
  else
    std::printf("  %-26s MC-FET p = %.4g (SE %.2g), V = %.3f [%.3f, %.3f]\n",
                name, a.at("p").get<double>(),
                a.at("mc_standard_error").get<double>(),
                a.at("cramers_v").get<double>(),
                a.at("v_ci_lo").get<double>(), a.at("v_ci_hi").get<double>());
}

void print_confusion(const char* title, const sf::corpus::ConfusionMetrics& m) {
  std::printf("%s\n", title);
  std::printf("  tp %lld  fp %lld  fn %lld  tn %lld\n", m.tp, m.fp, m.fn,
              m.tn);
  std::printf("  accuracy    %.4f  95%% CI [%.4f, %.4f]\n", m.accuracy,
              m.acc_ci_lo, m.acc_ci_hi);
  std::printf("  NIR %.4f  P(acc > NIR) = %.3g\n", m.nir, m.p_acc_gt_nir);
  std::printf("  sensitivity %.4f   specificity %.4f\n", m.sensitivity,
              m.specificity);
  std::printf("  PPV         %.4f   F1          %.4f\n", m.ppv, m.f1);
}

int run_scan(const std::string& path, double alpha, bool one_tailed,
             bool as_json) {
  const std::string text = sf::read_file(path);
  if (const std::size_t bad = sf::utf8_invalid_at(text);
      bad != std::string::npos)
    throw std::runtime_error(path + ": invalid UTF-8 at byte " +
                             std::to_string(bad));
  sf::consistency::Config cfg;
  cfg.alpha = alpha;
  cfg.one_tailed_detection = one_tailed;
  const auto scan = sf::corpus::scan_paper(text, cfg, basename_of(path));
  if (as_json)
    std::printf("%s\n", sf::corpus::scan_json(scan, cfg).dump(2).c_str());
  else
    print_scan(scan, cfg);
  const bool decision_error =
      scan.outcome &&
      scan.outcome->outcome == sf::consistency::PaperCategory::DecisionError;
  return decision_error ? 2 : 0;
}

int run_corpus(const std::string& manifest_path, const std::string& out_dir,
               const sf::corpus::RunConfig& cfg) {
  const auto rows = sf::corpus::read_manifest(manifest_path);
  const json bundle = sf::corpus::run_corpus(rows, cfg);
  sf::corpus::write_bundle_outputs(bundle, out_dir);
  long long failures = 0;
  for (const auto& p : bundle.at("papers"))
    if (p.contains("error")) {
      ++failures;
      std::fprintf(stderr, "warning: %s: %s\n",
                   p.at("paper_id").get<std::string>().c_str(),
                   p.at("error").get<std::string>().c_str());
    }
  std::printf("scanned %zu papers (%lld failed), %zu tests, "
              "%zu incomplete p-values\n",
              bundle.at("papers").size(), failures, bundle.at("tests").size(),
              bundle.at("incomplete_pvalues").size());
  std::printf("paper outcomes:");
  for (const auto& [k, v] : bundle.at("paper_outcome_counts").items())
    std::printf("  %s %lld", k.c_str(), v.get<long long>());
  std::printf("\ntest outcomes: ");
  for (const auto& [k, v] : bundle.at("test_outcome_counts").items())
    std::printf("  %s %lld", k.c_str(), v.get<long long>());
  std::printf("\nassociations\n");
  for (const char* name :
       {"paper_outcome_by_venue", "paper_outcome_by_year",
        "test_outcome_by_venue", "test_outcome_by_year"})
    print_table_association(name, bundle.at("tables").at(name));
  std::printf("outputs written to %s\n", out_dir.c_str());
  return sf::corpus::all_papers_failed(bundle) ? 1 : 0;
}

int run_compare(const std::string& path_a, const std::string& path_b,
                bool exclude_incomplete, long long replicates,
                std::uint64_t seed) {
  const json a = load_bundle(path_a);
  const json b = load_bundle(path_b);
  const auto table = sf::corpus::comparison_table(
      a, b, basename_of(path_a), basename_of(path_b), exclude_incomplete);
  std::printf("%-24s", "");
  for (const auto& c : table.col_labels) std::printf("  %14s", c.c_str());
  std::printf("\n");
  for (std::size_t i = 0; i < table.rows(); ++i) {
    std::printf("%-24s", table.row_labels[i].c_str());
    for (long long v : table.counts[i]) std::printf("  %14lld", v);
    std::printf("\n");
  }
  print_association(sf::corpus::association_auto(table, replicates, seed));
  return 0;
}

void print_model_line(const char* name, const sf::mlr::MLRModel& m) {
  std::printf("  %-14s ll = %12.4f   parameters = %zu\n", name,
              m.log_likelihood, m.term_names.size() * m.n_contrasts);
}

void print_lr(const char* label, const sf::mlr::FitComparison& c) {
  std::printf("  %-22s chi2(%d) = %.3f, p = %.4g, McFadden R2 = %.4f\n", label,
              c.df, c.chi_sq, c.p, c.mcfadden_r2);
}

int run_mlr(const std::string& bundle_path, bool collapse, bool per_paper,
            const std::string& reference) {
  const json bundle = load_bundle(bundle_path);
  const auto obs = sf::corpus::observations_from_bundle(bundle, !per_paper);
  if (obs.empty())
    throw std::runtime_error(
        "no observations with venue and year in the bundle");
  std::printf("observations: %zu (%s)\n", obs.size(),
              per_paper ? "per paper" : "per test");

  sf::mlr::PredictorSpec full_spec;
  full_spec.collapse_venues = collapse;
  sf::mlr::PredictorSpec null_spec = full_spec;
  null_spec.include_year = false;
  null_spec.include_venue = false;
  sf::mlr::PredictorSpec year_spec = full_spec;
  year_spec.include_venue = false;
  sf::mlr::PredictorSpec venue_spec = full_spec;
  venue_spec.include_year = false;

  const auto null_model = sf::mlr::fit_multinomial(obs, null_spec, reference);
  const auto year_model = sf::mlr::fit_multinomial(obs, year_spec, reference);
  const auto venue_model = sf::mlr::fit_multinomial(obs, venue_spec, reference);
  const auto full_model = sf::mlr::fit_multinomial(obs, full_spec, reference);

  std::printf("models (outcome reference %s)\n",
              full_model.reference_level.c_str());
  print_model_line("null", null_model);
  print_model_line("year", year_model);
  print_model_line("venue", venue_model);
  print_model_line("venue + year", full_model);

  std::printf("likelihood-ratio tests\n");
  print_lr("full vs null", sf::mlr::lr_test(full_model, null_model));
  print_lr("full vs year (venue)", sf::mlr::lr_test(full_model, year_model));
  print_lr("full vs venue (year)", sf::mlr::lr_test(full_model, venue_model));

  for (const auto& w : full_model.warnings)
    std::printf("warning: %s\n", w.c_str());

  for (std::size_t k = 1; k < full_model.outcome_levels.size(); ++k) {
    const auto& level = full_model.outcome_levels[k];
    std::printf("coefficients: %s vs %s\n", level.c_str(),
                full_model.reference_level.c_str());
    std::printf("  %-14s %10s %9s %8s %10s %9s [%s]\n", "term", "b", "se", "z",
                "p", "OR", "95% CI");
    for (const auto& row : sf::mlr::coefficient_table(full_model, level))
      std::printf("  %-14s %10.4f %9.4f %8.3f %10.4g %9.4f [%.4f, %.4f]\n",
                  row.term.c_str(), row.b, row.se, row.z, row.p,
                  row.odds_ratio, row.or_ci_lo, row.or_ci_hi);
  }

  const std::string at_venue = full_model.spec.venue_reference.value_or("");
  std::vector<sf::mlr::GridPoint> grid;
  for (long long y = std::llround(full_model.year_min);
       y <= std::llround(full_model.year_max); ++y)
    grid.push_back({static_cast<double>(y), at_venue});
  const auto effect = sf::mlr::effect_display(full_model, grid, 0.95);
  std::printf("predicted probabilities at venue %s (95%% bands)\n",
              at_venue.c_str());
  std::printf("  year");
  for (const auto& level : full_model.outcome_levels)
    std::printf("  %-22s", level.c_str());
  std::printf("\n");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::printf("  %4.0f", grid[g].year);
    for (const auto& level : full_model.outcome_levels) {
      const auto& band = effect.curves.at(level)[g];
      char cell[40];
      std::snprintf(cell, sizeof cell, "%.3f [%.3f, %.3f]", band.probability,
                    band.lo, band.hi);
      std::printf("  %-22s", cell);
    }
    std::printf("\n");
  }
  for (const auto& w : effect.warnings) std::printf("warning: %s\n", w.c_str());
  return 0;
}

int run_validate(const std::string& bundle_path, const std::string& truth_path) {
  const json bundle = load_bundle(bundle_path);
  const auto truth = sf::corpus::read_ground_truth(truth_path);
  const auto rep = sf::corpus::validate_bundle(bundle, truth);
  std::printf("matched %lld ground-truth rows\n", rep.n_matched);
  print_confusion("error detection (positive = tool flags an error)",
                  rep.error_detection);
  print_confusion(
      "significance decisions (predicted = reported claim, "
      "reference = recomputed)",
      rep.significance);
  if (!rep.author_code_counts.empty()) {
    std::printf("author error codes\n");
    for (const auto& [k, v] : rep.author_code_counts)
      std::printf("  %-16s %lld\n", k.c_str(), v);
  }
  if (!rep.tool_code_counts.empty()) {
    std::printf("tool error codes\n");
    for (const auto& [k, v] : rep.tool_code_counts)
      std::printf("  %-16s %lld\n", k.c_str(), v);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statistical reporting fidelity checker"};
  app.require_subcommand(1);

  std::string scan_path;
  double scan_alpha = 0.05;
  bool scan_no_one_tailed = false;
  bool scan_json_out = false;
  auto* scan = app.add_subcommand("scan", "check one document");
  scan->add_option("FILE", scan_path, "UTF-8 text file")->required();
  scan->add_option("--alpha", scan_alpha, "significance level")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  scan->add_flag("--no-one-tailed", scan_no_one_tailed,
                 "disable one-tailed rescue");
  scan->add_flag("--json", scan_json_out, "machine-readable report");

  std::string corpus_manifest;
  std::string corpus_out = "statfidelity_out";
  long long corpus_replicates = 100000;
  std::uint64_t corpus_seed = 0;
  double corpus_alpha = 0.05;
  bool corpus_no_one_tailed = false;
  int corpus_workers = 0;
  auto* corpus = app.add_subcommand("corpus", "scan a corpus manifest");
  corpus->add_option("MANIFEST", corpus_manifest, "manifest CSV")->required();
  corpus->add_option("--out", corpus_out, "output directory");
  auto* corpus_seed_opt =
      corpus->add_option("--seed", corpus_seed, "master RNG seed");
  corpus->add_option("--replicates", corpus_replicates,
                     "Monte-Carlo replicates")
      ->check(CLI::PositiveNumber);
  auto* corpus_alpha_opt =
      corpus->add_option("--alpha", corpus_alpha,
                         "significance level (overrides manifest column)")
          ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  corpus->add_flag("--no-one-tailed", corpus_no_one_tailed,
                   "disable one-tailed rescue");
  corpus->add_option("--workers", corpus_workers, "worker cap, 0 = all cores")
      ->check(CLI::NonNegativeNumber);

  std::string cmp_a, cmp_b;
  bool cmp_exclude = false;
  long long cmp_replicates = 100000;
  std::uint64_t cmp_seed = 0;
  auto* compare = app.add_subcommand("compare", "compare two bundles");
  compare->add_option("BUNDLE_A", cmp_a)->required();
  compare->add_option("BUNDLE_B", cmp_b)->required();
  compare->add_flag("--exclude-incomplete", cmp_exclude,
                    "drop the Incomplete category");
  compare->add_option("--replicates", cmp_replicates, "Monte-Carlo replicates")
      ->check(CLI::PositiveNumber);
  auto* cmp_seed_opt = compare->add_option("--seed", cmp_seed, "RNG seed");

  std::string mlr_bundle;
  bool mlr_collapse = false;
  bool mlr_per_test = false;
  bool mlr_per_paper = false;
  std::string mlr_reference;
  auto* mlr = app.add_subcommand("mlr", "multinomial regression on a bundle");
  mlr->add_option("BUNDLE", mlr_bundle)->required();
  mlr->add_flag("--collapse-venues", mlr_collapse,
                "keep SOUPS, pool the rest as OTHER");
  auto* per_test_flag =
      mlr->add_flag("--per-test", mlr_per_test, "test granularity (default)");
  mlr->add_flag("--per-paper", mlr_per_paper, "paper granularity")
      ->excludes(per_test_flag);
  mlr->add_option("--reference", mlr_reference, "outcome reference level");

  std::string val_bundle, val_truth;
  auto* validate = app.add_subcommand("validate", "confusion vs ground truth");
  validate->add_option("BUNDLE", val_bundle)->required();
  validate->add_option("TRUTH", val_truth, "ground truth CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (scan->parsed())
      return run_scan(scan_path, scan_alpha, !scan_no_one_tailed,
                      scan_json_out);
    if (corpus->parsed()) {
      sf::corpus::RunConfig cfg;
      cfg.alpha = corpus_alpha;
      cfg.alpha_from_flag = corpus_alpha_opt->count() > 0;
      cfg.one_tailed = !corpus_no_one_tailed;
      cfg.replicates = corpus_replicates;
      cfg.seed = corpus_seed_opt->count() > 0 ? corpus_seed : seed_default();
      cfg.workers = corpus_workers;
      return run_corpus(corpus_manifest, corpus_out, cfg);
    }
    if (compare->parsed())
      return run_compare(cmp_a, cmp_b, cmp_exclude, cmp_replicates,
                         cmp_seed_opt->count() > 0 ? cmp_seed : seed_default());
    if (mlr->parsed())
      return run_mlr(mlr_bundle, mlr_collapse, mlr_per_paper, mlr_reference);
    if (validate->parsed()) return run_validate(val_bundle, val_truth);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
