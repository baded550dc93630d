#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "statfidelity/confusion.hpp"
#include "statfidelity/consistency.hpp"
#include "statfidelity/contingency.hpp"
#include "statfidelity/mlr.hpp"

namespace statfidelity::corpus {

using json = nlohmann::ordered_json;

struct ManifestRow {
  std::string paper_id;
  std::string text_path;
  std::string venue;
  std::optional<int> year;
  bool mcc_used = false;
  std::string effect_sizes = "none";  // none | inferable | explicit
  std::optional<double> alpha;
};

struct RunConfig {
  double alpha = 0.05;
  bool alpha_from_flag = false;  // flag beats the manifest column
  bool one_tailed = true;
  long long replicates = 100000;
  std::uint64_t seed = 42;
  int workers = 0;  // 0 = library default
};

// Columns paper_id and text_path are required; venue, year, mcc_used,
// effect_sizes, and alpha are optional. Relative text paths resolve
// against the manifest's directory. Throws on missing headers,
// duplicate paper ids, or malformed cells.
std::vector<ManifestRow> read_manifest(const std::string& path);

struct PaperScan {
  std::vector<consistency::EvaluatedTest> tests;
  std::vector<extraction::IncompletePValue> incomplete;
  std::vector<extraction::Diagnostic> diagnostics;
  // absent when the document contains no statistical reporting at all
  std::optional<consistency::PaperOutcome> outcome;
};

PaperScan scan_paper(const std::string& text, const consistency::Config& cfg,
                     const std::string& paper_id);

// Machine-readable report for one scanned document.
json scan_json(const PaperScan& scan, const consistency::Config& cfg);

// Scan every paper, classify, and assemble the corpus bundle: per-paper
// outcomes, per-test records, outcome-by-venue and outcome-by-year
// tables at both granularities with association tests, the p-difference
// histogram, and proportions-by-year series. Per-file failures are
// recorded on the paper entry and the run continues. Deterministic for
// a fixed seed and independent of worker count.
json run_corpus(const std::vector<ManifestRow>& rows, const RunConfig& cfg);

// Writes bundle.json plus flat CSV views and the proportions-by-year
// chart into out_dir (created if missing).
void write_bundle_outputs(const json& bundle, const std::string& out_dir);

bool all_papers_failed(const json& bundle);

// Paper-outcome counts in canonical category order; accepts minimal
// hand-written bundles carrying only {"paper_outcome_counts": {...}}.
std::map<std::string, long long> paper_outcome_counts(const json& bundle);

// MLR rows, one per test (incomplete p-values count as Incomplete) or
// one per paper; rows missing venue or year are skipped.
std::vector<mlr::Observation> observations_from_bundle(const json& bundle,
                                                       bool per_test);

// 2xK outcome-count table from two bundles; all-zero categories drop.
ContingencyTable comparison_table(const json& a, const json& b,
                                  const std::string& label_a,
                                  const std::string& label_b,
                                  bool exclude_incomplete);

// Chi-square test, or the MC Fisher exact test when any expected count
// is below 5.
AssociationResult association_auto(const ContingencyTable& t,
                                   long long replicates, std::uint64_t seed);

struct GroundTruthRow {
  std::string paper_id;
  int test_index = 0;         // 1-based, document order within the paper
  std::string human_outcome;  // any Def.-1 category
  std::optional<std::string> author_error_code;  // Typo, RoundingError, ...
  std::optional<std::string> tool_error_code;    // scParsedOK, scCorrect, ...
};

// Columns paper_id, test_index, human_outcome required; error-code
// columns optional but validated against the closed codebooks.
std::vector<GroundTruthRow> read_ground_truth(const std::string& path);

struct ValidationReport {
  // positive = tool flags an error (Inconsistency or DecisionError)
  ConfusionMetrics error_detection;
  // predicted = reported significance claim, reference = recomputed
  ConfusionMetrics significance;
  long long n_matched = 0;
  std::map<std::string, long long> author_code_counts;
  std::map<std::string, long long> tool_code_counts;
};

// Joins truth rows to bundle tests by paper_id + index. Throws when any
// orphan rows exist, listing them.
ValidationReport validate_bundle(const json& bundle,
                                 const std::vector<GroundTruthRow>& truth);

}  // namespace statfidelity::corpus
