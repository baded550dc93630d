#include "statfidelity/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>
#include <stdexcept>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "statfidelity/csv.hpp"

namespace statfidelity::corpus {

namespace {

constexpr std::array<const char*, 4> kCategories = {
    "CorrectNHST", "Inconsistency", "DecisionError", "Incomplete"};

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_bool_cell(const std::string& raw, const std::string& column) {
  const std::string v = lower(trim(raw));
  if (v.empty() || v == "0" || v == "false" || v == "no" || v == "n") return false;
  if (v == "1" || v == "true" || v == "yes" || v == "y") return true;
  throw std::invalid_argument("bad boolean in column " + column + ": " + raw);
}

std::string dir_of(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

std::size_t header_index(const std::vector<std::string>& header,
                         const std::string& name, bool required) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (lower(trim(header[i])) == name) return i;
  if (required)
    throw std::invalid_argument("manifest is missing required column: " + name);
  return static_cast<std::size_t>(-1);
}

std::string cell_at(const std::vector<std::string>& row, std::size_t idx) {
  if (idx == static_cast<std::size_t>(-1) || idx >= row.size()) return "";
  return trim(row[idx]);
}

}  // namespace

std::vector<ManifestRow> read_manifest(const std::string& path) {
  const auto table = parse_csv(read_file(path));
  if (table.empty()) throw std::invalid_argument("empty manifest: " + path);
  const auto& header = table[0];
  const std::size_t c_id = header_index(header, "paper_id", true);
  const std::size_t c_path = header_index(header, "text_path", true);
  const std::size_t c_venue = header_index(header, "venue", false);
  const std::size_t c_year = header_index(header, "year", false);
  const std::size_t c_mcc = header_index(header, "mcc_used", false);
  const std::size_t c_eff = header_index(header, "effect_sizes", false);
  const std::size_t c_alpha = header_index(header, "alpha", false);

  const std::string base = dir_of(path);
  std::vector<ManifestRow> rows;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < table.size(); ++r) {
    bool blank = true;
    for (const auto& c : table[r])
      if (!trim(c).empty()) blank = false;
    if (blank) continue;
    ManifestRow m;
    m.paper_id = cell_at(table[r], c_id);
    if (m.paper_id.empty())
      throw std::invalid_argument("manifest row " + std::to_string(r + 1) +
                                  ": empty paper_id");
    if (!seen.insert(m.paper_id).second)
      throw std::invalid_argument("duplicate paper_id: " + m.paper_id);
    m.text_path = cell_at(table[r], c_path);
    if (m.text_path.empty())
      throw std::invalid_argument("manifest row " + std::to_string(r + 1) +
                                  ": empty text_path");
    if (m.text_path[0] != '/') m.text_path = base + "/" + m.text_path;
    m.venue = cell_at(table[r], c_venue);
    const std::string year = cell_at(table[r], c_year);
    if (!year.empty()) {
      std::size_t used = 0;
      m.year = std::stoi(year, &used);
      if (used != year.size())
        throw std::invalid_argument("bad year for " + m.paper_id + ": " + year);
    }
    m.mcc_used = parse_bool_cell(cell_at(table[r], c_mcc), "mcc_used");
    const std::string eff = lower(cell_at(table[r], c_eff));
    if (eff.empty())
      m.effect_sizes = "none";
    else if (eff == "none" || eff == "inferable" || eff == "explicit")
      m.effect_sizes = eff;
    else
      throw std::invalid_argument("bad effect_sizes for " + m.paper_id + ": " +
                                  eff);
    const std::string alpha = cell_at(table[r], c_alpha);
    if (!alpha.empty()) {
      std::size_t used = 0;
      m.alpha = std::stod(alpha, &used);
      if (used != alpha.size() || !(*m.alpha > 0.0 && *m.alpha < 1.0))
        throw std::invalid_argument("bad alpha for " + m.paper_id + ": " + alpha);
    }
    rows.push_back(std::move(m));
  }
  return rows;
}

PaperScan scan_paper(const std::string& text, const consistency::Config& cfg,
                     const std::string& paper_id) {
  auto scanned = extraction::scan_document(text);
  PaperScan out;
  out.diagnostics = std::move(scanned.diagnostics);
  out.incomplete = std::move(scanned.incomplete);
  out.tests.reserve(scanned.reports.size());
  for (const auto& report : scanned.reports)
    out.tests.push_back(consistency::evaluate_test(report, cfg));
  if (!out.tests.empty() || !out.incomplete.empty())
    out.outcome = consistency::aggregate_paper(paper_id, out.tests, out.incomplete);
  return out;
}

namespace {

json test_json(const consistency::EvaluatedTest& t) {
  const auto& r = t.raw;
  json j;
  j["kind"] = extraction::to_string(r.statistic.kind);
  j["value"] = r.statistic.value;
  j["df1"] = r.statistic.df1 ? json(*r.statistic.df1) : json(nullptr);
  j["df2"] = r.statistic.df2 ? json(*r.statistic.df2) : json(nullptr);
  j["n"] = r.statistic.n ? json(*r.statistic.n) : json(nullptr);
  j["statistic_text"] = r.statistic_text;
  j["p_operator"] = extraction::to_string(r.p_operator);
  j["p_text"] = r.p_text;
  j["p_value"] = r.p_value;
  j["line"] = r.span.line;
  j["byte_start"] = r.span.byte_start;
  j["byte_end"] = r.span.byte_end;
  j["recomputed_p_lo"] = t.recomputed_p_lo;
  j["recomputed_p_hi"] = t.recomputed_p_hi;
  j["outcome"] = consistency::to_string(t.outcome);
  j["one_tailed_applied"] = t.one_tailed_applied;
  j["p_difference"] = t.p_difference ? json(*t.p_difference) : json(nullptr);
  return j;
}

json incomplete_json(const extraction::IncompletePValue& ip, double alpha) {
  json j;
  j["operator"] = extraction::to_string(ip.op);
  j["p_value"] = ip.p_value ? json(*ip.p_value) : json(nullptr);
  j["class"] = extraction::to_string(extraction::classify_incomplete(ip, alpha));
  j["line"] = ip.span.line;
  j["byte_start"] = ip.span.byte_start;
  j["byte_end"] = ip.span.byte_end;
  return j;
}

json diagnostic_json(const extraction::Diagnostic& d) {
  json j;
  j["line"] = d.span.line;
  j["byte_start"] = d.span.byte_start;
  j["message"] = d.message;
  return j;
}

json outcome_counters_json(const consistency::PaperOutcome& o) {
  json j;
  j["outcome"] = consistency::to_string(o.outcome);
  j["n_complete"] = o.n_complete;
  j["n_incomplete"] = o.n_incomplete;
  j["n_inconsistent"] = o.n_inconsistent;
  j["n_decision_errors"] = o.n_decision_errors;
  return j;
}

}  // namespace

json scan_json(const PaperScan& scan, const consistency::Config& cfg) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "statfidelity-scan";
  json c;
  c["alpha"] = cfg.alpha;
  c["one_tailed"] = cfg.one_tailed_detection;
  c["mcc_used"] = cfg.mcc_used;
  j["config"] = c;
  if (scan.outcome)
    j.update(outcome_counters_json(*scan.outcome));
  else
    j["outcome"] = nullptr;
  j["tests"] = json::array();
  for (const auto& t : scan.tests) j["tests"].push_back(test_json(t));
  j["incomplete_pvalues"] = json::array();
  for (const auto& ip : scan.incomplete)
    j["incomplete_pvalues"].push_back(incomplete_json(ip, cfg.alpha));
  j["diagnostics"] = json::array();
  for (const auto& d : scan.diagnostics)
    j["diagnostics"].push_back(diagnostic_json(d));
  return j;
}

AssociationResult association_auto(const ContingencyTable& t,
                                   long long replicates, std::uint64_t seed) {
  t.validate();
  return any_expected_below(t, 5.0) ? fisher_exact_mc(t, replicates, seed)
                                    : chisq_independence(t);
}

namespace {

// Outcome counts per column key, rows fixed to the four categories.
struct TableAcc {
  std::vector<std::string> cols;
  std::map<std::string, std::size_t> index;
  std::vector<std::array<long long, 4>> by_col;

  void seed_column(const std::string& col) {
    if (index.try_emplace(col, cols.size()).second) {
      cols.push_back(col);
      by_col.push_back({0, 0, 0, 0});
    }
  }
  void add(const std::string& col, std::size_t category) {
    seed_column(col);
    ++by_col[index[col]][category];
  }
};

ContingencyTable finish_table(const TableAcc& acc) {
  ContingencyTable t;
  std::vector<std::size_t> keep_cols;
  for (std::size_t j = 0; j < acc.cols.size(); ++j) {
    long long sum = 0;
    for (std::size_t i = 0; i < 4; ++i) sum += acc.by_col[j][i];
    if (sum > 0) keep_cols.push_back(j);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    long long sum = 0;
    for (std::size_t j : keep_cols) sum += acc.by_col[j][i];
    if (sum == 0) continue;
    t.row_labels.push_back(kCategories[i]);
    std::vector<long long> row;
    for (std::size_t j : keep_cols) row.push_back(acc.by_col[j][i]);
    t.counts.push_back(std::move(row));
  }
  for (std::size_t j : keep_cols) t.col_labels.push_back(acc.cols[j]);
  return t;
}

json association_json(const AssociationResult& a,
                      std::pair<double, double> boot) {
  json j;
  j["method"] = a.method == AssocMethod::ChiSquare ? "chi_square" : "fisher_mc";
  j["statistic"] = a.statistic ? json(*a.statistic) : json(nullptr);
  j["df"] = a.df ? json(*a.df) : json(nullptr);
  j["p"] = a.p;
  j["cramers_v"] = a.cramers_v;
  j["v_ci_lo"] = a.v_ci_lo;
  j["v_ci_hi"] = a.v_ci_hi;
  j["v_ci_bootstrap"] = json::array({boot.first, boot.second});
  j["mc_standard_error"] =
      a.mc_standard_error ? json(*a.mc_standard_error) : json(nullptr);
  j["expected_count_warning"] = a.expected_count_warning;
  return j;
}

json table_json(const ContingencyTable& t, const RunConfig& cfg,
                std::uint64_t salt) {
  json j;
  j["row_labels"] = t.row_labels;
  j["col_labels"] = t.col_labels;
  j["counts"] = t.counts;
  if (t.rows() >= 2 && t.cols() >= 2) {
    const auto assoc = association_auto(t, cfg.replicates, cfg.seed + salt);
    const auto boot =
        cramers_v_ci_bootstrap(t, cfg.replicates, cfg.seed + salt + 100);
    j["association"] = association_json(assoc, boot);
  } else {
    j["association"] = nullptr;
  }
  return j;
}

std::size_t category_rank(consistency::PaperCategory c) {
  switch (c) {
    case consistency::PaperCategory::CorrectNHST: return 0;
    case consistency::PaperCategory::Inconsistency: return 1;
    case consistency::PaperCategory::DecisionError: return 2;
    case consistency::PaperCategory::Incomplete: return 3;
  }
  return 3;
}

std::size_t category_rank(consistency::TestOutcome o) {
  switch (o) {
    case consistency::TestOutcome::CorrectNHST: return 0;
    case consistency::TestOutcome::Inconsistency: return 1;
    case consistency::TestOutcome::DecisionError: return 2;
  }
  return 0;
}

std::string fmt1(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string svg_proportions(const json& series) {
  const double left = 56, right = 560, top = 24, bottom = 376;
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"420\" "
       "viewBox=\"0 0 720 420\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"720\" height=\"420\" fill=\"#ffffff\"/>\n";
  if (series.empty()) {
    s += "<text x=\"360\" y=\"210\" text-anchor=\"middle\">no dated papers"
         "</text>\n</svg>\n";
    return s;
  }
  const double y0 = series.front().at("year").get<double>();
  const double y1 = series.back().at("year").get<double>();
  const double span = y1 > y0 ? y1 - y0 : 1.0;
  auto px = [&](double year) {
    return left + (year - y0) / span * (right - left);
  };
  auto py = [&](double share) { return bottom - share * (bottom - top); };
  for (int g = 0; g <= 4; ++g) {
    const double share = g / 4.0;
    s += "<line x1=\"" + fmt1(left) + "\" y1=\"" + fmt1(py(share)) + "\" x2=\"" +
         fmt1(right) + "\" y2=\"" + fmt1(py(share)) +
         "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + fmt1(left - 8) + "\" y=\"" + fmt1(py(share) + 4) +
         "\" text-anchor=\"end\">" + fmt1(share * 100) + "%</text>\n";
  }
  for (const auto& pt : series) {
    const double x = px(pt.at("year").get<double>());
    s += "<text x=\"" + fmt1(x) + "\" y=\"" + fmt1(bottom + 18) +
         "\" text-anchor=\"middle\">" +
         std::to_string(pt.at("year").get<long long>()) + "</text>\n";
  }
  s += "<line x1=\"" + fmt1(left) + "\" y1=\"" + fmt1(bottom) + "\" x2=\"" +
       fmt1(right) + "\" y2=\"" + fmt1(bottom) + "\" stroke=\"#000000\"/>\n";
  const std::array<const char*, 4> colors = {"#2e7d32", "#ef6c00", "#c62828",
                                             "#1565c0"};
  for (std::size_t c = 0; c < 4; ++c) {
    std::string pts;
    for (const auto& pt : series) {
      pts += fmt1(px(pt.at("year").get<double>())) + "," +
             fmt1(py(pt.at(kCategories[c]).get<double>())) + " ";
    }
    s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
         std::string(colors[c]) + "\" stroke-width=\"2\"/>\n";
    const double ly = top + 18.0 * static_cast<double>(c);
    s += "<rect x=\"580\" y=\"" + fmt1(ly - 9) +
         "\" width=\"12\" height=\"12\" fill=\"" + std::string(colors[c]) +
         "\"/>\n";
    s += "<text x=\"598\" y=\"" + fmt1(ly + 2) + "\">" +
         std::string(kCategories[c]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

struct PaperResult {
  PaperScan scan;
  std::string error;
  double alpha_used = 0.05;
};

}  // namespace

json run_corpus(const std::vector<ManifestRow>& rows, const RunConfig& cfg) {
  std::vector<PaperResult> results(rows.size());
  const long long n_rows = static_cast<long long>(rows.size());
#if defined(_OPENMP)
  const int workers = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#endif
  for (long long i = 0; i < n_rows; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    auto& res = results[static_cast<std::size_t>(i)];
    consistency::Config ccfg;
    ccfg.alpha = cfg.alpha_from_flag ? cfg.alpha : row.alpha.value_or(cfg.alpha);
    ccfg.one_tailed_detection = cfg.one_tailed;
    ccfg.mcc_used = row.mcc_used;
    ccfg.replicates = cfg.replicates;
    ccfg.seed = cfg.seed;
    res.alpha_used = ccfg.alpha;
    try {
      const std::string text = read_file(row.text_path);
      if (const std::size_t bad = utf8_invalid_at(text);
          bad != std::string::npos)
        throw std::runtime_error(row.text_path + ": invalid UTF-8 at byte " +
                                 std::to_string(bad));
      res.scan = scan_paper(text, ccfg, row.paper_id);
    } catch (const std::exception& e) {
      res.error = e.what();
    }
  }

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].paper_id < rows[b].paper_id;
  });

  json bundle;
  bundle["schema_version"] = 1;
  bundle["kind"] = "statfidelity-corpus-bundle";
  json config;
  config["alpha"] = cfg.alpha;
  config["one_tailed"] = cfg.one_tailed;
  config["replicates"] = cfg.replicates;
  config["seed"] = cfg.seed;
  bundle["config"] = config;

  json papers = json::array();
  json tests = json::array();
  json incompletes = json::array();
  json diagnostics = json::array();
  std::map<std::string, long long> paper_counts;
  std::map<std::string, long long> test_counts;
  for (const char* c : kCategories) {
    paper_counts[c] = 0;
    test_counts[c] = 0;
  }

  TableAcc paper_by_venue, paper_by_year, test_by_venue, test_by_year;
  for (const auto& row : rows)
    if (!row.venue.empty()) {
      paper_by_venue.seed_column(row.venue);
      test_by_venue.seed_column(row.venue);
    }
  {
    std::set<int> years;
    for (const auto& row : rows)
      if (row.year) years.insert(*row.year);
    for (int y : years) {
      paper_by_year.seed_column(std::to_string(y));
      test_by_year.seed_column(std::to_string(y));
    }
  }

  std::vector<consistency::EvaluatedTest> all_tests;
  struct YearAgg {
    long long papers = 0, mcc = 0, inferable = 0, explicit_es = 0;
    std::array<long long, 4> outcome = {0, 0, 0, 0};
  };
  std::map<int, YearAgg> by_year;

  for (std::size_t idx : order) {
    const auto& row = rows[idx];
    const auto& res = results[idx];
    json jp;
    jp["paper_id"] = row.paper_id;
    jp["venue"] = row.venue.empty() ? json(nullptr) : json(row.venue);
    jp["year"] = row.year ? json(*row.year) : json(nullptr);
    jp["mcc_used"] = row.mcc_used;
    jp["effect_sizes"] = row.effect_sizes;
    jp["alpha"] = res.alpha_used;
    if (!res.error.empty()) {
      jp["outcome"] = nullptr;
      jp["error"] = res.error;
      papers.push_back(std::move(jp));
      continue;
    }
    if (res.scan.outcome) {
      jp.update(outcome_counters_json(*res.scan.outcome));
      const auto cat = res.scan.outcome->outcome;
      ++paper_counts[consistency::to_string(cat)];
      if (!row.venue.empty()) paper_by_venue.add(row.venue, category_rank(cat));
      if (row.year) {
        paper_by_year.add(std::to_string(*row.year), category_rank(cat));
        auto& agg = by_year[*row.year];
        ++agg.papers;
        ++agg.outcome[category_rank(cat)];
        if (row.mcc_used) ++agg.mcc;
        if (row.effect_sizes == "inferable") ++agg.inferable;
        if (row.effect_sizes == "explicit") ++agg.explicit_es;
      }
    } else {
      jp["outcome"] = nullptr;
    }
    papers.push_back(std::move(jp));

    for (const auto& t : res.scan.tests) {
      json jt;
      jt["paper_id"] = row.paper_id;
      jt.update(test_json(t));
      tests.push_back(std::move(jt));
      all_tests.push_back(t);
      ++test_counts[consistency::to_string(t.outcome)];
      if (!row.venue.empty())
        test_by_venue.add(row.venue, category_rank(t.outcome));
      if (row.year)
        test_by_year.add(std::to_string(*row.year), category_rank(t.outcome));
    }
    for (const auto& ip : res.scan.incomplete) {
      json ji;
      ji["paper_id"] = row.paper_id;
      ji.update(incomplete_json(ip, res.alpha_used));
      incompletes.push_back(std::move(ji));
      ++test_counts["Incomplete"];
      if (!row.venue.empty()) test_by_venue.add(row.venue, 3);
      if (row.year) test_by_year.add(std::to_string(*row.year), 3);
    }
    for (const auto& d : res.scan.diagnostics) {
      json jd;
      jd["paper_id"] = row.paper_id;
      jd.update(diagnostic_json(d));
      diagnostics.push_back(std::move(jd));
    }
  }

  bundle["papers"] = std::move(papers);
  bundle["tests"] = std::move(tests);
  bundle["incomplete_pvalues"] = std::move(incompletes);
  bundle["diagnostics"] = std::move(diagnostics);
  json jpc, jtc;
  for (const char* c : kCategories) {
    jpc[c] = paper_counts[c];
    jtc[c] = test_counts[c];
  }
  bundle["paper_outcome_counts"] = std::move(jpc);
  bundle["test_outcome_counts"] = std::move(jtc);

  json tables;
  tables["paper_outcome_by_venue"] =
      table_json(finish_table(paper_by_venue), cfg, 11);
  tables["paper_outcome_by_year"] =
      table_json(finish_table(paper_by_year), cfg, 12);
  tables["test_outcome_by_venue"] =
      table_json(finish_table(test_by_venue), cfg, 13);
  tables["test_outcome_by_year"] =
      table_json(finish_table(test_by_year), cfg, 14);
  bundle["tables"] = std::move(tables);

  const double bin_width = 0.01;
  json hist;
  hist["bin_width"] = bin_width;
  hist["bins"] = json::array();
  for (const auto& bin : consistency::p_difference_histogram(all_tests, bin_width)) {
    json jb;
    jb["center"] = bin.center;
    jb["count"] = bin.count;
    hist["bins"].push_back(std::move(jb));
  }
  bundle["p_difference_histogram"] = std::move(hist);

  json series = json::array();
  for (const auto& [year, agg] : by_year) {
    json pt;
    pt["year"] = year;
    pt["n_papers"] = agg.papers;
    const double d = static_cast<double>(agg.papers);
    for (std::size_t c = 0; c < 4; ++c)
      pt[kCategories[c]] = static_cast<double>(agg.outcome[c]) / d;
    pt["mcc_used"] = static_cast<double>(agg.mcc) / d;
    pt["effect_inferable"] = static_cast<double>(agg.inferable) / d;
    pt["effect_explicit"] = static_cast<double>(agg.explicit_es) / d;
    series.push_back(std::move(pt));
  }
  bundle["proportions_by_year"] = std::move(series);
  return bundle;
}

bool all_papers_failed(const json& bundle) {
  const auto& papers = bundle.at("papers");
  if (papers.empty()) return false;
  for (const auto& p : papers)
    if (!p.contains("error")) return false;
  return true;
}

std::map<std::string, long long> paper_outcome_counts(const json& bundle) {
  std::map<std::string, long long> out;
  if (bundle.contains("paper_outcome_counts") &&
      bundle["paper_outcome_counts"].is_object()) {
    for (const auto& [k, v] : bundle["paper_outcome_counts"].items())
      out[k] = v.get<long long>();
    return out;
  }
  if (bundle.contains("papers")) {
    for (const auto& p : bundle["papers"])
      if (p.contains("outcome") && p["outcome"].is_string())
        ++out[p["outcome"].get<std::string>()];
    return out;
  }
  throw std::invalid_argument(
      "bundle carries neither paper_outcome_counts nor papers");
}

std::vector<mlr::Observation> observations_from_bundle(const json& bundle,
                                                       bool per_test) {
  struct Meta {
    std::string venue;
    std::optional<double> year;
  };
  std::map<std::string, Meta> meta;
  const json papers = bundle.value("papers", json::array());
  for (const auto& p : papers) {
    Meta m;
    if (p.contains("venue") && p["venue"].is_string())
      m.venue = p["venue"].get<std::string>();
    if (p.contains("year") && p["year"].is_number())
      m.year = p["year"].get<double>();
    meta[p.at("paper_id").get<std::string>()] = std::move(m);
  }
  std::vector<mlr::Observation> out;
  auto push = [&](const std::string& paper_id, const std::string& outcome) {
    const auto it = meta.find(paper_id);
    if (it == meta.end() || it->second.venue.empty() || !it->second.year)
      return;
    out.push_back({outcome, *it->second.year, it->second.venue, 1.0});
  };
  if (per_test) {
    for (const auto& t : bundle.value("tests", json::array()))
      push(t.at("paper_id").get<std::string>(),
           t.at("outcome").get<std::string>());
    for (const auto& ip : bundle.value("incomplete_pvalues", json::array()))
      push(ip.at("paper_id").get<std::string>(), "Incomplete");
  } else {
    for (const auto& p : papers)
      if (p.contains("outcome") && p["outcome"].is_string())
        push(p.at("paper_id").get<std::string>(),
             p["outcome"].get<std::string>());
  }
  return out;
}

ContingencyTable comparison_table(const json& a, const json& b,
                                  const std::string& label_a,
                                  const std::string& label_b,
                                  bool exclude_incomplete) {
  const auto ca = paper_outcome_counts(a);
  const auto cb = paper_outcome_counts(b);
  for (const auto* counts : {&ca, &cb})
    for (const auto& [k, v] : *counts) {
      if (std::find(kCategories.begin(), kCategories.end(), k) ==
          kCategories.end())
        throw std::invalid_argument("unknown outcome category: " + k);
      if (v < 0) throw std::invalid_argument("negative count for " + k);
    }
  auto get = [](const std::map<std::string, long long>& m,
                const std::string& k) {
    const auto it = m.find(k);
    return it == m.end() ? 0LL : it->second;
  };
  ContingencyTable t;
  t.row_labels = {label_a, label_b};
  t.counts = {{}, {}};
  for (const char* cat : kCategories) {
    if (exclude_incomplete && std::string(cat) == "Incomplete") continue;
    const long long x = get(ca, cat), y = get(cb, cat);
    if (x + y == 0) continue;
    t.col_labels.push_back(cat);
    t.counts[0].push_back(x);
    t.counts[1].push_back(y);
  }
  if (t.col_labels.size() < 2)
    throw std::invalid_argument(
        "fewer than two outcome categories present in the comparison");
  return t;
}

namespace {

std::string json_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return csv_field(v.get<std::string>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

std::string records_csv(const json& records,
                        const std::vector<std::string>& columns) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& rec : records) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ",";
      out += json_cell(rec.value(columns[i], json(nullptr)));
    }
    out += "\n";
  }
  return out;
}

}  // namespace

void write_bundle_outputs(const json& bundle, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/bundle.json", bundle.dump(2) + "\n");
  write_file(out_dir + "/papers.csv",
             records_csv(bundle.at("papers"),
                         {"paper_id", "venue", "year", "mcc_used",
                          "effect_sizes", "alpha", "outcome", "n_complete",
                          "n_incomplete", "n_inconsistent", "n_decision_errors",
                          "error"}));
  write_file(out_dir + "/tests.csv",
             records_csv(bundle.at("tests"),
                         {"paper_id", "kind", "value", "df1", "df2", "n",
                          "statistic_text", "p_operator", "p_text", "p_value",
                          "line", "recomputed_p_lo", "recomputed_p_hi",
                          "outcome", "one_tailed_applied", "p_difference"}));
  write_file(out_dir + "/incomplete_pvalues.csv",
             records_csv(bundle.at("incomplete_pvalues"),
                         {"paper_id", "operator", "p_value", "class", "line"}));
  write_file(out_dir + "/proportions_by_year.csv",
             records_csv(bundle.at("proportions_by_year"),
                         {"year", "n_papers", "CorrectNHST", "Inconsistency",
                          "DecisionError", "Incomplete", "mcc_used",
                          "effect_inferable", "effect_explicit"}));
  write_file(out_dir + "/proportions_by_year.svg",
             svg_proportions(bundle.at("proportions_by_year")));
}

std::vector<GroundTruthRow> read_ground_truth(const std::string& path) {
  static const std::set<std::string> author_codes = {
      "Typo", "RoundingError", "OneTailedUS", "Miscalculation"};
  static const std::set<std::string> tool_codes = {
      "scParsedOK", "scCorrect", "scMisclassified", "scMissedMC"};
  const auto table = parse_csv(read_file(path));
  if (table.empty()) throw std::invalid_argument("empty ground truth: " + path);
  const auto& header = table[0];
  const std::size_t c_id = header_index(header, "paper_id", true);
  const std::size_t c_idx = header_index(header, "test_index", true);
  const std::size_t c_out = header_index(header, "human_outcome", true);
  const std::size_t c_author = header_index(header, "author_error_code", false);
  const std::size_t c_tool = header_index(header, "tool_error_code", false);
  std::vector<GroundTruthRow> rows;
  for (std::size_t r = 1; r < table.size(); ++r) {
    GroundTruthRow row;
    row.paper_id = cell_at(table[r], c_id);
    if (row.paper_id.empty()) continue;
    const std::string idx = cell_at(table[r], c_idx);
    std::size_t used = 0;
    row.test_index = std::stoi(idx, &used);
    if (used != idx.size() || row.test_index < 1)
      throw std::invalid_argument("bad test_index for " + row.paper_id + ": " +
                                  idx);
    row.human_outcome = cell_at(table[r], c_out);
    if (std::find(kCategories.begin(), kCategories.end(), row.human_outcome) ==
        kCategories.end())
      throw std::invalid_argument("bad human_outcome for " + row.paper_id +
                                  ": " + row.human_outcome);
    const std::string author = cell_at(table[r], c_author);
    if (!author.empty()) {
      if (!author_codes.count(author))
        throw std::invalid_argument("unknown author_error_code: " + author);
      row.author_error_code = author;
    }
    const std::string tool = cell_at(table[r], c_tool);
    if (!tool.empty()) {
      if (!tool_codes.count(tool))
        throw std::invalid_argument("unknown tool_error_code: " + tool);
      row.tool_error_code = tool;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ValidationReport validate_bundle(const json& bundle,
                                 const std::vector<GroundTruthRow>& truth) {
  std::map<std::string, std::vector<const json*>> by_paper;
  for (const auto& t : bundle.at("tests"))
    by_paper[t.at("paper_id").get<std::string>()].push_back(&t);
  std::map<std::string, double> alpha_of;
  for (const auto& p : bundle.value("papers", json::array()))
    alpha_of[p.at("paper_id").get<std::string>()] = p.value("alpha", 0.05);

  long long tp = 0, fp = 0, fn = 0, tn = 0;
  long long stp = 0, sfp = 0, sfn = 0, stn = 0;
  std::vector<std::string> orphans;
  ValidationReport rep;
  for (const auto& row : truth) {
    const auto it = by_paper.find(row.paper_id);
    if (it == by_paper.end() ||
        row.test_index > static_cast<int>(it->second.size())) {
      orphans.push_back(row.paper_id + "#" + std::to_string(row.test_index));
      continue;
    }
    const json& t = *it->second[static_cast<std::size_t>(row.test_index - 1)];
    const bool tool_flag = t.at("outcome").get<std::string>() != "CorrectNHST";
    const bool human_flag = row.human_outcome == "Inconsistency" ||
                            row.human_outcome == "DecisionError";
    ++(tool_flag ? (human_flag ? tp : fp) : (human_flag ? fn : tn));

    const auto a_it = alpha_of.find(row.paper_id);
    const double alpha = a_it == alpha_of.end() ? 0.05 : a_it->second;
    const std::string op = t.at("p_operator").get<std::string>();
    const double pv = t.at("p_value").get<double>();
    bool claim_sig;
    if (op == "=")
      claim_sig = pv < alpha;
    else if (op == "<" || op == "<=")
      claim_sig = pv <= alpha;
    else
      claim_sig = false;
    const double mid = 0.5 * (t.at("recomputed_p_lo").get<double>() +
                              t.at("recomputed_p_hi").get<double>());
    const bool recomputed_sig = mid < alpha;
    ++(claim_sig ? (recomputed_sig ? stp : sfp) : (recomputed_sig ? sfn : stn));

    if (row.author_error_code) ++rep.author_code_counts[*row.author_error_code];
    if (row.tool_error_code) ++rep.tool_code_counts[*row.tool_error_code];
    ++rep.n_matched;
  }
  if (!orphans.empty()) {
    std::string msg = "ground truth rows with no matching test:";
    for (const auto& o : orphans) msg += " " + o;
    throw std::runtime_error(msg);
  }
  rep.error_detection = confusion_metrics(tp, fp, fn, tn);
  rep.significance = confusion_metrics(stp, sfp, sfn, stn);
  return rep;
}

}  // namespace statfidelity::corpus
