#include "statfidelity/mlr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "statfidelity/special_functions.hpp"

namespace statfidelity::mlr {

namespace {

// Canonical ordering for the paper's categories; anything else sorts
// lexicographically after them.
int category_rank(const std::string& s) {
  if (s == "CorrectNHST") return 0;
  if (s == "Inconsistency") return 1;
  if (s == "DecisionError") return 2;
  if (s == "Incomplete") return 3;
  return 4;
}

struct Workspace {
  const std::vector<std::vector<double>>& X;
  const std::vector<int>& y;
  const std::vector<double>& w;
  std::size_t P;
  std::size_t Km1;

  double log_likelihood(const Eigen::VectorXd& theta) const {
    double ll = 0.0;
    std::vector<double> eta(Km1);
    for (std::size_t i = 0; i < X.size(); ++i) {
      double mx = 0.0;
      for (std::size_t k = 0; k < Km1; ++k) {
        double e = 0.0;
        for (std::size_t j = 0; j < P; ++j) e += theta(k * P + j) * X[i][j];
        eta[k] = e;
        mx = std::max(mx, e);
      }
      double denom = std::exp(-mx);
      for (std::size_t k = 0; k < Km1; ++k) denom += std::exp(eta[k] - mx);
      const double lse = mx + std::log(denom);
      const double target = y[i] == 0 ? 0.0 : eta[static_cast<std::size_t>(y[i]) - 1];
      ll += w[i] * (target - lse);
    }
    return ll;
  }

  void score_and_information(const Eigen::VectorXd& theta, Eigen::VectorXd* g,
                             Eigen::MatrixXd* H) const {
    const std::size_t M = Km1 * P;
    g->setZero(M);
    H->setZero(M, M);
    std::vector<double> eta(Km1), pi(Km1);
    for (std::size_t i = 0; i < X.size(); ++i) {
      double mx = 0.0;
      for (std::size_t k = 0; k < Km1; ++k) {
        double e = 0.0;
        for (std::size_t j = 0; j < P; ++j) e += theta(k * P + j) * X[i][j];
        eta[k] = e;
        mx = std::max(mx, e);
      }
      double denom = std::exp(-mx);
      for (std::size_t k = 0; k < Km1; ++k) denom += std::exp(eta[k] - mx);
      for (std::size_t k = 0; k < Km1; ++k)
        pi[k] = std::exp(eta[k] - mx) / denom;
      for (std::size_t k = 0; k < Km1; ++k) {
        const double resid =
            (static_cast<std::size_t>(y[i]) == k + 1 ? 1.0 : 0.0) - pi[k];
        for (std::size_t j = 0; j < P; ++j)
          (*g)(k * P + j) += w[i] * resid * X[i][j];
      }
      for (std::size_t k = 0; k < Km1; ++k)
        for (std::size_t l = 0; l <= k; ++l) {
          const double wt =
              w[i] * pi[k] * ((k == l ? 1.0 : 0.0) - pi[l]);
          for (std::size_t j = 0; j < P; ++j)
            for (std::size_t m = 0; m < P; ++m) {
              (*H)(k * P + j, l * P + m) += wt * X[i][j] * X[i][m];
            }
        }
    }
    // mirror the lower block triangle
    for (std::size_t k = 0; k < Km1; ++k)
      for (std::size_t l = k + 1; l < Km1; ++l)
        for (std::size_t j = 0; j < P; ++j)
          for (std::size_t m = 0; m < P; ++m)
            (*H)(k * P + j, l * P + m) = (*H)(l * P + m, k * P + j);
  }
};

void check_rank(const std::vector<std::vector<double>>& X,
                const std::vector<double>& w,
                const std::vector<std::string>& term_names) {
  const std::size_t P = term_names.size();
  Eigen::MatrixXd M(X.size(), P);
  for (std::size_t i = 0; i < X.size(); ++i)
    for (std::size_t j = 0; j < P; ++j)
      M(i, j) = std::sqrt(std::max(w[i], 0.0)) * X[i][j];
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  const auto rank = qr.rank();
  if (static_cast<std::size_t>(rank) < P) {
    const auto perm = qr.colsPermutation().indices();
    std::ostringstream msg;
    msg << "design matrix is rank deficient; dependent columns:";
    for (Eigen::Index k = rank; k < perm.size(); ++k)
      msg << " " << term_names[static_cast<std::size_t>(perm(k))];
    throw std::invalid_argument(msg.str());
  }
}

std::vector<double> encode_point(const MLRModel& model, const GridPoint& at) {
  std::vector<double> x;
  x.push_back(1.0);
  if (model.spec.include_year) x.push_back(at.year - model.year_center);
  if (model.spec.include_venue) {
    std::string v = at.venue;
    if (model.spec.collapse_venues && v != model.spec.collapse_keep)
      v = "OTHER";
    for (const auto& level : model.venue_dummy_levels)
      x.push_back(v == level ? 1.0 : 0.0);
  }
  return x;
}

}  // namespace

MLRModel fit_design(const std::vector<std::vector<double>>& X,
                    const std::vector<int>& y, const std::vector<double>& w,
                    const std::vector<std::string>& term_names,
                    const std::vector<std::string>& outcome_levels) {
  if (X.empty() || X.size() != y.size() || X.size() != w.size())
    throw std::invalid_argument("design, outcomes and weights must align");
  if (outcome_levels.size() < 2)
    throw std::invalid_argument("need at least 2 outcome levels");
  const std::size_t P = term_names.size();
  for (const auto& row : X)
    if (row.size() != P) throw std::invalid_argument("ragged design matrix");
  check_rank(X, w, term_names);

  const std::size_t Km1 = outcome_levels.size() - 1;
  const std::size_t M = Km1 * P;
  Workspace ws{X, y, w, P, Km1};

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(M);
  double ll = ws.log_likelihood(theta);
  Eigen::VectorXd g(M);
  Eigen::MatrixXd H(M, M);
  std::vector<std::string> warnings;

  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    ws.score_and_information(theta, &g, &H);
    if (g.cwiseAbs().maxCoeff() < 1e-8) {
      converged = true;
      break;
    }
    Eigen::VectorXd step = H.ldlt().solve(g);
    if (!step.allFinite()) step = g;  // fall straight back to ascent
    double scale = 1.0;
    Eigen::VectorXd trial;
    double new_ll = -HUGE_VAL;
    int halvings = 0;
    for (; halvings <= 5; ++halvings) {
      trial = theta + scale * step;
      new_ll = ws.log_likelihood(trial);
      if (new_ll >= ll - 1e-12) break;
      scale *= 0.5;
    }
    if (halvings > 5) {
      // damped Newton failed; take a backtracked gradient-ascent step
      scale = 1.0 / (1.0 + g.cwiseAbs().maxCoeff());
      for (int t = 0; t < 60; ++t) {
        trial = theta + scale * g;
        new_ll = ws.log_likelihood(trial);
        if (new_ll > ll) break;
        scale *= 0.5;
      }
      if (new_ll <= ll) {
        warnings.push_back("optimizer stalled before reaching tolerance");
        converged = true;
        break;
      }
    }
    const double rel = std::fabs(new_ll - ll) / (1.0 + std::fabs(new_ll));
    theta = trial;
    ll = new_ll;
    if (rel < 1e-12) {
      ws.score_and_information(theta, &g, &H);
      if (g.cwiseAbs().maxCoeff() < 1e-8) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    ws.score_and_information(theta, &g, &H);
    if (g.cwiseAbs().maxCoeff() >= 1e-8)
      warnings.push_back("maximum iterations reached before convergence");
  }

  MLRModel model;
  model.outcome_levels = outcome_levels;
  model.reference_level = outcome_levels.front();
  model.term_names = term_names;
  model.n_contrasts = Km1;
  model.coefficients.assign(theta.data(), theta.data() + M);
  Eigen::MatrixXd cov = H.ldlt().solve(Eigen::MatrixXd::Identity(M, M));
  cov = 0.5 * (cov + cov.transpose());
  model.covariance.assign(M * M, 0.0);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      model.covariance[i * M + j] = cov(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j));
  model.log_likelihood = ll;
  double wsum = 0.0;
  for (double wi : w) wsum += wi;
  model.n = std::llround(wsum);
  for (double b : model.coefficients)
    if (std::fabs(b) > 15.0) model.separation_warning = true;
  if (model.separation_warning)
    warnings.push_back(
        "possible separation: some coefficient exceeds +-15 (extreme odds ratios)");
  model.warnings = warnings;
  return model;
}

MLRModel fit_multinomial(const std::vector<Observation>& records,
                         const PredictorSpec& spec,
                         const std::string& reference) {
  if (records.empty()) throw std::invalid_argument("no observations");

  std::set<std::string> level_set;
  std::set<std::string> venue_set;
  double year_sum = 0.0, wsum = 0.0;
  double year_min = 0.0, year_max = 0.0;
  bool first = true;
  for (const auto& r : records) {
    level_set.insert(r.outcome);
    std::string v = r.venue;
    if (spec.collapse_venues && v != spec.collapse_keep) v = "OTHER";
    venue_set.insert(v);
    year_sum += r.weight * r.year;
    wsum += r.weight;
    if (first) {
      year_min = year_max = r.year;
      first = false;
    } else {
      year_min = std::min(year_min, r.year);
      year_max = std::max(year_max, r.year);
    }
  }
  if (level_set.size() < 2)
    throw std::invalid_argument("need at least 2 outcome levels present");

  std::string ref = reference;
  if (ref.empty())
    ref = level_set.count("Incomplete") ? "Incomplete" : *level_set.begin();
  if (!level_set.count(ref))
    throw std::invalid_argument("reference level '" + ref + "' not in data");
  std::vector<std::string> levels(level_set.begin(), level_set.end());
  std::sort(levels.begin(), levels.end(),
            [](const std::string& a, const std::string& b) {
              const int ra = category_rank(a), rb = category_rank(b);
              return ra != rb ? ra < rb : a < b;
            });
  levels.erase(std::remove(levels.begin(), levels.end(), ref), levels.end());
  levels.insert(levels.begin(), ref);

  std::string venue_ref;
  std::vector<std::string> venue_dummies;
  if (spec.include_venue) {
    if (venue_set.size() < 2)
      throw std::invalid_argument(
          "venue factor needs at least 2 levels; drop it from the spec");
    venue_ref = spec.venue_reference.value_or(
        venue_set.count("SOUPS") ? "SOUPS" : *venue_set.begin());
    if (!venue_set.count(venue_ref))
      throw std::invalid_argument("venue reference '" + venue_ref +
                                  "' not in data");
    for (const auto& v : venue_set)
      if (v != venue_ref) venue_dummies.push_back(v);
  }

  const double center = spec.center_year ? year_sum / wsum : 0.0;
  std::vector<std::string> term_names = {"(Intercept)"};
  if (spec.include_year) term_names.push_back("Year");
  for (const auto& v : venue_dummies) term_names.push_back("Venue" + v);

  // Aggregate identical cells so count data fits fast.
  std::map<std::tuple<int, double, std::string>, double> cells;
  for (const auto& r : records) {
    std::string v = r.venue;
    if (spec.collapse_venues && v != spec.collapse_keep) v = "OTHER";
    const int yi = static_cast<int>(
        std::find(levels.begin(), levels.end(), r.outcome) - levels.begin());
    cells[{yi, r.year, v}] += r.weight;
  }
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::vector<double> w;
  for (const auto& [key, weight] : cells) {
    const auto& [yi, year, venue] = key;
    std::vector<double> row = {1.0};
    if (spec.include_year) row.push_back(year - center);
    for (const auto& v : venue_dummies) row.push_back(venue == v ? 1.0 : 0.0);
    X.push_back(std::move(row));
    y.push_back(yi);
    w.push_back(weight);
  }

  MLRModel model = fit_design(X, y, w, term_names, levels);
  model.spec = spec;
  model.spec.venue_reference = spec.include_venue
                                   ? std::optional<std::string>(venue_ref)
                                   : std::nullopt;
  model.venue_dummy_levels = venue_dummies;
  model.year_center = center;
  model.year_min = year_min;
  model.year_max = year_max;
  return model;
}

FitComparison lr_test(const MLRModel& full, const MLRModel& nested) {
  for (const auto& t : nested.term_names)
    if (std::find(full.term_names.begin(), full.term_names.end(), t) ==
        full.term_names.end())
      throw std::invalid_argument("models are not nested: term '" + t +
                                  "' missing from the full model");
  if (full.n != nested.n)
    throw std::invalid_argument("models were fitted on different data");
  if (full.outcome_levels != nested.outcome_levels)
    throw std::invalid_argument("models have different outcome levels");
  FitComparison out;
  out.df = static_cast<int>(
      (full.term_names.size() - nested.term_names.size()) * full.n_contrasts);
  out.chi_sq = std::max(0.0, 2.0 * (full.log_likelihood - nested.log_likelihood));
  out.p = out.df == 0
              ? 1.0
              : kernel::reg_inc_gamma_upper(out.df / 2.0, out.chi_sq / 2.0);
  out.mcfadden_r2 = nested.log_likelihood == 0.0
                        ? 0.0
                        : 1.0 - full.log_likelihood / nested.log_likelihood;
  return out;
}

std::vector<CoefficientRow> coefficient_table(const MLRModel& model,
                                              const std::string& outcome_level) {
  const auto it = std::find(model.outcome_levels.begin(),
                            model.outcome_levels.end(), outcome_level);
  if (it == model.outcome_levels.end() || outcome_level == model.reference_level)
    throw std::invalid_argument("unknown or reference outcome level: " +
                                outcome_level);
  const std::size_t k = static_cast<std::size_t>(
      it - model.outcome_levels.begin() - 1);
  const std::size_t P = model.term_names.size();
  const std::size_t M = model.n_contrasts * P;
  std::vector<CoefficientRow> rows;
  for (std::size_t j = 0; j < P; ++j) {
    CoefficientRow r;
    r.term = model.term_names[j];
    r.b = model.coef(k, j);
    const std::size_t idx = k * P + j;
    r.se = std::sqrt(std::max(0.0, model.covariance[idx * M + idx]));
    r.z = r.se > 0.0 ? r.b / r.se : 0.0;
    r.p = std::erfc(std::fabs(r.z) / std::sqrt(2.0));
    r.odds_ratio = std::exp(r.b);
    r.or_ci_lo = std::exp(r.b - 1.96 * r.se);
    r.or_ci_hi = std::exp(r.b + 1.96 * r.se);
    rows.push_back(r);
  }
  return rows;
}

std::map<std::string, double> predict(const MLRModel& model,
                                      const GridPoint& at) {
  const std::vector<double> x = encode_point(model, at);
  const std::size_t P = model.term_names.size();
  std::vector<double> eta(model.n_contrasts, 0.0);
  double mx = 0.0;
  for (std::size_t k = 0; k < model.n_contrasts; ++k) {
    for (std::size_t j = 0; j < P; ++j) eta[k] += model.coef(k, j) * x[j];
    mx = std::max(mx, eta[k]);
  }
  double denom = std::exp(-mx);
  for (double e : eta) denom += std::exp(e - mx);
  std::map<std::string, double> out;
  out[model.outcome_levels[0]] = std::exp(-mx) / denom;
  for (std::size_t k = 0; k < model.n_contrasts; ++k)
    out[model.outcome_levels[k + 1]] = std::exp(eta[k] - mx) / denom;
  return out;
}

EffectDisplay effect_display(const MLRModel& model,
                             const std::vector<GridPoint>& grid,
                             double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("confidence must be in (0, 1)");
  const double zq = kernel::normal_quantile(1.0 - (1.0 - confidence) / 2.0);
  const std::size_t P = model.term_names.size();
  const std::size_t M = model.n_contrasts * P;
  EffectDisplay out;
  out.grid = grid;
  bool warned = false;
  for (const auto& level : model.outcome_levels)
    out.curves[level] = {};
  for (const auto& pt : grid) {
    if (model.spec.include_year &&
        (pt.year < model.year_min || pt.year > model.year_max) && !warned) {
      out.warnings.push_back("grid extends outside the observed predictor range");
      warned = true;
    }
    const std::vector<double> x = encode_point(model, pt);
    std::vector<double> eta(model.n_contrasts, 0.0);
    double mx = 0.0;
    for (std::size_t k = 0; k < model.n_contrasts; ++k) {
      for (std::size_t j = 0; j < P; ++j) eta[k] += model.coef(k, j) * x[j];
      mx = std::max(mx, eta[k]);
    }
    double denom = std::exp(-mx);
    for (double e : eta) denom += std::exp(e - mx);
    std::vector<double> pi(model.outcome_levels.size());
    pi[0] = std::exp(-mx) / denom;
    for (std::size_t k = 0; k < model.n_contrasts; ++k)
      pi[k + 1] = std::exp(eta[k] - mx) / denom;

    for (std::size_t m = 0; m < model.outcome_levels.size(); ++m) {
      // gradient of pi_m wrt theta: pi_m (delta_{m,l} - pi_l) x_j
      std::vector<double> grad(M, 0.0);
      for (std::size_t l = 0; l < model.n_contrasts; ++l) {
        const double d = (m == l + 1 ? 1.0 : 0.0) - pi[l + 1];
        for (std::size_t j = 0; j < P; ++j)
          grad[l * P + j] = pi[m] * d * x[j];
      }
      double var = 0.0;
      for (std::size_t a = 0; a < M; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b < M; ++b)
          acc += model.covariance[a * M + b] * grad[b];
        var += grad[a] * acc;
      }
      EffectBand band;
      band.probability = pi[m];
      if (pi[m] <= 0.0 || pi[m] >= 1.0 || var <= 0.0) {
        band.lo = band.hi = pi[m];
      } else {
        const double logit = std::log(pi[m] / (1.0 - pi[m]));
        const double se_logit = std::sqrt(var) / (pi[m] * (1.0 - pi[m]));
        const auto inv = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        band.lo = inv(logit - zq * se_logit);
        band.hi = inv(logit + zq * se_logit);
      }
      out.curves[model.outcome_levels[m]].push_back(band);
    }
  }
  return out;
}

}  // namespace statfidelity::mlr
