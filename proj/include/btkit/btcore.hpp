#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "btkit/error.hpp"
#include "btkit/features.hpp"
#include "btkit/linalg.hpp"

#include "json.hpp"

namespace btkit {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class EmptyDesign : public Error {
public:
  EmptyDesign() : Error("design has no rows") {}
};

class SingularInformation : public Error {
public:
  SingularInformation()
      : Error("information matrix is singular (collinear columns?)") {}
};

class NonFinite : public Error {
public:
  NonFinite() : Error("non-finite value during optimization") {}
};

class ColumnMismatch : public Error {
public:
  using Error::Error;
};

class InvalidSE : public Error {
public:
  InvalidSE() : Error("fit has no valid standard errors") {}
};

// ---------------------------------------------------------------------------
// Design matrix
// ---------------------------------------------------------------------------

/// Row-major n x p matrix with a binary target and optional row weights.
/// Weights carry the binomial win counts when rows aggregate repeated
/// pairings; they default to 1.
struct DesignMatrix {
  std::vector<std::string> columns;
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> x;  // n * p
  std::vector<double> y;  // 0/1
  std::vector<double> w;  // >= 0

  void validate() const {
    if (n == 0) throw EmptyDesign();
    if (p < 1 || columns.size() != p) {
      throw DimensionMismatch("column names and p disagree");
    }
    if (x.size() != n * p || y.size() != n || w.size() != n) {
      throw DimensionMismatch("matrix dimensions disagree");
    }
    std::set<std::string> unique(columns.begin(), columns.end());
    if (unique.size() != p) throw DimensionMismatch("duplicate column names");
    for (double v : x) {
      if (!std::isfinite(v)) throw DimensionMismatch("non-finite design entry");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] != 0.0 && y[i] != 1.0) throw DimensionMismatch("target not 0/1");
      if (!(w[i] >= 0.0)) throw DimensionMismatch("negative weight");
    }
  }
};

/// Slices a features::Design into a fit-ready matrix over the given columns
/// (all columns when the subset is empty).
inline DesignMatrix to_matrix(const Design& design,
                              const std::vector<std::string>& columns = {}) {
  const std::vector<std::string>& cols =
      columns.empty() ? design.columns : columns;
  std::vector<std::size_t> idx;
  idx.reserve(cols.size());
  for (const auto& c : cols) idx.push_back(design.column_index(c));

  DesignMatrix m;
  m.columns = cols;
  m.n = design.rows.size();
  m.p = cols.size();
  m.x.reserve(m.n * m.p);
  m.y.reserve(m.n);
  m.w.assign(m.n, 1.0);
  for (const auto& row : design.rows) {
    for (std::size_t j : idx) m.x.push_back(row.x[j]);
    m.y.push_back(row.target);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Likelihood
// ---------------------------------------------------------------------------

inline double sigmoid(double t) {
  if (t >= 0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log sigma(t), safe against overflow for large |t|.
inline double log_sigmoid(double t) {
  return t >= 0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

inline double dot_row(const DesignMatrix& d, std::size_t i,
                      std::span<const double> beta) {
  double t = 0.0;
  const double* row = d.x.data() + i * d.p;
  for (std::size_t j = 0; j < d.p; ++j) t += row[j] * beta[j];
  return t;
}

/// Weighted Bernoulli log-likelihood under the logistic link.
inline double log_likelihood(std::span<const double> beta, const DesignMatrix& d) {
  if (beta.size() != d.p) throw DimensionMismatch("beta length != p");
  double ll = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) {
    const double t = dot_row(d, i, beta);
    ll += d.w[i] * (d.y[i] * log_sigmoid(t) + (1.0 - d.y[i]) * log_sigmoid(-t));
  }
  return ll;
}

/// Gradient of log_likelihood: sum_i w_i (y_i - sigma(x_i beta)) x_i.
inline std::vector<double> score_vector(std::span<const double> beta,
                                        const DesignMatrix& d) {
  if (beta.size() != d.p) throw DimensionMismatch("beta length != p");
  std::vector<double> g(d.p, 0.0);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double resid = d.w[i] * (d.y[i] - sigmoid(dot_row(d, i, beta)));
    const double* row = d.x.data() + i * d.p;
    for (std::size_t j = 0; j < d.p; ++j) g[j] += resid * row[j];
  }
  return g;
}

// Observed information: sum_i w_i sigma_i (1 - sigma_i) x_i x_i^T.
inline std::vector<double> information_matrix(std::span<const double> beta,
                                              const DesignMatrix& d) {
  std::vector<double> h(d.p * d.p, 0.0);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double s = sigmoid(dot_row(d, i, beta));
    const double wi = d.w[i] * s * (1.0 - s);
    const double* row = d.x.data() + i * d.p;
    for (std::size_t j = 0; j < d.p; ++j) {
      for (std::size_t k = 0; k <= j; ++k) {
        h[j * d.p + k] += wi * row[j] * row[k];
      }
    }
  }
  for (std::size_t j = 0; j < d.p; ++j) {
    for (std::size_t k = j + 1; k < d.p; ++k) h[j * d.p + k] = h[k * d.p + j];
  }
  return h;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct FitOptions {
  int max_iter = 50;
  double tol = 1e-10;               // on |delta log-likelihood|
  double separation_threshold = 15.0;  // |beta| beyond this flags separation
};

struct FitResult {
  std::vector<std::string> columns;
  std::vector<double> beta;
  std::vector<double> se;
  double log_lik = 0.0;
  double aic = 0.0;
  int iterations = 0;
  bool converged = false;
  bool separation = false;
  std::optional<std::string> reference_team;

  double coefficient(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ColumnMismatch("no coefficient named " + name);
    return beta[static_cast<std::size_t>(it - columns.begin())];
  }
};

/// Maximum-likelihood logistic fit via Newton iterations with step halving.
/// No intercept is added: the differenced Bradley-Terry parameterization is
/// antisymmetric by construction and an intercept would not be identifiable
/// from the order effect.
inline FitResult fit_logistic(const DesignMatrix& d, const FitOptions& opt = {}) {
  d.validate();

  FitResult fit;
  fit.columns = d.columns;
  fit.beta.assign(d.p, 0.0);

  double ll = log_likelihood(fit.beta, d);
  const auto separated = [&] {
    for (double b : fit.beta) {
      if (std::fabs(b) > opt.separation_threshold) return true;
    }
    return false;
  };

  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    fit.iterations = iter;
    std::vector<double> g = score_vector(fit.beta, d);
    std::vector<double> h = information_matrix(fit.beta, d);
    if (!cholesky_factor(h, d.p)) {
      if (separated()) break;
      throw SingularInformation();
    }
    std::vector<double> step = cholesky_solve(h, d.p, g);

    double scale = 1.0;
    std::vector<double> candidate(d.p);
    double ll_new = ll;
    bool improved = false;
    for (int halving = 0; halving <= 30; ++halving) {
      for (std::size_t j = 0; j < d.p; ++j) {
        candidate[j] = fit.beta[j] + scale * step[j];
      }
      ll_new = log_likelihood(candidate, d);
      if (!std::isfinite(ll_new)) throw NonFinite();
      if (ll_new >= ll) {
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;  // stuck at the current point

    for (double b : candidate) {
      if (!std::isfinite(b)) throw NonFinite();
    }
    const double delta = ll_new - ll;
    fit.beta = std::move(candidate);
    ll = ll_new;
    if (std::fabs(delta) < opt.tol) {
      fit.converged = true;
      break;
    }
  }

  fit.separation = separated();
  fit.log_lik = ll;
  fit.aic = 2.0 * static_cast<double>(d.p) - 2.0 * ll;

  std::vector<double> h = information_matrix(fit.beta, d);
  if (cholesky_factor(h, d.p)) {
    std::vector<double> inv = cholesky_inverse(h, d.p);
    fit.se.resize(d.p);
    for (std::size_t j = 0; j < d.p; ++j) {
      fit.se[j] = std::sqrt(std::max(inv[j * d.p + j], 0.0));
    }
  } else if (fit.separation) {
    fit.se.assign(d.p, std::numeric_limits<double>::quiet_NaN());
  } else {
    throw SingularInformation();
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Bradley-Terry variants
// ---------------------------------------------------------------------------

inline std::vector<std::string> teams_in(const PairCounts& pc) {
  std::set<std::string> teams;
  for (const auto& [pair, wins] : pc.counts) {
    teams.insert(pair.first);
    teams.insert(pair.second);
  }
  return {teams.begin(), teams.end()};
}

/// Connected components of the comparison graph (teams joined by played
/// pairings), each sorted alphabetically.
inline std::vector<std::vector<std::string>> comparison_components(const PairCounts& pc) {
  const auto teams = teams_in(pc);
  std::map<std::string, std::size_t> id;
  for (std::size_t i = 0; i < teams.size(); ++i) id[teams[i]] = i;
  std::vector<std::size_t> parent(teams.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& [pair, wins] : pc.counts) {
    parent[find(id[pair.first])] = find(id[pair.second]);
  }
  std::map<std::size_t, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < teams.size(); ++i) {
    groups[find(i)].push_back(teams[i]);
  }
  std::vector<std::vector<std::string>> components;
  for (auto& [root, members] : groups) components.push_back(std::move(members));
  return components;
}

inline bool comparison_graph_connected(const PairCounts& pc) {
  return comparison_components(pc).size() <= 1;
}

/// Builds the differenced pair design: one column per team not pinned at
/// strength zero (+1 for the home side, -1 for the away side), rows weighted
/// by win counts, plus a constant AT_HOME column when the order effect is
/// requested. `pinned` must contain the reference team; a disconnected
/// comparison graph needs one pinned team per component to stay identifiable.
inline DesignMatrix pair_design(const PairCounts& pc,
                                const std::set<std::string>& pinned,
                                bool home_effect) {
  const auto teams = teams_in(pc);
  DesignMatrix m;
  for (const auto& t : teams) {
    if (!pinned.count(t)) m.columns.push_back(t);
  }
  if (home_effect) m.columns.push_back("AT_HOME");
  m.p = m.columns.size();
  if (m.p == 0) throw EmptyDesign();

  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < m.columns.size(); ++j) col[m.columns[j]] = j;

  auto push_row = [&](const std::string& home, const std::string& away,
                      double target, double weight) {
    std::vector<double> row(m.p, 0.0);
    if (!pinned.count(home)) row[col[home]] = 1.0;
    if (!pinned.count(away)) row[col[away]] = -1.0;
    if (home_effect) row[col["AT_HOME"]] = 1.0;
    m.x.insert(m.x.end(), row.begin(), row.end());
    m.y.push_back(target);
    m.w.push_back(weight);
    ++m.n;
  };

  for (const auto& [pair, wins] : pc.counts) {
    if (wins.first > 0) push_row(pair.first, pair.second, 1.0, wins.first);
    if (wins.second > 0) push_row(pair.first, pair.second, 0.0, wins.second);
  }
  if (m.n == 0) throw EmptyDesign();
  return m;
}

inline DesignMatrix pair_design(const PairCounts& pc, const std::string& reference,
                                bool home_effect) {
  const auto teams = teams_in(pc);
  if (std::find(teams.begin(), teams.end(), reference) == teams.end()) {
    throw UnknownTeam(reference);
  }
  return pair_design(pc, std::set<std::string>{reference}, home_effect);
}

namespace detail {

inline FitResult fit_pair_model(const PairCounts& pc, const std::string& reference,
                                bool home_effect, const FitOptions& opt) {
  const auto teams = teams_in(pc);
  if (std::find(teams.begin(), teams.end(), reference) == teams.end()) {
    throw UnknownTeam(reference);
  }
  // One strength is pinned per component; extra components (teams never
  // comparable to the reference's group) are a degenerate configuration that
  // gets reported through the separation flag.
  const auto components = comparison_components(pc);
  std::set<std::string> pinned{reference};
  for (const auto& component : components) {
    if (std::find(component.begin(), component.end(), reference) == component.end()) {
      pinned.insert(component.front());
    }
  }
  FitResult fit = fit_logistic(pair_design(pc, pinned, home_effect), opt);
  fit.reference_team = reference;
  if (components.size() > 1) fit.separation = true;
  return fit;
}

}  // namespace detail

/// Standard Bradley-Terry: log-strengths relative to the reference team.
inline FitResult fit_standard(const PairCounts& pc, const std::string& reference,
                              const FitOptions& opt = {}) {
  return detail::fit_pair_model(pc, reference, false, opt);
}

/// Contest-specific Bradley-Terry: strengths plus the AT_HOME order effect.
inline FitResult fit_contest(const PairCounts& pc, const std::string& reference,
                             const FitOptions& opt = {}) {
  return detail::fit_pair_model(pc, reference, true, opt);
}

/// Team-specific time-variant model: plain logistic fit on the differential
/// design, no team dummies, no intercept.
inline FitResult fit_covariate(const DesignMatrix& d, const FitOptions& opt = {}) {
  return fit_logistic(d, opt);
}

// ---------------------------------------------------------------------------
// Prediction and inference
// ---------------------------------------------------------------------------

inline double predict_prob(const FitResult& fit, std::span<const double> x_row) {
  if (x_row.size() != fit.beta.size()) {
    throw ColumnMismatch("row length does not match fitted columns");
  }
  double t = 0.0;
  for (std::size_t j = 0; j < x_row.size(); ++j) t += x_row[j] * fit.beta[j];
  return sigmoid(t);
}

/// Strength of a team under a pair fit: 0 for the reference, the fitted
/// coefficient otherwise. Teams absent from the fit read as average (0).
inline double team_strength(const FitResult& fit, const std::string& team) {
  if (fit.reference_team && *fit.reference_team == team) return 0.0;
  auto it = std::find(fit.columns.begin(), fit.columns.end(), team);
  if (it == fit.columns.end()) return 0.0;
  return fit.beta[static_cast<std::size_t>(it - fit.columns.begin())];
}

/// Home-win probability under a strength fit (lambda difference plus the
/// order effect when the fit carries one).
inline double predict_game_prob(const FitResult& fit, const std::string& home,
                                const std::string& away) {
  double t = team_strength(fit, home) - team_strength(fit, away);
  auto it = std::find(fit.columns.begin(), fit.columns.end(), "AT_HOME");
  if (it != fit.columns.end()) {
    t += fit.beta[static_cast<std::size_t>(it - fit.columns.begin())];
  }
  return sigmoid(t);
}

struct WaldStat {
  double z = 0.0;
  double p = 1.0;
};

// Two-sided tail probability of |z| under the standard normal.
inline double normal_two_sided_p(double z) {
  return std::erfc(std::fabs(z) / 1.4142135623730951);
}

inline WaldStat wald_stat(double beta, double se) {
  WaldStat s;
  s.z = beta / se;
  s.p = normal_two_sided_p(s.z);
  return s;
}

/// Per-coefficient Wald z and two-sided p-value. Requires a converged,
/// non-separated fit with usable standard errors.
inline std::vector<WaldStat> wald_inference(const FitResult& fit) {
  if (!fit.converged || fit.separation || fit.se.size() != fit.beta.size()) {
    throw InvalidSE();
  }
  for (double s : fit.se) {
    if (!std::isfinite(s) || s <= 0.0) throw InvalidSE();
  }
  std::vector<WaldStat> out(fit.beta.size());
  for (std::size_t j = 0; j < fit.beta.size(); ++j) {
    out[j] = wald_stat(fit.beta[j], fit.se[j]);
  }
  return out;
}

inline double aic(const FitResult& fit) { return fit.aic; }

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json fit_to_json(const FitResult& fit) {
  nlohmann::json j;
  j["columns"] = fit.columns;
  j["beta"] = fit.beta;
  std::vector<nlohmann::json> se, z, p;
  for (std::size_t i = 0; i < fit.beta.size(); ++i) {
    const double s = i < fit.se.size() ? fit.se[i] : 0.0;
    if (std::isfinite(s) && s > 0.0) {
      WaldStat ws = wald_stat(fit.beta[i], s);
      se.push_back(s);
      z.push_back(ws.z);
      p.push_back(ws.p);
    } else {
      se.push_back(nullptr);
      z.push_back(nullptr);
      p.push_back(nullptr);
    }
  }
  j["se"] = se;
  j["z"] = z;
  j["p"] = p;
  j["loglik"] = fit.log_lik;
  j["aic"] = fit.aic;
  j["converged"] = fit.converged;
  j["separation"] = fit.separation;
  if (fit.reference_team) {
    j["reference_team"] = *fit.reference_team;
  } else {
    j["reference_team"] = nullptr;
  }
  return j;
}

}  // namespace btkit
