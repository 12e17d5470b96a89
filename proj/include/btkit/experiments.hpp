#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "btkit/btcore.hpp"
#include "btkit/data.hpp"
#include "btkit/evaluate.hpp"
#include "btkit/features.hpp"

namespace btkit {

class EmptyFinalModel : public Error {
public:
  EmptyFinalModel() : Error("backward elimination removed every feature") {}
};

class MissingVote : public Error {
public:
  explicit MissingVote(const std::string& game_id)
      : Error("game " + game_id + " lacks one or more model votes") {}
};

inline constexpr double kSignificanceLevel = 0.05;

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

struct WindowSpec {
  std::vector<int> train_seasons;  // contiguous, ascending
  std::optional<int> test_season;  // last train season + 1 when present
  Encoding encoding = Encoding::kLast4;  // covariate experiments only
  bool include_interactions = false;     // AT_HOME x difficulty columns

  void validate() const {
    if (train_seasons.empty()) throw Error("window has no train seasons");
    for (std::size_t i = 1; i < train_seasons.size(); ++i) {
      if (train_seasons[i] != train_seasons[i - 1] + 1) {
        throw Error("train seasons must be contiguous");
      }
    }
    if (test_season && *test_season != train_seasons.back() + 1) {
      throw Error("test season must follow the last train season");
    }
  }

  std::string label() const {
    std::string s = std::to_string(train_seasons.front());
    if (train_seasons.size() > 1) s += "-" + std::to_string(train_seasons.back());
    return s;
  }
};

inline std::vector<GameRecord> window_games(const Dataset& dataset,
                                            std::span<const int> seasons) {
  std::set<int> wanted(seasons.begin(), seasons.end());
  std::vector<GameRecord> out;
  for (const auto& g : dataset.games) {
    if (!g.draw() && wanted.count(g.season)) out.push_back(g);
  }
  return out;
}

/// The team whose win fraction over the window sits closest to one half,
/// ties broken alphabetically.
inline std::string choose_reference(std::span<const GameRecord> games) {
  if (games.empty()) throw Error("cannot choose a reference from no games");
  std::map<std::string, std::pair<int, int>> record;  // team -> (wins, played)
  for (const auto& g : games) {
    auto& home = record[g.home_team];
    auto& away = record[g.away_team];
    ++home.second;
    ++away.second;
    if (g.home_win()) {
      ++home.first;
    } else {
      ++away.first;
    }
  }
  std::string best;
  double best_gap = 2.0;
  for (const auto& [team, wl] : record) {  // map iterates alphabetically
    const double frac = static_cast<double>(wl.first) / wl.second;
    const double gap = std::fabs(frac - 0.5);
    if (gap < best_gap) {
      best_gap = gap;
      best = team;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Report row
// ---------------------------------------------------------------------------

struct ExperimentReport {
  std::string experiment;  // e1|e2|e3|e4
  std::vector<int> train_seasons;
  std::optional<int> test_season;
  std::string encoding;  // empty for outcome experiments
  std::string model;     // standard|contest|ts_tv|addition|substitution|incremental|majority
  std::optional<std::string> reference_team;
  double train_aic = std::numeric_limits<double>::quiet_NaN();
  AccuracyCounts train_accuracy;
  AccuracyCounts test_accuracy;
  int finals_correct = 0;
  int finals_total = 0;
  std::vector<std::string> retained;
  std::vector<std::string> significant;
  std::vector<PredictionOutcome> test_outcomes;
  std::optional<FitResult> fit;  // final fitted model, when there is one

  std::string window_label() const {
    std::string s = std::to_string(train_seasons.front());
    if (train_seasons.size() > 1) s += "-" + std::to_string(train_seasons.back());
    return s;
  }
};

// ---------------------------------------------------------------------------
// Experiments 1 and 2: binomial-count models
// ---------------------------------------------------------------------------

inline std::vector<PredictionOutcome> predict_games_with_strengths(
    const FitResult& fit, std::span<const GameRecord> games,
    const std::string& strategy) {
  std::vector<PredictionOutcome> out;
  out.reserve(games.size());
  for (const auto& g : games) {
    PredictionOutcome o;
    o.game_id = g.game_id;
    o.p_home = predict_game_prob(fit, g.home_team, g.away_team);
    o.predicted_home_win = o.p_home > 0.5;
    o.actual_home_win = g.home_win();
    o.is_final = g.is_final;
    o.strategy = strategy;
    out.push_back(std::move(o));
  }
  return out;
}

/// Fits the standard (Experiment 1) or contest-specific (Experiment 2) model
/// on the window and scores it on the training games and, when present, the
/// full following season.
inline ExperimentReport run_outcome_experiment(const Dataset& dataset,
                                               const WindowSpec& window,
                                               bool with_home_effect) {
  window.validate();
  ExperimentReport report;
  report.experiment = with_home_effect ? "e2" : "e1";
  report.train_seasons = window.train_seasons;
  report.test_season = window.test_season;
  report.model = with_home_effect ? "contest" : "standard";

  const auto train = window_games(dataset, window.train_seasons);
  if (train.empty()) throw EmptyDesign();
  const std::string reference = choose_reference(train);
  report.reference_team = reference;

  const PairCounts pc = build_binomial_counts(train);
  FitResult fit = with_home_effect ? fit_contest(pc, reference)
                                   : fit_standard(pc, reference);
  report.train_aic = fit.aic;

  const auto train_pred = predict_games_with_strengths(fit, train, report.model);
  report.train_accuracy = accuracy_counts(train_pred);

  if (window.test_season) {
    const std::vector<int> test_seasons{*window.test_season};
    const auto test = window_games(dataset, test_seasons);
    report.test_outcomes = predict_games_with_strengths(fit, test, report.model);
    report.test_accuracy = accuracy_counts(report.test_outcomes);
    auto [fc, ft] = finals_accuracy(report.test_outcomes);
    report.finals_correct = fc;
    report.finals_total = ft;
  }
  report.fit = std::move(fit);
  return report;
}

// ---------------------------------------------------------------------------
// Feature selection (Experiment 3 machinery)
// ---------------------------------------------------------------------------

struct ScreenOutcome {
  std::vector<std::string> significant;
  std::vector<std::string> failed;  // fits that did not converge cleanly
};

/// One single-feature model per candidate; keeps the features whose Wald test
/// clears the 5% level on a clean (converged, non-separated) fit.
inline ScreenOutcome screen_features(const Design& design,
                                     std::span<const std::string> candidates) {
  ScreenOutcome out;
  for (const auto& name : candidates) {
    try {
      const FitResult fit = fit_covariate(to_matrix(design, {name}));
      if (!fit.converged || fit.separation) {
        out.failed.push_back(name);
        continue;
      }
      const auto stats = wald_inference(fit);
      if (stats[0].p < kSignificanceLevel) out.significant.push_back(name);
    } catch (const Error&) {
      out.failed.push_back(name);
    }
  }
  return out;
}

namespace detail {

// Columns that duplicate another column of the matrix, exact value match.
inline std::vector<std::string> duplicate_columns(const DesignMatrix& m) {
  std::vector<std::string> dups;
  for (std::size_t a = 0; a < m.p; ++a) {
    for (std::size_t b = 0; b < m.p; ++b) {
      if (a == b) continue;
      bool equal = true;
      for (std::size_t i = 0; i < m.n && equal; ++i) {
        equal = m.x[i * m.p + a] == m.x[i * m.p + b];
      }
      if (equal) {
        dups.push_back(m.columns[a]);
        break;
      }
    }
  }
  return dups;
}

}  // namespace detail

/// Backward elimination: refit, drop the feature with the highest p-value
/// above the 5% threshold, repeat until everything left is significant.
/// Deterministic tie-break: among equal p-values the alphabetically last
/// column goes. A singular fit drops the alphabetically last duplicated
/// column (or the alphabetically last column when no exact duplicate exists).
inline FitResult backward_eliminate(const Design& design,
                                    std::vector<std::string> columns) {
  std::sort(columns.begin(), columns.end());
  while (!columns.empty()) {
    DesignMatrix m = to_matrix(design, columns);
    FitResult fit;
    try {
      fit = fit_covariate(m);
    } catch (const SingularInformation&) {
      auto dups = detail::duplicate_columns(m);
      const std::string drop = dups.empty() ? columns.back() : *std::max_element(dups.begin(), dups.end());
      columns.erase(std::remove(columns.begin(), columns.end(), drop), columns.end());
      continue;
    }

    // p-values; unusable standard errors sort above every real p-value so
    // such features are eliminated first.
    std::vector<double> pvals(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const double se = j < fit.se.size() ? fit.se[j] : 0.0;
      pvals[j] = (std::isfinite(se) && se > 0.0)
                     ? normal_two_sided_p(fit.beta[j] / se)
                     : 2.0;
    }
    std::size_t worst = 0;
    for (std::size_t j = 1; j < columns.size(); ++j) {
      if (pvals[j] > pvals[worst] ||
          (pvals[j] == pvals[worst] && columns[j] > columns[worst])) {
        worst = j;
      }
    }
    if (pvals[worst] > kSignificanceLevel) {
      columns.erase(columns.begin() + static_cast<std::ptrdiff_t>(worst));
      continue;
    }
    return fit;
  }
  throw EmptyFinalModel();
}

struct CovariateModel {
  std::optional<FitResult> fit;      // empty when no feature survived
  std::vector<std::string> retained;
  std::vector<std::string> significant;  // individually significant features
};

/// The full Experiment-3 training process: screen every candidate, then
/// backward-eliminate the significant set. An empty result is reported, not
/// patched; callers choose their own fallback.
inline CovariateModel select_and_fit(const Design& design) {
  CovariateModel model;
  ScreenOutcome screened = screen_features(design, design.columns);
  model.significant = screened.significant;
  if (screened.significant.empty()) return model;
  try {
    model.fit = backward_eliminate(design, screened.significant);
    model.retained = model.fit->columns;
  } catch (const EmptyFinalModel&) {
    // leave the model empty
  }
  return model;
}

/// Order-effect-only model, the fallback when selection retains nothing.
inline FitResult at_home_only_fit(const Design& design) {
  return fit_covariate(to_matrix(design, {"AT_HOME"}));
}

inline std::vector<PredictionOutcome> predict_design(const FitResult& fit,
                                                     const Design& design,
                                                     const std::string& strategy) {
  std::vector<std::size_t> idx;
  idx.reserve(fit.columns.size());
  for (const auto& c : fit.columns) idx.push_back(design.column_index(c));

  std::vector<PredictionOutcome> out;
  out.reserve(design.rows.size());
  std::vector<double> x(fit.columns.size());
  for (const auto& row : design.rows) {
    for (std::size_t j = 0; j < idx.size(); ++j) x[j] = row.x[idx[j]];
    PredictionOutcome o;
    o.game_id = row.game_id;
    o.p_home = predict_prob(fit, x);
    o.predicted_home_win = o.p_home > 0.5;
    o.actual_home_win = row.target == 1;
    o.is_final = row.is_final;
    o.strategy = strategy;
    out.push_back(std::move(o));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment 3: full-season prediction with selected features
// ---------------------------------------------------------------------------

inline ExperimentReport run_covariate_experiment(const Dataset& dataset,
                                                 const WindowSpec& window) {
  window.validate();
  ExperimentReport report;
  report.experiment = "e3";
  report.train_seasons = window.train_seasons;
  report.test_season = window.test_season;
  report.encoding = encoding_name(window.encoding);
  report.model = "ts_tv";

  const Design train_design =
      assemble_design(dataset, window.encoding, window.train_seasons,
                      window.include_interactions);
  if (train_design.rows.empty()) throw EmptyDesign();

  CovariateModel model = select_and_fit(train_design);
  FitResult fit = model.fit ? *model.fit : at_home_only_fit(train_design);
  report.retained = fit.columns;
  report.significant = model.significant;
  report.train_aic = fit.aic;

  const auto train_pred = predict_design(fit, train_design, report.model);
  report.train_accuracy = accuracy_counts(train_pred);

  if (window.test_season) {
    const Design test_design =
        assemble_design(dataset, window.encoding, {*window.test_season},
                        window.include_interactions);
    report.test_outcomes = predict_design(fit, test_design, report.model);
    report.test_accuracy = accuracy_counts(report.test_outcomes);
    auto [fc, ft] = finals_accuracy(report.test_outcomes);
    report.finals_correct = fc;
    report.finals_total = ft;
  }
  report.fit = std::move(fit);
  return report;
}

// ---------------------------------------------------------------------------
// Experiment 4: round-by-round retraining strategies
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<int> rounds_of(const Design& design) {
  std::set<int> rounds;
  for (const auto& r : design.rows) rounds.insert(r.round);
  return {rounds.begin(), rounds.end()};
}

inline Design slice_rounds(const Design& design, int round) {
  Design out;
  out.columns = design.columns;
  for (const auto& r : design.rows) {
    if (r.round == round) out.rows.push_back(r);
  }
  return out;
}

// Selection plus fit on the current training rows, order-effect fallback.
inline FitResult training_model(const Design& training) {
  CovariateModel model = select_and_fit(training);
  if (model.fit) return *model.fit;
  return at_home_only_fit(training);
}

}  // namespace detail

/// Addition: predict each test round, then grow the training data by that
/// round and redo the whole selection pipeline.
inline std::vector<PredictionOutcome> strategy_addition(const Dataset& dataset,
                                                        int train_season,
                                                        int test_season,
                                                        Encoding encoding) {
  const Design train_full = assemble_design(dataset, encoding, {train_season});
  const Design test_full = assemble_design(dataset, encoding, {test_season});

  Design training = train_full;
  std::vector<PredictionOutcome> outcomes;
  for (int round : detail::rounds_of(test_full)) {
    const FitResult fit = detail::training_model(training);
    const Design round_design = detail::slice_rounds(test_full, round);
    auto preds = predict_design(fit, round_design, "addition");
    outcomes.insert(outcomes.end(), preds.begin(), preds.end());
    for (const auto& row : round_design.rows) training.rows.push_back(row);
  }
  return outcomes;
}

/// Substitution: like Addition, but the matching round of the train season is
/// discarded at each retrain; test rounds with no train counterpart are added
/// without removal.
inline std::vector<PredictionOutcome> strategy_substitution(const Dataset& dataset,
                                                            int train_season,
                                                            int test_season,
                                                            Encoding encoding) {
  const Design train_full = assemble_design(dataset, encoding, {train_season});
  const Design test_full = assemble_design(dataset, encoding, {test_season});

  Design training = train_full;
  std::vector<PredictionOutcome> outcomes;
  for (int round : detail::rounds_of(test_full)) {
    const FitResult fit = detail::training_model(training);
    const Design round_design = detail::slice_rounds(test_full, round);
    auto preds = predict_design(fit, round_design, "substitution");
    outcomes.insert(outcomes.end(), preds.begin(), preds.end());
    std::erase_if(training.rows, [&](const DesignRow& r) {
      return r.season == train_season && r.round == round;
    });
    for (const auto& row : round_design.rows) training.rows.push_back(row);
  }
  return outcomes;
}

/// Incremental: the previous-season model covers the first three rounds;
/// afterwards a model is re-selected on the accumulated test rounds alone and
/// used whenever it has significant features.
inline std::vector<PredictionOutcome> strategy_incremental(const Dataset& dataset,
                                                           int train_season,
                                                           int test_season,
                                                           Encoding encoding) {
  const Design train_full = assemble_design(dataset, encoding, {train_season});
  const Design test_full = assemble_design(dataset, encoding, {test_season});

  const FitResult base_fit = detail::training_model(train_full);

  Design seen;  // accumulated test-season rounds
  seen.columns = test_full.columns;
  std::vector<PredictionOutcome> outcomes;
  const auto rounds = detail::rounds_of(test_full);
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const Design round_design = detail::slice_rounds(test_full, rounds[i]);
    FitResult fit = base_fit;
    if (i >= 3) {
      CovariateModel model = select_and_fit(seen);
      if (model.fit) fit = *model.fit;
    }
    auto preds = predict_design(fit, round_design, "incremental");
    outcomes.insert(outcomes.end(), preds.begin(), preds.end());
    for (const auto& row : round_design.rows) seen.rows.push_back(row);
  }
  return outcomes;
}

/// Majority voting over exactly five per-game prediction sets: home wins when
/// at least three of the models say so. The result is keyed and ordered by
/// game_id, so the order of the vote lists does not matter.
inline std::vector<PredictionOutcome> majority_vote(
    std::span<const std::vector<PredictionOutcome>> votes) {
  if (votes.size() != 5) {
    throw Error("majority voting expects exactly 5 prediction sets, got " +
                std::to_string(votes.size()));
  }
  struct Tally {
    int home_votes = 0;
    int lists = 0;
    bool actual = false;
    bool is_final = false;
  };
  std::map<std::string, Tally> tally;
  for (const auto& list : votes) {
    std::set<std::string> seen;
    for (const auto& o : list) {
      if (!seen.insert(o.game_id).second) {
        throw Error("duplicate prediction for game " + o.game_id);
      }
      Tally& t = tally[o.game_id];
      ++t.lists;
      if (o.predicted_home_win) ++t.home_votes;
      t.actual = o.actual_home_win;
      t.is_final = o.is_final;
    }
  }
  std::vector<PredictionOutcome> out;
  out.reserve(tally.size());
  for (const auto& [game_id, t] : tally) {
    if (t.lists != 5) throw MissingVote(game_id);
    PredictionOutcome o;
    o.game_id = game_id;
    o.p_home = t.home_votes / 5.0;
    o.predicted_home_win = t.home_votes >= 3;
    o.actual_home_win = t.actual;
    o.is_final = t.is_final;
    o.strategy = "majority";
    out.push_back(std::move(o));
  }
  return out;
}

inline ExperimentReport make_strategy_report(const WindowSpec& window,
                                             const std::string& model,
                                             std::vector<PredictionOutcome> outcomes) {
  ExperimentReport report;
  report.experiment = "e4";
  report.train_seasons = window.train_seasons;
  report.test_season = window.test_season;
  report.encoding = encoding_name(window.encoding);
  report.model = model;
  report.test_accuracy = accuracy_counts(outcomes);
  auto [fc, ft] = finals_accuracy(outcomes);
  report.finals_correct = fc;
  report.finals_total = ft;
  report.test_outcomes = std::move(outcomes);
  return report;
}

/// Runs the full Experiment-4 family for one (train season, test season)
/// window: the Experiment-2 contest model and the Experiment-3 full-season
/// model as baselines, the three retraining strategies, and their majority
/// vote. Returns one report per model, majority last.
inline std::vector<ExperimentReport> run_strategy_experiment(const Dataset& dataset,
                                                             const WindowSpec& window) {
  window.validate();
  if (!window.test_season) {
    throw Error("experiment 4 needs a test season");
  }
  const int train = window.train_seasons.back();
  if (window.train_seasons.size() != 1) {
    throw Error("experiment 4 trains on a single season");
  }
  const int test = *window.test_season;

  std::vector<ExperimentReport> reports;

  ExperimentReport contest = run_outcome_experiment(
      dataset, WindowSpec{{train}, test, window.encoding}, true);
  contest.experiment = "e4";
  contest.encoding = encoding_name(window.encoding);

  ExperimentReport ts_tv = run_covariate_experiment(dataset, window);
  ts_tv.experiment = "e4";

  ExperimentReport addition = make_strategy_report(
      window, "addition", strategy_addition(dataset, train, test, window.encoding));
  ExperimentReport substitution = make_strategy_report(
      window, "substitution",
      strategy_substitution(dataset, train, test, window.encoding));
  ExperimentReport incremental = make_strategy_report(
      window, "incremental",
      strategy_incremental(dataset, train, test, window.encoding));

  const std::vector<std::vector<PredictionOutcome>> votes = {
      contest.test_outcomes, ts_tv.test_outcomes, addition.test_outcomes,
      substitution.test_outcomes, incremental.test_outcomes};
  ExperimentReport majority =
      make_strategy_report(window, "majority", majority_vote(votes));

  reports.push_back(std::move(contest));
  reports.push_back(std::move(ts_tv));
  reports.push_back(std::move(addition));
  reports.push_back(std::move(substitution));
  reports.push_back(std::move(incremental));
  reports.push_back(std::move(majority));
  return reports;
}

}  // namespace btkit
