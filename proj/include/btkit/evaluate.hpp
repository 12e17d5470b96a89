#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "btkit/data.hpp"

namespace btkit {

class EmptyPredictionSet : public Error {
public:
  EmptyPredictionSet() : Error("no predictions to evaluate") {}
};

struct PredictionOutcome {
  std::string game_id;
  double p_home = 0.5;
  bool predicted_home_win = false;  // strictly p_home > 0.5
  bool actual_home_win = false;
  bool is_final = false;
  std::string strategy;
  friend bool operator==(const PredictionOutcome&, const PredictionOutcome&) = default;
};

struct AccuracyCounts {
  int correct = 0;
  int total = 0;
  double rate() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

inline AccuracyCounts accuracy_counts(std::span<const PredictionOutcome> outcomes) {
  AccuracyCounts c;
  for (const auto& o : outcomes) {
    ++c.total;
    if (o.predicted_home_win == o.actual_home_win) ++c.correct;
  }
  return c;
}

inline double accuracy(std::span<const PredictionOutcome> outcomes) {
  if (outcomes.empty()) throw EmptyPredictionSet();
  return accuracy_counts(outcomes).rate();
}

/// (correct, total) over finals games only.
inline std::pair<int, int> finals_accuracy(std::span<const PredictionOutcome> outcomes) {
  AccuracyCounts c;
  for (const auto& o : outcomes) {
    if (!o.is_final) continue;
    ++c.total;
    if (o.predicted_home_win == o.actual_home_win) ++c.correct;
  }
  return {c.correct, c.total};
}

/// Accuracy keyed by home team, averaged over strategies: outcomes are
/// grouped by their strategy label and each team's value is the unweighted
/// mean of the per-strategy accuracies on that team's home games.
inline std::map<std::string, double> per_team_accuracy(
    std::span<const PredictionOutcome> outcomes, const Dataset& dataset) {
  std::map<std::string, std::string> home_of;
  for (const auto& g : dataset.games) home_of[g.game_id] = g.home_team;

  // (team, strategy) -> counts
  std::map<std::string, std::map<std::string, AccuracyCounts>> per;
  for (const auto& o : outcomes) {
    auto it = home_of.find(o.game_id);
    if (it == home_of.end()) continue;
    AccuracyCounts& c = per[it->second][o.strategy];
    ++c.total;
    if (o.predicted_home_win == o.actual_home_win) ++c.correct;
  }

  std::map<std::string, double> result;
  for (const auto& [team, by_strategy] : per) {
    double sum = 0.0;
    int k = 0;
    for (const auto& [strategy, counts] : by_strategy) {
      if (counts.total == 0) continue;
      sum += counts.rate();
      ++k;
    }
    if (k > 0) result[team] = sum / k;
  }
  return result;
}

struct MetricsReport {
  int n_games = 0;
  double accuracy = 0.0;
  int finals_correct = 0;
  int finals_total = 0;
  std::map<std::string, double> per_team_accuracy;
};

inline MetricsReport metrics_report(std::span<const PredictionOutcome> outcomes,
                                    const Dataset& dataset) {
  MetricsReport r;
  AccuracyCounts c = accuracy_counts(outcomes);
  r.n_games = c.total;
  r.accuracy = c.rate();
  auto [fc, ft] = finals_accuracy(outcomes);
  r.finals_correct = fc;
  r.finals_total = ft;
  r.per_team_accuracy = per_team_accuracy(outcomes, dataset);
  return r;
}

}  // namespace btkit
