#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "btkit/csv.hpp"
#include "btkit/evaluate.hpp"
#include "btkit/experiments.hpp"

#include "json.hpp"

namespace btkit {

inline std::string join(std::span<const std::string> parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::vector<std::string> report_csv_header() {
  return {"experiment",    "window",        "test_season",   "encoding",
          "model",         "reference_team", "train_aic",     "train_correct",
          "train_total",   "train_accuracy", "test_correct",  "test_total",
          "test_accuracy", "finals_correct", "finals_total",  "retained_features",
          "significant_features"};
}

inline std::vector<std::string> report_csv_row(const ExperimentReport& r) {
  auto pct = [](const AccuracyCounts& c) {
    return c.total == 0 ? std::string() : format_fixed(100.0 * c.rate(), 2);
  };
  return {
      r.experiment,
      r.window_label(),
      r.test_season ? std::to_string(*r.test_season) : "",
      r.encoding,
      r.model,
      r.reference_team.value_or(""),
      std::isfinite(r.train_aic) ? format_fixed(r.train_aic, 2) : "",
      r.train_accuracy.total ? std::to_string(r.train_accuracy.correct) : "",
      r.train_accuracy.total ? std::to_string(r.train_accuracy.total) : "",
      pct(r.train_accuracy),
      r.test_accuracy.total ? std::to_string(r.test_accuracy.correct) : "",
      r.test_accuracy.total ? std::to_string(r.test_accuracy.total) : "",
      pct(r.test_accuracy),
      std::to_string(r.finals_correct),
      std::to_string(r.finals_total),
      join(r.retained, ";"),
      join(r.significant, ";"),
  };
}

inline void write_report_csv(std::span<const ExperimentReport> reports,
                             const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(reports.size());
  for (const auto& r : reports) rows.push_back(report_csv_row(r));
  write_csv_file(path, report_csv_header(), rows);
}

inline nlohmann::json report_to_json(const ExperimentReport& r) {
  nlohmann::json j;
  j["experiment"] = r.experiment;
  j["train_seasons"] = r.train_seasons;
  if (r.test_season) j["test_season"] = *r.test_season;
  else j["test_season"] = nullptr;
  j["encoding"] = r.encoding;
  j["model"] = r.model;
  if (r.reference_team) j["reference_team"] = *r.reference_team;
  else j["reference_team"] = nullptr;
  if (std::isfinite(r.train_aic)) j["train_aic"] = r.train_aic;
  else j["train_aic"] = nullptr;
  j["train"] = {{"correct", r.train_accuracy.correct},
                {"total", r.train_accuracy.total},
                {"accuracy", r.train_accuracy.rate()}};
  j["test"] = {{"correct", r.test_accuracy.correct},
               {"total", r.test_accuracy.total},
               {"accuracy", r.test_accuracy.rate()}};
  j["finals"] = {{"correct", r.finals_correct}, {"total", r.finals_total}};
  j["retained_features"] = r.retained;
  j["significant_features"] = r.significant;
  return j;
}

inline void write_report_json(std::span<const ExperimentReport> reports,
                              const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) j.push_back(report_to_json(r));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CsvError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

inline void write_predictions_csv(std::span<const PredictionOutcome> outcomes,
                                  const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    rows.push_back({o.game_id, o.strategy, format_fixed(o.p_home, 6),
                    o.predicted_home_win ? "1" : "0",
                    o.actual_home_win ? "1" : "0", o.is_final ? "1" : "0"});
  }
  write_csv_file(path,
                 {"game_id", "strategy", "p_home", "predicted_home_win",
                  "actual_home_win", "is_final"},
                 rows);
}

inline nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["n_games"] = m.n_games;
  j["accuracy"] = m.accuracy;
  j["finals"] = {{"correct", m.finals_correct}, {"total", m.finals_total}};
  j["per_team_accuracy"] = m.per_team_accuracy;
  return j;
}

}  // namespace btkit
