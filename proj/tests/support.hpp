#pragma once

// Shared fixtures: hand-assembled mini leagues for unit tests.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "btkit/btkit.hpp"

namespace testsupport {

// Builds small datasets game by game. Venues default to the home team's own
// stadium, PI records default to all-zero and are filled in for every game at
// build() time, so tests only specify what they care about.
class DatasetBuilder {
public:
  explicit DatasetBuilder(std::vector<std::string> teams) : teams_(std::move(teams)) {
    static const std::vector<std::string> states = {"VIC", "WA", "NSW", "QLD"};
    for (std::size_t i = 0; i < teams_.size(); ++i) {
      const std::string venue = teams_[i] + " Stadium";
      dataset_.geo.venue_state[venue] = states[i % states.size()];
      dataset_.geo.team_state[teams_[i]] = states[i % states.size()];
      dataset_.geo.team_home_venues[teams_[i]] = {venue};
    }
  }

  DatasetBuilder& game(int season, int round, const std::string& home,
                       const std::string& away, int home_points, int away_points,
                       bool is_final = false, std::string venue = "") {
    btkit::GameRecord g;
    g.game_id = "g" + std::to_string(++counter_);
    g.season = season;
    g.round = round;
    char date[32];
    std::snprintf(date, sizeof(date), "%04d-%02d-%02d", season % 10000,
                  3 + (round - 1) % 9, 1 + (round - 1) % 28);
    g.date = date;
    g.home_team = home;
    g.away_team = away;
    g.home_points = home_points;
    g.away_points = away_points;
    g.venue = venue.empty() ? home + " Stadium" : venue;
    g.is_final = is_final;
    last_game_id_ = g.game_id;
    dataset_.games.push_back(std::move(g));
    return *this;
  }

  const std::string& last_game_id() const { return last_game_id_; }

  // Sets one indicator for (game, team); other PIs stay zero.
  DatasetBuilder& pi(const std::string& game_id, const std::string& team,
                     const std::string& pi_name, double value) {
    pi_overrides_[{game_id, team}][pi_name] = value;
    return *this;
  }

  DatasetBuilder& ladder(int season, int round, const std::string& team, int position) {
    dataset_.ladder.push_back({season, round, team, position});
    return *this;
  }

  DatasetBuilder& prev(int season, const std::string& team, int position) {
    dataset_.prev_ladder.push_back({season, team, position});
    return *this;
  }

  btkit::Dataset build() {
    btkit::Dataset d = dataset_;
    for (const auto& g : d.games) {
      for (const auto& team : {g.home_team, g.away_team}) {
        btkit::PiRecord rec;
        rec.game_id = g.game_id;
        rec.team = team;
        rec.values.assign(btkit::kNumPis, 0.0);
        auto it = pi_overrides_.find({g.game_id, team});
        if (it != pi_overrides_.end()) {
          for (const auto& [name, value] : it->second) {
            bool found = false;
            for (std::size_t k = 0; k < btkit::kNumPis; ++k) {
              if (btkit::kPiSchema[k].name == name) {
                rec.values[k] = value;
                found = true;
              }
            }
            if (!found) throw btkit::Error("unknown pi name in test: " + name);
          }
        }
        d.pis.push_back(std::move(rec));
      }
    }
    std::sort(d.games.begin(), d.games.end(),
              [](const btkit::GameRecord& a, const btkit::GameRecord& b) {
                return std::tie(a.season, a.round, a.date, a.game_id) <
                       std::tie(b.season, b.round, b.date, b.game_id);
              });
    std::sort(d.pis.begin(), d.pis.end(),
              [](const btkit::PiRecord& a, const btkit::PiRecord& b) {
                return std::tie(a.game_id, a.team) < std::tie(b.game_id, b.team);
              });
    return d;
  }

private:
  std::vector<std::string> teams_;
  btkit::Dataset dataset_;
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> pi_overrides_;
  int counter_ = 0;
  std::string last_game_id_;
};

inline btkit::PairCounts make_counts(
    const std::vector<std::tuple<std::string, std::string, int, int>>& entries) {
  btkit::PairCounts pc;
  for (const auto& [home, away, hw, aw] : entries) {
    pc.counts[{home, away}] = {hw, aw};
  }
  return pc;
}

// Deletes every game ordered strictly after `pivot` (and that game's pis and
// same-or-later ladder rows), for temporal-hygiene checks.
inline btkit::Dataset truncate_after(const btkit::Dataset& full,
                                     const btkit::GameRecord& pivot) {
  auto order = [](const btkit::GameRecord& g) {
    return std::tie(g.season, g.round, g.date, g.game_id);
  };
  btkit::Dataset out;
  out.geo = full.geo;
  out.prev_ladder = full.prev_ladder;
  std::set<std::string> kept;
  for (const auto& g : full.games) {
    if (order(g) <= order(pivot)) {
      out.games.push_back(g);
      kept.insert(g.game_id);
    }
  }
  for (const auto& pi : full.pis) {
    if (kept.count(pi.game_id)) out.pis.push_back(pi);
  }
  for (const auto& l : full.ladder) {
    if (l.season < pivot.season ||
        (l.season == pivot.season && l.round < pivot.round)) {
      out.ladder.push_back(l);
    }
  }
  return out;
}

}  // namespace testsupport
