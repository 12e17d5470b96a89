#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "btkit/data.hpp"

namespace btkit {

// ---------------------------------------------------------------------------
// Binomial pair counts (standard / contest-specific models)
// ---------------------------------------------------------------------------

/// Win frequencies per ordered (home team, away team) pair.
struct PairCounts {
  // (home, away) -> (home wins, away wins)
  std::map<std::pair<std::string, std::string>, std::pair<int, int>> counts;

  int total_games() const {
    int n = 0;
    for (const auto& [pair, wins] : counts) n += wins.first + wins.second;
    return n;
  }
};

inline PairCounts build_binomial_counts(std::span<const GameRecord> games) {
  PairCounts pc;
  for (const auto& g : games) {
    auto& entry = pc.counts[{g.home_team, g.away_team}];
    if (g.home_win()) {
      ++entry.first;
    } else {
      ++entry.second;
    }
  }
  return pc;
}

// ---------------------------------------------------------------------------
// Rolling aggregations (pre-game by construction: entry k sums games < k)
// ---------------------------------------------------------------------------

inline std::vector<double> exclusive_season_cumulative(std::span<const double> values) {
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    out[k] = sum;
    sum += values[k];
  }
  return out;
}

inline std::vector<double> rolling_last4_sum(std::span<const double> values) {
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    double sum = 0.0;
    for (std::size_t j = (k >= 4 ? k - 4 : 0); j < k; ++j) sum += values[j];
    out[k] = sum;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-team pre-game features
// ---------------------------------------------------------------------------

struct TeamRoundFeatures {
  std::string game_id;
  std::string team;
  int at_home = 0;
  int homeground = 0;
  int interstate = 0;
  int lg_won = 0;
  int l4g_wins = 0;
  int consecutive_wins = 0;
  int consecutive_losses = 0;
  int wins_cumulative = 0;
  int points_for = 0;
  int points_against = 0;
  double percentage = 100.0;
  int ladder_position = 0;
  int ladderly_position = 0;
  std::array<double, kNumPis> pi_season_csum{};
  std::array<double, kNumPis> pi_last4_sum{};
};

/// Points-for to points-against ratio, scaled to 100. With no conceded points
/// the raw ratio is undefined: an empty history is neutral (100), a shutout
/// history falls back to the (+1)-smoothed ratio.
inline double percentage_ratio(int points_for, int points_against) {
  if (points_against > 0) return 100.0 * points_for / points_against;
  if (points_for == 0) return 100.0;
  return 100.0 * (points_for + 1) / (points_against + 1);
}

/// Precomputes per-(season, team) game sequences over the decided games of a
/// Dataset so that every feature query is O(1)-ish. The builder keeps a
/// reference to the Dataset and must not outlive it.
class FeatureBuilder {
public:
  explicit FeatureBuilder(const Dataset& dataset) : data_(dataset) {
    for (const auto& g : data_.games) {
      if (g.draw()) continue;
      add_game(g, g.home_team);
      add_game(g, g.away_team);
    }
    for (auto& [key, seq] : sequences_) {
      finalize(seq);
    }
    for (const auto& l : data_.ladder) {
      ladder_pos_[{l.season, l.round, l.team}] = l.position;
      ladder_rounds_[l.season].insert(l.round);
    }
    for (const auto& p : data_.prev_ladder) {
      prev_pos_[{p.season, p.team}] = p.final_position;
      prev_seasons_.insert(p.season);
    }
  }

  FeatureBuilder(const FeatureBuilder&) = delete;
  FeatureBuilder& operator=(const FeatureBuilder&) = delete;

  /// (AT_HOME, HOMEGROUND, INTERSTATE) for one side of a game.
  std::array<int, 3> difficulty(const GameRecord& game, const std::string& team) const {
    auto venue_state = data_.geo.venue_state.find(game.venue);
    if (venue_state == data_.geo.venue_state.end()) throw UnknownVenue(game.venue);
    auto team_state = data_.geo.team_state.find(team);
    if (team_state == data_.geo.team_state.end()) throw UnknownTeam(team);

    const int at_home = team == game.home_team ? 1 : 0;
    int homeground = 0;
    auto hv = data_.geo.team_home_venues.find(team);
    if (hv != data_.geo.team_home_venues.end() && hv->second.count(game.venue)) {
      homeground = 1;
    }
    const int interstate = venue_state->second != team_state->second ? 1 : 0;
    return {at_home, homeground, interstate};
  }

  /// Ladder position after the round preceding the game. Round 1 falls back
  /// to the previous season's final position, or 9 (the median rank) when no
  /// previous season is on file, making round-1 differentials neutral.
  int ladder_position(const GameRecord& game, const std::string& team) const {
    if (game.round > 1) {
      auto rounds = ladder_rounds_.find(game.season);
      if (rounds != ladder_rounds_.end()) {
        // Latest tabled round before this game; the ladder freezes once the
        // finals start, so exact (round - 1) entries may not exist.
        auto it = rounds->second.lower_bound(game.round);
        if (it != rounds->second.begin()) {
          const int round = *std::prev(it);
          auto pos = ladder_pos_.find({game.season, round, team});
          if (pos != ladder_pos_.end()) return pos->second;
        }
      }
      throw MissingLadder(game.season, game.round - 1);
    }
    auto pos = prev_pos_.find({game.season - 1, team});
    if (pos != prev_pos_.end()) return pos->second;
    return 9;
  }

  /// Final ladder position of the previous season. Seasons with no previous
  /// table at all (the first season of an export) read as the neutral 9.
  int ladderly_position(const GameRecord& game, const std::string& team) const {
    if (!prev_seasons_.count(game.season - 1)) return 9;
    auto pos = prev_pos_.find({game.season - 1, team});
    if (pos == prev_pos_.end()) throw MissingPrevLadder(game.season, team);
    return pos->second;
  }

  TeamRoundFeatures features_for(const GameRecord& game, const std::string& team) const {
    auto at = position_.find({game.game_id, team});
    if (at == position_.end()) {
      throw Error("game " + game.game_id + " is not in " + team + "'s schedule");
    }
    const Sequence& seq = sequences_.at({game.season, team});
    const std::size_t k = at->second;

    TeamRoundFeatures f;
    f.game_id = game.game_id;
    f.team = team;
    auto [at_home, homeground, interstate] = difficulty(game, team);
    f.at_home = at_home;
    f.homeground = homeground;
    f.interstate = interstate;
    f.lg_won = k > 0 && seq.won[k - 1] ? 1 : 0;
    const std::size_t lo = k >= 4 ? k - 4 : 0;
    f.l4g_wins = seq.wins_prefix[k] - seq.wins_prefix[lo];
    f.consecutive_wins = seq.streak_wins[k];
    f.consecutive_losses = seq.streak_losses[k];
    f.wins_cumulative = seq.wins_prefix[k];
    f.points_for = seq.pf_prefix[k];
    f.points_against = seq.pa_prefix[k];
    f.percentage = percentage_ratio(f.points_for, f.points_against);
    f.ladder_position = ladder_position(game, team);
    f.ladderly_position = ladderly_position(game, team);
    for (std::size_t c = 0; c < kNumPis; ++c) {
      f.pi_season_csum[c] = seq.pi_prefix[k * kNumPis + c];
      f.pi_last4_sum[c] =
          seq.pi_prefix[k * kNumPis + c] - seq.pi_prefix[lo * kNumPis + c];
    }
    return f;
  }

private:
  struct Sequence {
    std::vector<const GameRecord*> games;
    std::vector<bool> won;
    std::vector<int> pf, pa;
    std::vector<const std::vector<double>*> pis;
    // prefix arrays have length games.size() + 1
    std::vector<int> wins_prefix, pf_prefix, pa_prefix;
    std::vector<int> streak_wins, streak_losses;  // entering game k
    std::vector<double> pi_prefix;                // (m + 1) x kNumPis
  };

  void add_game(const GameRecord& g, const std::string& team) {
    Sequence& seq = sequences_[{g.season, team}];
    const bool home = team == g.home_team;
    seq.games.push_back(&g);
    seq.won.push_back(home ? g.home_win() : !g.home_win());
    seq.pf.push_back(home ? g.home_points : g.away_points);
    seq.pa.push_back(home ? g.away_points : g.home_points);
    seq.pis.push_back(find_pi(g.game_id, team));
    position_[{g.game_id, team}] = seq.games.size() - 1;
  }

  const std::vector<double>* find_pi(const std::string& game_id,
                                     const std::string& team) const {
    PiRecord probe;
    probe.game_id = game_id;
    probe.team = team;
    auto it = std::lower_bound(
        data_.pis.begin(), data_.pis.end(), probe,
        [](const PiRecord& a, const PiRecord& b) {
          return std::tie(a.game_id, a.team) < std::tie(b.game_id, b.team);
        });
    if (it == data_.pis.end() || it->game_id != game_id || it->team != team) {
      throw MissingPiRecord(game_id, team);
    }
    return &it->values;
  }

  static void finalize(Sequence& seq) {
    const std::size_t m = seq.games.size();
    seq.wins_prefix.assign(m + 1, 0);
    seq.pf_prefix.assign(m + 1, 0);
    seq.pa_prefix.assign(m + 1, 0);
    seq.streak_wins.assign(m + 1, 0);
    seq.streak_losses.assign(m + 1, 0);
    seq.pi_prefix.assign((m + 1) * kNumPis, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      seq.wins_prefix[k + 1] = seq.wins_prefix[k] + (seq.won[k] ? 1 : 0);
      seq.pf_prefix[k + 1] = seq.pf_prefix[k] + seq.pf[k];
      seq.pa_prefix[k + 1] = seq.pa_prefix[k] + seq.pa[k];
      seq.streak_wins[k + 1] = seq.won[k] ? seq.streak_wins[k] + 1 : 0;
      seq.streak_losses[k + 1] = seq.won[k] ? 0 : seq.streak_losses[k] + 1;
      for (std::size_t c = 0; c < kNumPis; ++c) {
        seq.pi_prefix[(k + 1) * kNumPis + c] =
            seq.pi_prefix[k * kNumPis + c] + (*seq.pis[k])[c];
      }
    }
  }

  const Dataset& data_;
  std::map<std::pair<int, std::string>, Sequence> sequences_;
  std::map<std::pair<std::string, std::string>, std::size_t> position_;
  std::map<std::tuple<int, int, std::string>, int> ladder_pos_;
  std::map<int, std::set<int>> ladder_rounds_;
  std::map<std::pair<int, std::string>, int> prev_pos_;
  std::set<int> prev_seasons_;
};

// Convenience wrappers matching the one-off query surface. Each builds the
// full index, so prefer a shared FeatureBuilder in loops.
inline std::array<int, 3> difficulty_features(const GeoConfig& geo,
                                              const GameRecord& game,
                                              const std::string& team) {
  Dataset d;
  d.geo = geo;
  d.games = {game};
  return FeatureBuilder(d).difficulty(game, team);
}

inline TeamRoundFeatures form_features(const Dataset& dataset,
                                       const std::string& team,
                                       const GameRecord& game) {
  return FeatureBuilder(dataset).features_for(game, team);
}

inline std::pair<int, int> ladder_features(const Dataset& dataset,
                                           const std::string& team,
                                           const GameRecord& game) {
  FeatureBuilder b(dataset);
  return {b.ladder_position(game, team), b.ladderly_position(game, team)};
}

// ---------------------------------------------------------------------------
// Design matrix assembly (covariate models)
// ---------------------------------------------------------------------------

enum class Encoding { kLast4, kSeason };

inline std::string encoding_name(Encoding e) {
  return e == Encoding::kLast4 ? "last4" : "season";
}

inline Encoding parse_encoding(const std::string& s) {
  if (s == "last4") return Encoding::kLast4;
  if (s == "season") return Encoding::kSeason;
  throw Error("unknown encoding: " + s + " (want last4|season)");
}

/// One game as a home-perspective differential row.
struct DesignRow {
  std::string game_id;
  int season = 0;
  int round = 0;
  bool is_final = false;
  int target = 0;  // 1 if the home team won
  std::vector<double> x;
  friend bool operator==(const DesignRow&, const DesignRow&) = default;
};

struct Design {
  std::vector<std::string> columns;
  std::vector<DesignRow> rows;

  std::size_t column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error("no such design column: " + name);
    return static_cast<std::size_t>(it - columns.begin());
  }
  friend bool operator==(const Design&, const Design&) = default;
};

/// Canonical column set for an encoding: match difficulty block, form block,
/// then the PI differentials. The last-4 encoding carries L4G_WINS and the
/// *_L4_CSUM_DIFF indicators; the season encoding carries WINS_CUMULATIVE_DIFF
/// and the *_CSUM_DIFF indicators.
inline std::vector<std::string> candidate_columns(Encoding encoding,
                                                  bool include_interactions = false) {
  std::vector<std::string> cols = {"AT_HOME", "HOMEGROUND", "INTERSTATE"};
  if (encoding == Encoding::kLast4) {
    cols.insert(cols.end(),
                {"CONSECUTIVE_LOSSES", "CONSECUTIVE_WINS", "L4G_WINS",
                 "LADDER_POSITION_DIFF", "LADDERLY_POSITION_DIFF", "LG_WON",
                 "PERCENTAGE_DIFF", "POINTSAGAINST_DIFF", "POINTSFOR_DIFF"});
  } else {
    cols.insert(cols.end(),
                {"CONSECUTIVE_LOSSES", "CONSECUTIVE_WINS",
                 "LADDER_POSITION_DIFF", "LADDERLY_POSITION_DIFF", "LG_WON",
                 "PERCENTAGE_DIFF", "POINTSAGAINST_DIFF", "POINTSFOR_DIFF",
                 "WINS_CUMULATIVE_DIFF"});
  }
  for (const auto& pi : kPiSchema) {
    std::string name(pi.name);
    cols.push_back(encoding == Encoding::kLast4 ? name + "_L4_CSUM_DIFF"
                                                : name + "_CSUM_DIFF");
  }
  if (include_interactions) {
    cols.push_back("AT_HOME_x_HOMEGROUND");
    cols.push_back("AT_HOME_x_INTERSTATE");
  }
  return cols;
}

/// Builds one differential row per decided game of the selected seasons.
///
/// Differentials are home minus away except the two ladder ranks, which are
/// away minus home so that being higher on the ladder (a numerically lower
/// position) reads as a positive value. AT_HOME is the constant home-side
/// indicator; the optional interaction columns are the home team's own
/// HOMEGROUND / INTERSTATE flags, which is what AT_HOME x flag reduces to in
/// a differenced row.
inline Design assemble_design(const Dataset& dataset, Encoding encoding,
                              const std::vector<int>& seasons,
                              bool include_interactions = false) {
  Design design;
  design.columns = candidate_columns(encoding, include_interactions);
  FeatureBuilder builder(dataset);
  std::set<int> wanted(seasons.begin(), seasons.end());

  for (const auto& g : dataset.games) {
    if (g.draw() || !wanted.count(g.season)) continue;
    TeamRoundFeatures home = builder.features_for(g, g.home_team);
    TeamRoundFeatures away = builder.features_for(g, g.away_team);

    DesignRow row;
    row.game_id = g.game_id;
    row.season = g.season;
    row.round = g.round;
    row.is_final = g.is_final;
    row.target = g.home_win() ? 1 : 0;
    row.x.reserve(design.columns.size());

    row.x.push_back(1.0);  // AT_HOME
    row.x.push_back(home.homeground - away.homeground);
    row.x.push_back(home.interstate - away.interstate);

    row.x.push_back(home.consecutive_losses - away.consecutive_losses);
    row.x.push_back(home.consecutive_wins - away.consecutive_wins);
    if (encoding == Encoding::kLast4) {
      row.x.push_back(home.l4g_wins - away.l4g_wins);
    }
    row.x.push_back(away.ladder_position - home.ladder_position);
    row.x.push_back(away.ladderly_position - home.ladderly_position);
    row.x.push_back(home.lg_won - away.lg_won);
    row.x.push_back(home.percentage - away.percentage);
    row.x.push_back(home.points_against - away.points_against);
    row.x.push_back(home.points_for - away.points_for);
    if (encoding == Encoding::kSeason) {
      row.x.push_back(home.wins_cumulative - away.wins_cumulative);
    }

    for (std::size_t c = 0; c < kNumPis; ++c) {
      row.x.push_back(encoding == Encoding::kLast4
                          ? home.pi_last4_sum[c] - away.pi_last4_sum[c]
                          : home.pi_season_csum[c] - away.pi_season_csum[c]);
    }
    if (include_interactions) {
      row.x.push_back(static_cast<double>(home.homeground));
      row.x.push_back(static_cast<double>(home.interstate));
    }

    for (double v : row.x) {
      if (!std::isfinite(v)) {
        throw Error("non-finite design entry for game " + g.game_id);
      }
    }
    design.rows.push_back(std::move(row));
  }
  return design;
}

inline void write_design_csv(const Design& design, const std::filesystem::path& path) {
  std::vector<std::string> header = {"game_id", "season", "round", "is_final",
                                     "target"};
  header.insert(header.end(), design.columns.begin(), design.columns.end());
  std::vector<std::vector<std::string>> rows;
  rows.reserve(design.rows.size());
  for (const auto& r : design.rows) {
    std::vector<std::string> row = {r.game_id, std::to_string(r.season),
                                    std::to_string(r.round),
                                    r.is_final ? "1" : "0",
                                    std::to_string(r.target)};
    for (double v : r.x) row.push_back(format_double(v));
    rows.push_back(std::move(row));
  }
  write_csv_file(path, header, rows);
}

}  // namespace btkit
