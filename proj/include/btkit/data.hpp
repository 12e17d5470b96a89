#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "btkit/csv.hpp"
#include "btkit/error.hpp"

namespace btkit {

// ---------------------------------------------------------------------------
// Schema constants
// ---------------------------------------------------------------------------

/// The fixed 18-team roster. Team name columns are validated against this
/// list; aliases must be resolved upstream of the CSV contract.
inline const std::array<std::string, 18> kTeamRoster = {
    "Adelaide",        "Brisbane Lions", "Carlton",
    "Collingwood",     "Essendon",       "Fremantle",
    "Geelong",         "Gold Coast",     "Greater Western Sydney",
    "Hawthorn",        "Melbourne",      "North Melbourne",
    "Port Adelaide",   "Richmond",       "Saint Kilda",
    "Sydney",          "West Coast",     "Western Bulldogs",
};

struct PiDefinition {
  std::string_view name;  // canonical upper-case base name
  bool is_rate;           // rates are bounded to [0, 100]; counts are >= 0
};

/// Per-game team-total performance indicators. The order here is the storage
/// order of PiRecord::values and the column order of pis.csv (lower-cased).
inline const std::array<PiDefinition, 46> kPiSchema = {{
    {"BOUNCES", false},
    {"CLANGERS", false},
    {"CLEARANCES", false},
    {"CLEARANCES_CENTRE", false},
    {"CLEARANCES_STOPPAGE", false},
    {"CONTEST_DEFENSIVE_LOSS", false},
    {"CONTEST_DEFENSIVE_LOSS_RATE", true},
    {"CONTEST_OFFENSIVE_WIN", false},
    {"CONTEST_OFFENSIVE_WIN_RATE", true},
    {"DISPOSALS", false},
    {"DISPOSALS_EFFECTIVE", false},
    {"DISPOSALS_EFFICIENCY", true},
    {"FREES_AGAINST", false},
    {"GETS_GROUNDBALL", false},
    {"GETS_GROUNDBALL50", false},
    {"GOALS_ACCURACY", true},
    {"GOALS_SHOTS", false},
    {"HANDBALLS", false},
    {"HITOUTS_ADVANTAGE", false},
    {"HITOUTS_ADVANTAGE_RATE", true},
    {"HITOUTS_WIN_RATE", true},
    {"INSIDE50", false},
    {"INTERCEPTS", false},
    {"KICK2HANDBALL", false},
    {"KICKS", false},
    {"KICKS_EFFECTIVE", false},
    {"KICKS_EFFICIENCY", true},
    {"MARKS", false},
    {"MARKS_CONTESTED", false},
    {"MARKS_INSIDE50", false},
    {"MARKS_INTERCEPT", false},
    {"MARKS_ONLEAD", false},
    {"METRES_GAINED", false},
    {"ONE_PERCENTERS", false},
    {"POSSESSIONS", false},
    {"POSSESSIONS_CONTESTED", false},
    {"POSSESSIONS_CONTESTED_RATE", true},
    {"POSSESSIONS_UNCONTESTED", false},
    {"PRESSURE", false},
    {"PRESSURE_DEFENSEHALF", false},
    {"REBOUND_INSIDE50S", false},
    {"SCORE_LAUNCHES", false},
    {"SPOILS", false},
    {"TACKLES", false},
    {"TACKLES_INSIDE50", false},
    {"TURNOVERS", false},
}};

inline constexpr std::size_t kNumPis = 46;

inline std::string pi_csv_column(std::string_view base) {
  std::string col(base);
  std::transform(col.begin(), col.end(), col.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return col;
}

inline bool is_roster_team(const std::string& name) {
  return std::find(kTeamRoster.begin(), kTeamRoster.end(), name) !=
         kTeamRoster.end();
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct GameRecord {
  std::string game_id;
  int season = 0;
  int round = 0;  // finals rounds continue after the last home-and-away round
  std::string date;  // ISO-8601
  std::string home_team;
  std::string away_team;
  int home_points = 0;
  int away_points = 0;
  std::string venue;
  bool is_final = false;

  bool draw() const { return home_points == away_points; }
  bool home_win() const { return home_points > away_points; }
  friend bool operator==(const GameRecord&, const GameRecord&) = default;
};

struct PiRecord {
  std::string game_id;
  std::string team;
  std::vector<double> values;  // aligned with kPiSchema
  friend bool operator==(const PiRecord&, const PiRecord&) = default;
};

struct LadderRecord {
  int season = 0;
  int round = 0;
  std::string team;
  int position = 0;  // 1 = best
  friend bool operator==(const LadderRecord&, const LadderRecord&) = default;
};

struct PrevLadderRecord {
  int season = 0;  // the season this final position belongs to
  std::string team;
  int final_position = 0;
  friend bool operator==(const PrevLadderRecord&, const PrevLadderRecord&) = default;
};

struct GeoConfig {
  std::map<std::string, std::string> venue_state;
  std::map<std::string, std::string> team_state;
  std::map<std::string, std::set<std::string>> team_home_venues;
  friend bool operator==(const GeoConfig&, const GeoConfig&) = default;
};

struct Dataset {
  std::vector<GameRecord> games;  // sorted by (season, round, date, game_id)
  std::vector<PiRecord> pis;      // sorted by (game_id, team)
  std::vector<LadderRecord> ladder;
  std::vector<PrevLadderRecord> prev_ladder;
  GeoConfig geo;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class SchemaViolation : public Error {
public:
  SchemaViolation(const std::string& file, std::size_t row,
                  const std::string& column, const std::string& what)
      : Error(file + ": row " + std::to_string(row) + ", column '" + column +
              "': " + what),
        row(row),
        column(column) {}
  std::size_t row;
  std::string column;
};

class UnknownTeam : public Error {
public:
  explicit UnknownTeam(const std::string& name)
      : Error("unknown team: " + name), name(name) {}
  std::string name;
};

class OrphanPiRecord : public Error {
public:
  OrphanPiRecord(const std::string& game_id, const std::string& team)
      : Error("pi record references unknown game/team: (" + game_id + ", " +
              team + ")") {}
};

class MissingPiRecord : public Error {
public:
  MissingPiRecord(const std::string& game_id, const std::string& team)
      : Error("no pi record for (" + game_id + ", " + team + ")") {}
};

class DuplicateGame : public Error {
public:
  explicit DuplicateGame(const std::string& game_id)
      : Error("duplicate game_id: " + game_id) {}
};

class UnknownVenue : public Error {
public:
  explicit UnknownVenue(const std::string& venue)
      : Error("venue not in geo config: " + venue) {}
};

class MissingLadder : public Error {
public:
  MissingLadder(int season, int round)
      : Error("no ladder entry for season " + std::to_string(season) +
              ", round " + std::to_string(round)) {}
};

class MissingPrevLadder : public Error {
public:
  MissingPrevLadder(int season, const std::string& team)
      : Error("no previous-ladder entry for season " + std::to_string(season) +
              ", team " + team) {}
};

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

namespace detail {

inline int parse_int(const std::string& file, std::size_t row,
                     const std::string& column, const std::string& text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SchemaViolation(file, row, column, "not an integer: '" + text + "'");
  }
  return value;
}

inline double parse_double(const std::string& file, std::size_t row,
                           const std::string& column, const std::string& text) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SchemaViolation(file, row, column, "not a number: '" + text + "'");
  }
  return value;
}

inline bool parse_bool(const std::string& file, std::size_t row,
                       const std::string& column, const std::string& text) {
  if (text == "1" || text == "true" || text == "TRUE" || text == "True") return true;
  if (text == "0" || text == "false" || text == "FALSE" || text == "False") return false;
  throw SchemaViolation(file, row, column, "not a boolean: '" + text + "'");
}

inline void check_header(const std::string& file, const std::vector<std::string>& got,
                         const std::vector<std::string>& want) {
  if (got != want) {
    std::string msg = "unexpected header; want:";
    for (const auto& w : want) msg += " " + w;
    throw SchemaViolation(file, 1, got.empty() ? "" : got[0], msg);
  }
}

inline std::string check_team(const std::string& name) {
  if (!is_roster_team(name)) throw UnknownTeam(name);
  return name;
}

inline void check_date(const std::string& file, std::size_t row,
                       const std::string& text) {
  // YYYY-MM-DD
  bool ok = text.size() == 10 && text[4] == '-' && text[7] == '-';
  if (ok) {
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) ok = false;
    }
  }
  if (!ok) {
    throw SchemaViolation(file, row, "date", "not an ISO date: '" + text + "'");
  }
}

struct GameOrder {
  bool operator()(const GameRecord& a, const GameRecord& b) const {
    return std::tie(a.season, a.round, a.date, a.game_id) <
           std::tie(b.season, b.round, b.date, b.game_id);
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

inline std::vector<std::string> matches_csv_header() {
  return {"game_id", "season",      "round",       "date",  "home_team",
          "away_team", "home_points", "away_points", "venue", "is_final"};
}

inline std::vector<std::string> pis_csv_header() {
  std::vector<std::string> h = {"game_id", "team"};
  for (const auto& pi : kPiSchema) h.push_back(pi_csv_column(pi.name));
  return h;
}

/// Cross-table validation of an in-memory Dataset. Called by load_dataset and
/// by the CLI `validate` command; also usable on synthetic data.
inline void validate_dataset(const Dataset& d) {
  std::set<std::string> game_ids;
  std::set<std::tuple<int, int, std::string>> team_rounds;
  for (const auto& g : d.games) {
    if (!game_ids.insert(g.game_id).second) throw DuplicateGame(g.game_id);
    detail::check_team(g.home_team);
    detail::check_team(g.away_team);
    if (g.home_team == g.away_team) {
      throw SchemaViolation("matches", 0, "away_team",
                            "home and away team are both " + g.home_team +
                                " in game " + g.game_id);
    }
    for (const auto& team : {g.home_team, g.away_team}) {
      if (!team_rounds.insert({g.season, g.round, team}).second) {
        throw SchemaViolation("matches", 0, "round",
                              team + " appears twice in season " +
                                  std::to_string(g.season) + " round " +
                                  std::to_string(g.round));
      }
    }
    if (g.round < 1) {
      throw SchemaViolation("matches", 0, "round", "round must be >= 1");
    }
    if (g.home_points < 0 || g.away_points < 0) {
      throw SchemaViolation("matches", 0, "home_points", "negative score");
    }
    if (d.geo.venue_state.find(g.venue) == d.geo.venue_state.end()) {
      throw UnknownVenue(g.venue);
    }
  }

  // Exactly one PiRecord per (game, team), none pointing elsewhere.
  std::set<std::pair<std::string, std::string>> expected;
  for (const auto& g : d.games) {
    expected.insert({g.game_id, g.home_team});
    expected.insert({g.game_id, g.away_team});
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& pi : d.pis) {
    if (pi.values.size() != kNumPis) {
      throw SchemaViolation("pis", 0, "values", "wrong pi vector length");
    }
    std::pair<std::string, std::string> key{pi.game_id, pi.team};
    if (expected.find(key) == expected.end()) {
      throw OrphanPiRecord(pi.game_id, pi.team);
    }
    if (!seen.insert(key).second) {
      throw SchemaViolation("pis", 0, "game_id",
                            "duplicate pi record for (" + pi.game_id + ", " +
                                pi.team + ")");
    }
    for (std::size_t k = 0; k < kNumPis; ++k) {
      const double v = pi.values[k];
      if (!std::isfinite(v)) {
        throw SchemaViolation("pis", 0, std::string(kPiSchema[k].name),
                              "non-finite value");
      }
      if (v < 0.0 || (kPiSchema[k].is_rate && v > 100.0)) {
        throw SchemaViolation("pis", 0, std::string(kPiSchema[k].name),
                              "out of range: " + format_double(v));
      }
    }
  }
  for (const auto& key : expected) {
    if (seen.find(key) == seen.end()) {
      throw MissingPiRecord(key.first, key.second);
    }
  }

  // Ladder: positions per (season, round) must be a permutation of 1..18.
  std::map<std::pair<int, int>, std::set<int>> ladder_rounds;
  for (const auto& l : d.ladder) {
    detail::check_team(l.team);
    if (l.position < 1 || l.position > 18) {
      throw SchemaViolation("ladder", 0, "position", "position out of [1,18]");
    }
    if (!ladder_rounds[{l.season, l.round}].insert(l.position).second) {
      throw SchemaViolation("ladder", 0, "position",
                            "duplicate position " + std::to_string(l.position) +
                                " in season " + std::to_string(l.season) +
                                " round " + std::to_string(l.round));
    }
  }
  for (const auto& [key, positions] : ladder_rounds) {
    if (positions.size() != 18) {
      throw SchemaViolation("ladder", 0, "position",
                            "season " + std::to_string(key.first) + " round " +
                                std::to_string(key.second) + " has " +
                                std::to_string(positions.size()) +
                                " entries, expected 18");
    }
  }

  std::map<int, std::set<int>> prev_positions;
  std::set<std::pair<int, std::string>> prev_keys;
  for (const auto& p : d.prev_ladder) {
    detail::check_team(p.team);
    if (p.final_position < 1 || p.final_position > 18) {
      throw SchemaViolation("prev_ladder", 0, "final_position",
                            "position out of [1,18]");
    }
    if (!prev_keys.insert({p.season, p.team}).second) {
      throw SchemaViolation("prev_ladder", 0, "team",
                            "duplicate entry for " + p.team);
    }
    if (!prev_positions[p.season].insert(p.final_position).second) {
      throw SchemaViolation("prev_ladder", 0, "final_position",
                            "duplicate position in season " +
                                std::to_string(p.season));
    }
  }
  for (const auto& [season, positions] : prev_positions) {
    if (positions.size() != 18) {
      throw SchemaViolation("prev_ladder", 0, "final_position",
                            "season " + std::to_string(season) +
                                " is not a permutation of 1..18");
    }
  }

  for (const auto& [team, state] : d.geo.team_state) {
    detail::check_team(team);
    auto it = d.geo.team_home_venues.find(team);
    if (it == d.geo.team_home_venues.end() || it->second.empty()) {
      throw SchemaViolation("geo", 0, "home_venues",
                            team + " has no home venue");
    }
    for (const auto& v : it->second) {
      if (d.geo.venue_state.find(v) == d.geo.venue_state.end()) {
        throw UnknownVenue(v);
      }
    }
  }
  for (const auto& g : d.games) {
    if (d.geo.team_state.find(g.home_team) == d.geo.team_state.end()) {
      throw SchemaViolation("geo", 0, "team", "no geo entry for " + g.home_team);
    }
    if (d.geo.team_state.find(g.away_team) == d.geo.team_state.end()) {
      throw SchemaViolation("geo", 0, "team", "no geo entry for " + g.away_team);
    }
  }
}

/// Loads and joins the five input tables into a validated Dataset.
inline Dataset load_dataset(const std::filesystem::path& matches_path,
                            const std::filesystem::path& pis_path,
                            const std::filesystem::path& ladder_path,
                            const std::filesystem::path& prev_ladder_path,
                            const std::filesystem::path& geo_path) {
  Dataset d;

  {
    const std::string file = matches_path.string();
    CsvTable t = read_csv_file(matches_path);
    detail::check_header(file, t.header, matches_csv_header());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const std::size_t line = r + 2;
      GameRecord g;
      g.game_id = row[0];
      g.season = detail::parse_int(file, line, "season", row[1]);
      g.round = detail::parse_int(file, line, "round", row[2]);
      detail::check_date(file, line, row[3]);
      g.date = row[3];
      g.home_team = detail::check_team(row[4]);
      g.away_team = detail::check_team(row[5]);
      g.home_points = detail::parse_int(file, line, "home_points", row[6]);
      g.away_points = detail::parse_int(file, line, "away_points", row[7]);
      g.venue = row[8];
      g.is_final = detail::parse_bool(file, line, "is_final", row[9]);
      d.games.push_back(std::move(g));
    }
    std::sort(d.games.begin(), d.games.end(), detail::GameOrder{});
  }

  {
    const std::string file = pis_path.string();
    CsvTable t = read_csv_file(pis_path);
    detail::check_header(file, t.header, pis_csv_header());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const std::size_t line = r + 2;
      PiRecord pi;
      pi.game_id = row[0];
      pi.team = detail::check_team(row[1]);
      pi.values.reserve(kNumPis);
      for (std::size_t k = 0; k < kNumPis; ++k) {
        pi.values.push_back(detail::parse_double(
            file, line, std::string(kPiSchema[k].name), row[2 + k]));
      }
      d.pis.push_back(std::move(pi));
    }
    std::sort(d.pis.begin(), d.pis.end(), [](const PiRecord& a, const PiRecord& b) {
      return std::tie(a.game_id, a.team) < std::tie(b.game_id, b.team);
    });
  }

  {
    const std::string file = ladder_path.string();
    CsvTable t = read_csv_file(ladder_path);
    detail::check_header(file, t.header, {"season", "round", "team", "position"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const std::size_t line = r + 2;
      LadderRecord l;
      l.season = detail::parse_int(file, line, "season", row[0]);
      l.round = detail::parse_int(file, line, "round", row[1]);
      l.team = detail::check_team(row[2]);
      l.position = detail::parse_int(file, line, "position", row[3]);
      d.ladder.push_back(std::move(l));
    }
    std::sort(d.ladder.begin(), d.ladder.end(),
              [](const LadderRecord& a, const LadderRecord& b) {
                return std::tie(a.season, a.round, a.team) <
                       std::tie(b.season, b.round, b.team);
              });
  }

  {
    const std::string file = prev_ladder_path.string();
    CsvTable t = read_csv_file(prev_ladder_path);
    detail::check_header(file, t.header, {"season", "team", "final_position"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const std::size_t line = r + 2;
      PrevLadderRecord p;
      p.season = detail::parse_int(file, line, "season", row[0]);
      p.team = detail::check_team(row[1]);
      p.final_position = detail::parse_int(file, line, "final_position", row[2]);
      d.prev_ladder.push_back(std::move(p));
    }
    std::sort(d.prev_ladder.begin(), d.prev_ladder.end(),
              [](const PrevLadderRecord& a, const PrevLadderRecord& b) {
                return std::tie(a.season, a.team) < std::tie(b.season, b.team);
              });
  }

  {
    const std::string file = geo_path.string();
    auto sections = read_csv_sections(geo_path);
    if (sections.size() != 2) {
      throw SchemaViolation(file, 1, "",
                            "expected two sections (venues, teams), got " +
                                std::to_string(sections.size()));
    }
    detail::check_header(file, sections[0].header, {"venue", "state"});
    for (const auto& row : sections[0].rows) {
      d.geo.venue_state[row[0]] = row[1];
    }
    detail::check_header(file, sections[1].header, {"team", "state", "home_venues"});
    for (const auto& row : sections[1].rows) {
      const std::string team = detail::check_team(row[0]);
      d.geo.team_state[team] = row[1];
      std::set<std::string> venues;
      std::string current;
      for (char c : row[2]) {
        if (c == ';') {
          if (!current.empty()) venues.insert(current);
          current.clear();
        } else {
          current.push_back(c);
        }
      }
      if (!current.empty()) venues.insert(current);
      d.geo.team_home_venues[team] = std::move(venues);
    }
  }

  validate_dataset(d);
  return d;
}

// ---------------------------------------------------------------------------
// Serialization (canonical order; loading the output reproduces the Dataset)
// ---------------------------------------------------------------------------

inline void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& g : d.games) {
      rows.push_back({g.game_id, std::to_string(g.season), std::to_string(g.round),
                      g.date, g.home_team, g.away_team,
                      std::to_string(g.home_points), std::to_string(g.away_points),
                      g.venue, g.is_final ? "1" : "0"});
    }
    write_csv_file(dir / "matches.csv", matches_csv_header(), rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& pi : d.pis) {
      std::vector<std::string> row = {pi.game_id, pi.team};
      for (double v : pi.values) row.push_back(format_double(v));
      rows.push_back(std::move(row));
    }
    write_csv_file(dir / "pis.csv", pis_csv_header(), rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& l : d.ladder) {
      rows.push_back({std::to_string(l.season), std::to_string(l.round), l.team,
                      std::to_string(l.position)});
    }
    write_csv_file(dir / "ladder.csv", {"season", "round", "team", "position"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : d.prev_ladder) {
      rows.push_back({std::to_string(p.season), p.team,
                      std::to_string(p.final_position)});
    }
    write_csv_file(dir / "prev_ladder.csv", {"season", "team", "final_position"}, rows);
  }
  {
    std::ofstream out(dir / "geo.csv", std::ios::binary);
    if (!out) throw CsvError("cannot open geo.csv for writing");
    write_csv_row(out, {"venue", "state"});
    for (const auto& [venue, state] : d.geo.venue_state) {
      write_csv_row(out, {venue, state});
    }
    out << '\n';
    write_csv_row(out, {"team", "state", "home_venues"});
    for (const auto& [team, state] : d.geo.team_state) {
      std::string venues;
      auto it = d.geo.team_home_venues.find(team);
      if (it != d.geo.team_home_venues.end()) {
        bool first = true;
        for (const auto& v : it->second) {
          if (!first) venues += ';';
          venues += v;
          first = false;
        }
      }
      write_csv_row(out, {team, state, venues});
    }
  }
}

inline Dataset load_dataset_dir(const std::filesystem::path& dir) {
  return load_dataset(dir / "matches.csv", dir / "pis.csv", dir / "ladder.csv",
                      dir / "prev_ladder.csv", dir / "geo.csv");
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

inline int draw_count(const Dataset& d) {
  int n = 0;
  for (const auto& g : d.games) n += g.draw() ? 1 : 0;
  return n;
}

/// Games with a winner, in (season, round, date, game_id) order.
inline std::vector<GameRecord> decided_games(const Dataset& d) {
  std::vector<GameRecord> out;
  out.reserve(d.games.size());
  for (const auto& g : d.games) {
    if (!g.draw()) out.push_back(g);
  }
  return out;  // dataset is already sorted canonically
}

inline std::vector<int> seasons_in(const Dataset& d) {
  std::set<int> s;
  for (const auto& g : d.games) s.insert(g.season);
  return {s.begin(), s.end()};
}

}  // namespace btkit
