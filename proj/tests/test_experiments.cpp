#include <cmath>

#include "catch2/catch_amalgamated.hpp"

#include "btkit/btkit.hpp"
#include "support.hpp"

using namespace btkit;
using testsupport::DatasetBuilder;
using Catch::Approx;

namespace {

SynthSpec small_league(std::uint64_t seed, int seasons = 2, int rounds = 8,
                       bool finals = true) {
  SynthSpec spec;
  spec.num_seasons = seasons;
  spec.rounds = rounds;
  spec.with_finals = finals;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("reference selection picks the team nearest a half") {
  DatasetBuilder builder({"Adelaide", "Carlton", "Essendon", "Geelong"});
  // Adelaide 2-0, Carlton 1-1, Essendon 0-2, Geelong 1-1
  builder.game(2021, 1, "Adelaide", "Essendon", 80, 40)
      .game(2021, 1, "Carlton", "Geelong", 50, 60)
      .game(2021, 2, "Adelaide", "Essendon", 80, 40)
      .game(2021, 2, "Geelong", "Carlton", 50, 60);
  Dataset d = builder.build();
  // tie between Carlton and Geelong at exactly 0.5 -> alphabetically first
  CHECK(choose_reference(decided_games(d)) == "Carlton");
}

TEST_CASE("a unique half-wins team is always the reference") {
  DatasetBuilder builder({"Adelaide", "Carlton"});
  builder.game(2021, 1, "Adelaide", "Carlton", 80, 40)
      .game(2021, 2, "Carlton", "Adelaide", 50, 60)
      .game(2021, 3, "Adelaide", "Carlton", 30, 40);
  Dataset d = builder.build();
  // Adelaide 2-1, Carlton 1-2: both equally distant -> alphabetical
  CHECK(choose_reference(decided_games(d)) == "Adelaide");

  DatasetBuilder b2({"Adelaide", "Carlton"});
  b2.game(2021, 1, "Adelaide", "Carlton", 80, 40)
      .game(2021, 2, "Carlton", "Adelaide", 10, 60)
      .game(2021, 3, "Adelaide", "Carlton", 30, 40)
      .game(2021, 4, "Carlton", "Adelaide", 90, 60);
  // Adelaide 2-2 exactly
  CHECK(choose_reference(decided_games(b2.build())) == "Adelaide");
}

TEST_CASE("outcome experiment on a two-team league matches the closed form") {
  DatasetBuilder builder({"Adelaide", "Carlton"});
  builder.game(2021, 1, "Adelaide", "Carlton", 80, 40)
      .game(2021, 2, "Adelaide", "Carlton", 80, 40)
      .game(2021, 3, "Adelaide", "Carlton", 80, 40)
      .game(2021, 4, "Adelaide", "Carlton", 30, 40);
  Dataset d = builder.build();
  WindowSpec window;
  window.train_seasons = {2021};
  ExperimentReport r = run_outcome_experiment(d, window, false);

  // lambda(Adelaide) = log 3 relative to Carlton; every game predicted as an
  // Adelaide win, which is right 3 times out of 4.
  CHECK(r.train_accuracy.correct == 3);
  CHECK(r.train_accuracy.total == 4);
  CHECK(r.train_aic == Approx(2.0 - 2.0 * (3 * std::log(0.75) + std::log(0.25))));
  // both teams are equally far from a half, so the tie goes alphabetically
  CHECK(r.reference_team == "Adelaide");
  CHECK_FALSE(r.test_season.has_value());
}

TEST_CASE("outcome experiment scores the following season when present") {
  SynthSpec spec = small_league(42);
  Dataset d = generate_games(spec);
  WindowSpec window;
  window.train_seasons = {spec.first_season};
  window.test_season = spec.first_season + 1;
  ExperimentReport r = run_outcome_experiment(d, window, true);
  const auto test_games = window_games(d, std::vector<int>{spec.first_season + 1});
  CHECK(r.test_accuracy.total == static_cast<int>(test_games.size()));
  CHECK(r.finals_total == 7);
  CHECK(r.fit->coefficient("AT_HOME") != 0.0);
  CHECK(r.test_outcomes.size() == test_games.size());
  for (const auto& o : r.test_outcomes) {
    CHECK(o.predicted_home_win == (o.p_home > 0.5));
  }
}

TEST_CASE("screening keeps planted signals and drops pure noise") {
  int planted_kept = 0;
  int noise_kept = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Design design = generate_design(400, {"PLANTED", "NOISE"}, std::vector<double>{1.0, 0.0}, seed);
    ScreenOutcome out = screen_features(design, design.columns);
    for (const auto& name : out.significant) {
      if (name == "PLANTED") ++planted_kept;
      if (name == "NOISE") ++noise_kept;
    }
  }
  CHECK(planted_kept >= 18);
  CHECK(noise_kept <= 2);
}

TEST_CASE("screening treats degenerate fits as not significant") {
  Design design = generate_design(50, {"GOOD"}, std::vector<double>{0.5}, 9);
  // add an all-zero column
  design.columns.push_back("DEAD");
  for (auto& row : design.rows) row.x.push_back(0.0);
  ScreenOutcome out = screen_features(design, design.columns);
  CHECK(std::count(out.failed.begin(), out.failed.end(), "DEAD") == 1);
  CHECK(std::count(out.significant.begin(), out.significant.end(), "DEAD") == 0);
}

TEST_CASE("backward elimination keeps the planted feature and drops noise") {
  int clean_runs = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Design design = generate_design(
        400, {"PLANTED", "NOISE"}, std::vector<double>{1.0, 0.0}, seed * 31);
    FitResult fit = backward_eliminate(design, {"PLANTED", "NOISE"});
    const bool only_planted = fit.columns == std::vector<std::string>{"PLANTED"};
    if (only_planted) ++clean_runs;
    // the result is always a subset of the start set
    for (const auto& c : fit.columns) {
      CHECK((c == "PLANTED" || c == "NOISE"));
    }
  }
  CHECK(clean_runs >= 18);
}

TEST_CASE("a single significant feature is a fixed point of elimination") {
  Design design = generate_design(400, {"PLANTED"}, std::vector<double>{1.0}, 3);
  FitResult fit = backward_eliminate(design, {"PLANTED"});
  CHECK(fit.columns == std::vector<std::string>{"PLANTED"});
}

TEST_CASE("duplicated columns are resolved by dropping the alphabetically last") {
  Design design = generate_design(300, {"AAA"}, std::vector<double>{1.0}, 5);
  design.columns.push_back("BBB");  // exact duplicate of AAA
  for (auto& row : design.rows) row.x.push_back(row.x[0]);
  FitResult fit = backward_eliminate(design, {"AAA", "BBB"});
  CHECK(fit.columns == std::vector<std::string>{"AAA"});
}

TEST_CASE("elimination result is a subset of the screened set") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Design design = generate_design(
        350, {"S1", "S2", "N1", "N2", "N3"},
        std::vector<double>{0.9, 0.7, 0.0, 0.0, 0.0}, seed * 7);
    ScreenOutcome screened = screen_features(design, design.columns);
    if (screened.significant.empty()) continue;
    FitResult fit = backward_eliminate(design, screened.significant);
    for (const auto& c : fit.columns) {
      CHECK(std::count(screened.significant.begin(), screened.significant.end(), c) == 1);
    }
  }
}

TEST_CASE("covariate experiment falls back to the order effect alone") {
  // five noisy games: nothing can clear the 5% level
  Design design = generate_design(5, {"N"}, std::vector<double>{0.0}, 12);
  CovariateModel model = select_and_fit(design);
  CHECK_FALSE(model.fit.has_value());
}

TEST_CASE("covariate experiment on an order-effect-only league keeps AT_HOME") {
  SynthSpec spec;
  spec.strengths.assign(18, 0.0);
  spec.home_effect = 1.2;
  spec.num_seasons = 2;
  spec.rounds = 20;
  spec.with_finals = false;
  spec.pi_signal = 0.0;  // PIs are pure noise
  spec.seed = 8;
  Dataset d = generate_games(spec);
  WindowSpec window;
  window.train_seasons = {spec.first_season};
  window.test_season = spec.first_season + 1;
  window.encoding = Encoding::kLast4;
  ExperimentReport r = run_covariate_experiment(d, window);
  CHECK(std::count(r.retained.begin(), r.retained.end(), "AT_HOME") == 1);
  CHECK(r.test_accuracy.total > 0);
}

TEST_CASE("addition with a one-round test season equals the full-season model") {
  SynthSpec spec = small_league(51, 2, 1, false);
  Dataset d = generate_games(spec);
  const int train = spec.first_season;
  const int test = spec.first_season + 1;

  auto added = strategy_addition(d, train, test, Encoding::kLast4);

  WindowSpec window;
  window.train_seasons = {train};
  window.test_season = test;
  window.encoding = Encoding::kLast4;
  ExperimentReport full = run_covariate_experiment(d, window);

  REQUIRE(added.size() == full.test_outcomes.size());
  for (std::size_t i = 0; i < added.size(); ++i) {
    CHECK(added[i].game_id == full.test_outcomes[i].game_id);
    CHECK(added[i].p_home == full.test_outcomes[i].p_home);
    CHECK(added[i].predicted_home_win == full.test_outcomes[i].predicted_home_win);
  }
}

TEST_CASE("substitution with a one-round test season matches addition") {
  SynthSpec spec = small_league(52, 2, 1, false);
  Dataset d = generate_games(spec);
  auto a = strategy_addition(d, spec.first_season, spec.first_season + 1, Encoding::kLast4);
  auto s = strategy_substitution(d, spec.first_season, spec.first_season + 1, Encoding::kLast4);
  REQUIRE(a.size() == s.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].game_id == s[i].game_id);
    CHECK(a[i].p_home == s[i].p_home);
  }
}

TEST_CASE("substitution matches addition when the seasons repeat themselves") {
  // Clone one synthetic season into the next, fixtures and results included,
  // and align the previous-ladder tables. Every test round then contributes
  // exactly the rows the substitution discards, so both strategies see
  // equivalent training data and call the games the same way.
  SynthSpec spec = small_league(60, 1, 5, false);
  Dataset d = generate_games(spec);
  const int train = spec.first_season;
  const int test = train + 1;

  Dataset two = d;
  std::erase_if(two.prev_ladder,
                [&](const PrevLadderRecord& p) { return p.season == train; });
  for (const auto& p : d.prev_ladder) {
    if (p.season == train - 1) {
      two.prev_ladder.push_back({train, p.team, p.final_position});
    }
  }
  for (const auto& g : d.games) {
    GameRecord clone = g;
    clone.season = test;
    clone.game_id = "C" + g.game_id;
    two.games.push_back(clone);
    for (const auto& pi : d.pis) {
      if (pi.game_id != g.game_id) continue;
      PiRecord pc = pi;
      pc.game_id = clone.game_id;
      two.pis.push_back(pc);
    }
  }
  for (const auto& l : d.ladder) {
    if (l.season == train) two.ladder.push_back({test, l.round, l.team, l.position});
  }
  std::sort(two.games.begin(), two.games.end(),
            [](const GameRecord& a, const GameRecord& b) {
              return std::tie(a.season, a.round, a.date, a.game_id) <
                     std::tie(b.season, b.round, b.date, b.game_id);
            });
  std::sort(two.pis.begin(), two.pis.end(),
            [](const PiRecord& a, const PiRecord& b) {
              return std::tie(a.game_id, a.team) < std::tie(b.game_id, b.team);
            });

  auto added = strategy_addition(two, train, test, Encoding::kLast4);
  auto substituted = strategy_substitution(two, train, test, Encoding::kLast4);
  REQUIRE(added.size() == substituted.size());

  // By round 2 the substitution training multiset is exactly the original
  // season again, while addition carries one duplicated round on top; the
  // round-2 calls still agree. Later rounds may drift apart as the duplicate
  // share grows, so only round 2 is pinned here.
  std::set<std::string> round2;
  for (const auto& g : two.games) {
    if (g.season == test && g.round == 2) round2.insert(g.game_id);
  }
  REQUIRE(!round2.empty());
  for (std::size_t i = 0; i < added.size(); ++i) {
    CHECK(added[i].game_id == substituted[i].game_id);
    if (round2.count(added[i].game_id)) {
      CHECK(added[i].predicted_home_win == substituted[i].predicted_home_win);
    }
  }
}

TEST_CASE("strategies are deterministic") {
  SynthSpec spec = small_league(53, 2, 6, true);
  Dataset d = generate_games(spec);
  const int train = spec.first_season;
  const int test = spec.first_season + 1;
  for (auto encoding : {Encoding::kLast4, Encoding::kSeason}) {
    CHECK(strategy_addition(d, train, test, encoding) ==
          strategy_addition(d, train, test, encoding));
    CHECK(strategy_substitution(d, train, test, encoding) ==
          strategy_substitution(d, train, test, encoding));
    CHECK(strategy_incremental(d, train, test, encoding) ==
          strategy_incremental(d, train, test, encoding));
  }
}

TEST_CASE("incremental uses the previous-season model for a three-round season") {
  SynthSpec spec = small_league(54, 2, 3, false);
  Dataset d = generate_games(spec);
  const int train = spec.first_season;
  const int test = spec.first_season + 1;

  auto incremental = strategy_incremental(d, train, test, Encoding::kSeason);

  // expected: the train-season model applied to every test round
  WindowSpec window;
  window.train_seasons = {train};
  window.test_season = test;
  window.encoding = Encoding::kSeason;
  ExperimentReport full = run_covariate_experiment(d, window);
  REQUIRE(incremental.size() == full.test_outcomes.size());
  for (std::size_t i = 0; i < incremental.size(); ++i) {
    CHECK(incremental[i].p_home == full.test_outcomes[i].p_home);
  }
}

TEST_CASE("strategy predictions cover every decided test game exactly once") {
  SynthSpec spec = small_league(55, 2, 6, true);
  Dataset d = generate_games(spec);
  const int test = spec.first_season + 1;
  const auto test_games = window_games(d, std::vector<int>{test});
  for (auto strategy : {&strategy_addition, &strategy_substitution, &strategy_incremental}) {
    auto outcomes = (*strategy)(d, spec.first_season, test, Encoding::kLast4);
    CHECK(outcomes.size() == test_games.size());
    std::set<std::string> ids;
    for (const auto& o : outcomes) CHECK(ids.insert(o.game_id).second);
  }
}

TEST_CASE("majority voting follows the at-least-three rule") {
  SECTION("explicit counts") {
    auto make = [](const std::string& id, bool home_vote) {
      PredictionOutcome o;
      o.game_id = id;
      o.p_home = home_vote ? 0.8 : 0.2;
      o.predicted_home_win = home_vote;
      o.actual_home_win = true;
      return o;
    };
    std::vector<std::vector<PredictionOutcome>> votes(5);
    // g1: 5 home votes; g2: 3 home; g3: 2 home
    for (int v = 0; v < 5; ++v) {
      votes[v].push_back(make("g1", true));
      votes[v].push_back(make("g2", v < 3));
      votes[v].push_back(make("g3", v < 2));
    }
    auto result = majority_vote(votes);
    REQUIRE(result.size() == 3);
    CHECK(result[0].game_id == "g1");
    CHECK(result[0].predicted_home_win);
    CHECK(result[0].p_home == 1.0);
    CHECK(result[1].predicted_home_win);       // 3 of 5
    CHECK_FALSE(result[2].predicted_home_win);  // 2 of 5
  }

  SECTION("all 32 vote patterns") {
    std::vector<std::vector<PredictionOutcome>> votes(5);
    for (int pattern = 0; pattern < 32; ++pattern) {
      for (int v = 0; v < 5; ++v) {
        PredictionOutcome o;
        o.game_id = "p" + std::to_string(pattern + 100);
        o.predicted_home_win = (pattern >> v) & 1;
        o.p_home = o.predicted_home_win ? 0.9 : 0.1;
        votes[v].push_back(o);
      }
    }
    auto result = majority_vote(votes);
    REQUIRE(result.size() == 32);
    for (const auto& o : result) {
      const int pattern = std::stoi(o.game_id.substr(1)) - 100;
      const int bits = __builtin_popcount(static_cast<unsigned>(pattern));
      CHECK(o.predicted_home_win == (bits >= 3));
      CHECK(o.p_home == Approx(bits / 5.0));
    }
  }

  SECTION("vote order does not matter") {
    SynthSpec spec = small_league(56, 2, 4, false);
    Dataset d = generate_games(spec);
    WindowSpec window;
    window.train_seasons = {spec.first_season};
    window.test_season = spec.first_season + 1;
    auto reports = run_strategy_experiment(d, window);
    std::vector<std::vector<PredictionOutcome>> votes;
    for (const auto& r : reports) {
      if (r.model != "majority") votes.push_back(r.test_outcomes);
    }
    REQUIRE(votes.size() == 5);
    auto v1 = majority_vote(votes);
    std::rotate(votes.begin(), votes.begin() + 2, votes.end());
    auto v2 = majority_vote(votes);
    CHECK(v1 == v2);
  }

  SECTION("a missing vote is an error") {
    std::vector<std::vector<PredictionOutcome>> votes(5);
    for (int v = 0; v < 5; ++v) {
      PredictionOutcome o;
      o.game_id = "g1";
      votes[v].push_back(o);
    }
    votes[4].pop_back();
    CHECK_THROWS_AS(majority_vote(votes), MissingVote);
  }
}

TEST_CASE("the strategy experiment produces one report per model") {
  SynthSpec spec = small_league(57, 2, 5, true);
  Dataset d = generate_games(spec);
  WindowSpec window;
  window.train_seasons = {spec.first_season};
  window.test_season = spec.first_season + 1;
  auto reports = run_strategy_experiment(d, window);
  REQUIRE(reports.size() == 6);
  CHECK(reports[0].model == "contest");
  CHECK(reports[1].model == "ts_tv");
  CHECK(reports[2].model == "addition");
  CHECK(reports[3].model == "substitution");
  CHECK(reports[4].model == "incremental");
  CHECK(reports[5].model == "majority");
  const auto n = window_games(d, std::vector<int>{spec.first_season + 1}).size();
  for (const auto& r : reports) {
    CHECK(r.test_accuracy.total == static_cast<int>(n));
  }
}

TEST_CASE("window specs police their own invariants") {
  WindowSpec gap;
  gap.train_seasons = {2019, 2021};
  CHECK_THROWS_AS(gap.validate(), Error);

  WindowSpec wrong_test;
  wrong_test.train_seasons = {2019, 2020};
  wrong_test.test_season = 2023;
  CHECK_THROWS_AS(wrong_test.validate(), Error);

  WindowSpec ok;
  ok.train_seasons = {2019, 2020};
  ok.test_season = 2021;
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.label() == "2019-2020");

  SynthSpec spec = small_league(62, 3, 2, false);
  Dataset d = generate_games(spec);
  WindowSpec multi;
  multi.train_seasons = {spec.first_season, spec.first_season + 1};
  multi.test_season = spec.first_season + 2;
  CHECK_THROWS_AS(run_strategy_experiment(d, multi), Error);
}

TEST_CASE("unknown reference teams are rejected up front") {
  PairCounts pc = testsupport::make_counts({{"A", "B", 2, 1}});
  CHECK_THROWS_AS(fit_standard(pc, "Z"), UnknownTeam);
  CHECK_THROWS_AS(pair_design(pc, "Z", false), UnknownTeam);
  CHECK_THROWS_AS(grid_mle_oracle(pc, "Z"), UnknownTeam);
}

TEST_CASE("an exact half probability is called as an away win") {
  // strictly greater than 0.5 is required for a home call
  Design design = generate_design(4, {"X"}, std::vector<double>{0.0}, 1);
  FitResult fit;
  fit.columns = {"X"};
  fit.beta = {0.0};
  fit.se = {1.0};
  fit.converged = true;
  auto preds = predict_design(fit, design, "test");
  for (const auto& o : preds) {
    CHECK(o.p_home == 0.5);
    CHECK_FALSE(o.predicted_home_win);
  }
}

TEST_CASE("predicted features never use the game itself or later games") {
  SynthSpec spec = small_league(58, 2, 5, false);
  Dataset d = generate_games(spec);
  const int test = spec.first_season + 1;
  Design full = assemble_design(d, Encoding::kLast4, {test});

  // spot-check a handful of games across the season
  for (std::size_t pick : {std::size_t{0}, full.rows.size() / 2, full.rows.size() - 1}) {
    const DesignRow& row = full.rows[pick];
    const GameRecord* game = nullptr;
    for (const auto& g : d.games) {
      if (g.game_id == row.game_id) game = &g;
    }
    REQUIRE(game != nullptr);
    Dataset truncated = testsupport::truncate_after(d, *game);
    Design redone = assemble_design(truncated, Encoding::kLast4, {test});
    const DesignRow* same = nullptr;
    for (const auto& r : redone.rows) {
      if (r.game_id == row.game_id) same = &r;
    }
    REQUIRE(same != nullptr);
    CHECK(*same == row);
  }
}
