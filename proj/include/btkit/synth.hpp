#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "btkit/btcore.hpp"
#include "btkit/data.hpp"
#include "btkit/features.hpp"
#include "btkit/rng.hpp"

namespace btkit {

class TooManyTeams : public Error {
public:
  explicit TooManyTeams(std::size_t n)
      : Error("grid oracle supports at most 3 teams, got " + std::to_string(n)) {}
};

// ---------------------------------------------------------------------------
// Synthetic league generation
// ---------------------------------------------------------------------------

/// Ground-truth league specification. Outcomes are sampled from the model
/// itself: P(home win) = sigma(lambda_home - lambda_away + home_effect).
/// Everything is deterministic given the seed; each season consumes its own
/// RNG substream.
struct SynthSpec {
  std::vector<std::string> teams{kTeamRoster.begin(), kTeamRoster.end()};
  std::vector<double> strengths;  // empty -> evenly spread in [-0.9, 0.9], sum 0
  double home_effect = 0.3;
  int first_season = 2021;
  int num_seasons = 2;
  int rounds = 22;         // home-and-away rounds per season
  bool with_finals = true; // adds a 7-game knockout after the last round
  double pi_signal = 8.0;  // per-game PI loading on team strength
  double pi_noise = 12.0;
  std::uint64_t seed = 1;
};

inline std::vector<double> default_strengths(std::size_t n) {
  // Evenly spread, centered: strongest first to match roster order.
  std::vector<double> s(n);
  if (n == 1) return {0.0};
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = 0.9 - 1.8 * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(n);
  for (double& v : s) v -= mean;
  return s;
}

namespace detail {

struct Standings {
  // sorted best-to-worst team indices
  std::vector<std::size_t> order;
};

inline Standings standings(const std::vector<std::string>& teams,
                           const std::vector<int>& wins,
                           const std::vector<int>& pf,
                           const std::vector<int>& pa) {
  Standings s;
  s.order.resize(teams.size());
  for (std::size_t i = 0; i < teams.size(); ++i) s.order[i] = i;
  std::sort(s.order.begin(), s.order.end(), [&](std::size_t a, std::size_t b) {
    if (wins[a] != wins[b]) return wins[a] > wins[b];
    const double ra = percentage_ratio(pf[a], pa[a]);
    const double rb = percentage_ratio(pf[b], pa[b]);
    if (ra != rb) return ra > rb;
    return teams[a] < teams[b];
  });
  return s;
}

inline std::string synth_date(int season, int round) {
  const int day_index = (round - 1) * 7;
  int month = 3 + day_index / 28;
  int day = 1 + day_index % 28;
  if (month > 12) month = 12;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", season % 10000, month, day);
  return buf;
}

}  // namespace detail

/// Generates a full synthetic Dataset: fixtures, scores, per-game PIs, round
/// ladders, previous-season ladder and geography, all consistent with the
/// ingest contract.
inline Dataset generate_games(const SynthSpec& spec) {
  const std::size_t nt = spec.teams.size();
  std::vector<double> lambda =
      spec.strengths.empty() ? default_strengths(nt) : spec.strengths;
  if (lambda.size() != nt) {
    throw Error("strengths length does not match team count");
  }

  Dataset d;

  static const std::array<std::string, 6> kStates = {"VIC", "NSW", "QLD",
                                                     "SA",  "WA",  "TAS"};
  std::vector<std::string> venue_of(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    venue_of[i] = spec.teams[i] + " Stadium";
    const std::string& state = kStates[i % kStates.size()];
    d.geo.venue_state[venue_of[i]] = state;
    d.geo.team_state[spec.teams[i]] = state;
    d.geo.team_home_venues[spec.teams[i]] = {venue_of[i]};
  }

  // Previous-season final ladder for the first season: rank by true strength.
  {
    std::vector<std::size_t> order(nt);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (lambda[a] != lambda[b]) return lambda[a] > lambda[b];
      return spec.teams[a] < spec.teams[b];
    });
    for (std::size_t rank = 0; rank < nt; ++rank) {
      d.prev_ladder.push_back({spec.first_season - 1, spec.teams[order[rank]],
                               static_cast<int>(rank + 1)});
    }
  }

  for (int s = 0; s < spec.num_seasons; ++s) {
    const int season = spec.first_season + s;
    Rng rng = Rng::substream(spec.seed, static_cast<std::uint64_t>(s));

    std::vector<int> wins(nt, 0), pf(nt, 0), pa(nt, 0);
    int game_counter = 0;

    auto play = [&](std::size_t home, std::size_t away, int round, bool final_flag) {
      GameRecord g;
      ++game_counter;
      char idbuf[48];
      std::snprintf(idbuf, sizeof(idbuf), "S%dG%03d", season, game_counter);
      g.game_id = idbuf;
      g.season = season;
      g.round = round;
      g.date = detail::synth_date(season, round);
      g.home_team = spec.teams[home];
      g.away_team = spec.teams[away];
      g.venue = venue_of[home];
      g.is_final = final_flag;

      const double p = sigmoid(lambda[home] - lambda[away] + spec.home_effect);
      const bool home_win = rng.bernoulli(p);
      const int loser_points =
          std::max<std::int64_t>(0, 60 + std::llround(rng.normal(0.0, 18.0)));
      const int margin =
          1 + static_cast<int>(std::llround(std::fabs(rng.normal(0.0, 25.0))));
      const int winner_points = loser_points + margin;
      g.home_points = home_win ? winner_points : loser_points;
      g.away_points = home_win ? loser_points : winner_points;

      for (std::size_t side = 0; side < 2; ++side) {
        const std::size_t t = side == 0 ? home : away;
        PiRecord pi;
        pi.game_id = g.game_id;
        pi.team = spec.teams[t];
        pi.values.resize(kNumPis);
        for (std::size_t c = 0; c < kNumPis; ++c) {
          if (kPiSchema[c].is_rate) {
            const double v = 50.0 + 5.0 * lambda[t] + rng.normal(0.0, 3.0);
            pi.values[c] = std::clamp(v, 0.0, 100.0);
          } else {
            const double v = 100.0 + spec.pi_signal * lambda[t] +
                             rng.normal(0.0, spec.pi_noise);
            pi.values[c] = std::max(0.0, std::round(v));
          }
        }
        d.pis.push_back(std::move(pi));
      }

      const std::size_t winner = home_win ? home : away;
      const std::size_t loser = home_win ? away : home;
      wins[winner] += 1;
      pf[winner] += winner_points;
      pa[winner] += loser_points;
      pf[loser] += loser_points;
      pa[loser] += winner_points;
      d.games.push_back(std::move(g));
    };

    auto emit_ladder = [&](int round) {
      auto st = detail::standings(spec.teams, wins, pf, pa);
      for (std::size_t rank = 0; rank < nt; ++rank) {
        d.ladder.push_back({season, round, spec.teams[st.order[rank]],
                            static_cast<int>(rank + 1)});
      }
    };

    // Circle-method fixture: team nt-1 fixed, the rest rotate. Orientation
    // alternates so home games even out across a season.
    const std::size_t rotating = nt - 1;
    for (int round = 1; round <= spec.rounds; ++round) {
      const int base = (round - 1) % static_cast<int>(rotating);
      const int cycle = (round - 1) / static_cast<int>(rotating);
      for (std::size_t k = 0; k < nt / 2; ++k) {
        std::size_t a, b;
        if (k == 0) {
          a = nt - 1;
          b = static_cast<std::size_t>(base);
        } else {
          a = (base + k) % rotating;
          b = (base + rotating - k) % rotating;
        }
        const bool flip = (static_cast<int>(k) + round + cycle) % 2 == 0;
        if (flip) std::swap(a, b);
        play(a, b, round, false);
      }
      emit_ladder(round);
    }

    if (spec.with_finals && nt >= 8) {
      auto st = detail::standings(spec.teams, wins, pf, pa);
      std::array<std::size_t, 8> seed8{};
      for (std::size_t i = 0; i < 8; ++i) seed8[i] = st.order[i];
      auto rank_of = [&](std::size_t team) {
        for (std::size_t i = 0; i < 8; ++i) {
          if (seed8[i] == team) return i;
        }
        return std::size_t{8};
      };
      auto host_first = [&](std::size_t a, std::size_t b) {
        return rank_of(a) < rank_of(b) ? std::pair{a, b} : std::pair{b, a};
      };
      auto winner_of_last = [&]() {
        const GameRecord& g = d.games.back();
        const std::string& name = g.home_win() ? g.home_team : g.away_team;
        return static_cast<std::size_t>(
            std::find(spec.teams.begin(), spec.teams.end(), name) -
            spec.teams.begin());
      };

      int round = spec.rounds + 1;
      std::array<std::size_t, 4> qf_winners{};
      const std::array<std::pair<int, int>, 4> qf = {{{0, 7}, {1, 6}, {2, 5}, {3, 4}}};
      for (std::size_t m = 0; m < 4; ++m) {
        auto [h, a] = host_first(seed8[qf[m].first], seed8[qf[m].second]);
        play(h, a, round, true);
        qf_winners[m] = winner_of_last();
      }
      emit_ladder(round);
      ++round;
      std::array<std::size_t, 2> sf_winners{};
      for (std::size_t m = 0; m < 2; ++m) {
        auto [h, a] = host_first(qf_winners[m], qf_winners[3 - m]);
        play(h, a, round, true);
        sf_winners[m] = winner_of_last();
      }
      emit_ladder(round);
      ++round;
      {
        auto [h, a] = host_first(sf_winners[0], sf_winners[1]);
        play(h, a, round, true);
        emit_ladder(round);
      }
    }

    // Final standing of this season becomes the next season's ladder-last-year.
    auto st = detail::standings(spec.teams, wins, pf, pa);
    for (std::size_t rank = 0; rank < nt; ++rank) {
      d.prev_ladder.push_back(
          {season, spec.teams[st.order[rank]], static_cast<int>(rank + 1)});
    }
  }

  std::sort(d.games.begin(), d.games.end(),
            [](const GameRecord& a, const GameRecord& b) {
              return std::tie(a.season, a.round, a.date, a.game_id) <
                     std::tie(b.season, b.round, b.date, b.game_id);
            });
  std::sort(d.pis.begin(), d.pis.end(), [](const PiRecord& a, const PiRecord& b) {
    return std::tie(a.game_id, a.team) < std::tie(b.game_id, b.team);
  });
  std::sort(d.ladder.begin(), d.ladder.end(),
            [](const LadderRecord& a, const LadderRecord& b) {
              return std::tie(a.season, a.round, a.team) <
                     std::tie(b.season, b.round, b.team);
            });
  std::sort(d.prev_ladder.begin(), d.prev_ladder.end(),
            [](const PrevLadderRecord& a, const PrevLadderRecord& b) {
              return std::tie(a.season, a.team) < std::tie(b.season, b.team);
            });
  return d;
}

// ---------------------------------------------------------------------------
// Brute-force oracles
// ---------------------------------------------------------------------------

struct GridMleResult {
  std::vector<std::string> teams;  // non-reference teams, sorted
  std::vector<double> lambda;      // best grid point, aligned with teams
  double log_lik = 0.0;
};

/// Exhaustive grid search of the standard-BT likelihood for up to 3 teams,
/// reference strength pinned at 0. Deliberately naive: per-pair probabilities
/// are evaluated directly so the optimum check is independent of the Newton
/// path.
inline GridMleResult grid_mle_oracle(const PairCounts& pc,
                                     const std::string& reference,
                                     double step = 0.01, double range = 3.0) {
  const auto all_teams = teams_in(pc);
  if (all_teams.size() > 3) throw TooManyTeams(all_teams.size());
  if (std::find(all_teams.begin(), all_teams.end(), reference) == all_teams.end()) {
    throw UnknownTeam(reference);
  }

  GridMleResult best;
  for (const auto& t : all_teams) {
    if (t != reference) best.teams.push_back(t);
  }
  const std::size_t k = best.teams.size();

  auto loglik_at = [&](const std::vector<double>& lam) {
    auto strength = [&](const std::string& team) {
      if (team == reference) return 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        if (best.teams[i] == team) return lam[i];
      }
      return 0.0;
    };
    double ll = 0.0;
    for (const auto& [pair, w] : pc.counts) {
      const double t = strength(pair.first) - strength(pair.second);
      const double p = 1.0 / (1.0 + std::exp(-t));
      ll += w.first * std::log(p) + w.second * std::log(1.0 - p);
    }
    return ll;
  };

  const int steps = static_cast<int>(std::llround(2.0 * range / step));
  std::vector<double> lam(k, 0.0);
  best.lambda.assign(k, 0.0);
  best.log_lik = loglik_at(best.lambda);

  if (k == 0) return best;
  for (int i = 0; i <= steps; ++i) {
    lam[0] = -range + i * step;
    if (k == 1) {
      const double ll = loglik_at(lam);
      if (ll > best.log_lik) {
        best.log_lik = ll;
        best.lambda = lam;
      }
      continue;
    }
    for (int j = 0; j <= steps; ++j) {
      lam[1] = -range + j * step;
      const double ll = loglik_at(lam);
      if (ll > best.log_lik) {
        best.log_lik = ll;
        best.lambda = lam;
      }
    }
  }
  return best;
}

/// Central-difference gradient of the model log-likelihood, used to validate
/// the analytic score vector.
inline std::vector<double> finite_difference_gradient(std::span<const double> beta,
                                                      const DesignMatrix& design,
                                                      double h = 1e-6) {
  std::vector<double> grad(beta.size(), 0.0);
  std::vector<double> probe(beta.begin(), beta.end());
  for (std::size_t j = 0; j < beta.size(); ++j) {
    probe[j] = beta[j] + h;
    const double up = log_likelihood(probe, design);
    probe[j] = beta[j] - h;
    const double down = log_likelihood(probe, design);
    probe[j] = beta[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Random covariate design with known coefficients: x ~ N(0,1) entries,
/// y ~ Bernoulli(sigma(x . beta_true)). Used for screening power/size checks
/// and estimator sanity tests.
inline Design generate_design(std::size_t n,
                              const std::vector<std::string>& columns,
                              std::span<const double> beta_true,
                              std::uint64_t seed) {
  if (columns.size() != beta_true.size()) {
    throw DimensionMismatch("column/coefficient count mismatch");
  }
  Design design;
  design.columns = columns;
  design.rows.reserve(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    DesignRow row;
    row.game_id = "g" + std::to_string(i);
    row.season = 1;
    row.round = 1;
    row.x.resize(columns.size());
    double t = 0.0;
    for (std::size_t j = 0; j < columns.size(); ++j) {
      row.x[j] = rng.normal();
      t += row.x[j] * beta_true[j];
    }
    row.target = rng.bernoulli(sigmoid(t)) ? 1 : 0;
    design.rows.push_back(std::move(row));
  }
  return design;
}

}  // namespace btkit
