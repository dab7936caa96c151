#include <gtest/gtest.h>

#include <array>
#include <atomic>
#include <random>

#include "hforge/env/registry.hpp"
#include "hforge/errors.hpp"
#include "hforge/eval/eval.hpp"
#include "hforge/exec/scripted.hpp"
#include "support/test_support.hpp"

using namespace hforge;
using hforge::testing::random_legal_agent;

namespace {

harness::AgentFactory oracle_agent(const std::string& game) {
  return harness::harness_agent(env::game_spec(game), exec::scripted_executor(), exec::oracle_fixture_code(),
                                harness::HarnessMode{});
}

harness::AgentFactory constant_agent(const std::string& action) {
  return harness::function_agent([action](const env::Observation&, std::uint64_t) { return action; });
}

// Exact first-player win probability of uniformly random TicTacToe play,
// by enumerating every game tree branch.
double ttt_random_first_player_win(std::array<char, 9>& b, char turn) {
  static constexpr int kLines[8][3] = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {0, 3, 6},
                                       {1, 4, 7}, {2, 5, 8}, {0, 4, 8}, {2, 4, 6}};
  std::vector<int> empty;
  for (int i = 0; i < 9; ++i)
    if (b[static_cast<std::size_t>(i)] == '.') empty.push_back(i);
  if (empty.empty()) return 0.0;
  double p = 0.0;
  for (int cell : empty) {
    b[static_cast<std::size_t>(cell)] = turn;
    bool won = false;
    for (const auto& l : kLines)
      won |= b[l[0]] == turn && b[l[1]] == turn && b[l[2]] == turn;
    if (won) p += turn == 'X' ? 1.0 : 0.0;
    else p += ttt_random_first_player_win(b, turn == 'X' ? 'O' : 'X');
    b[static_cast<std::size_t>(cell)] = '.';
  }
  return p / static_cast<double>(empty.size());
}

double first_seat_win_fraction(const eval::TwoPlayerResult& r) {
  int first_wins = 0;
  for (const auto& m : r.records)
    first_wins += (m.agent_seat == 0 && m.outcome == eval::Outcome::win) ||
                  (m.agent_seat == 1 && m.outcome == eval::Outcome::loss);
  return static_cast<double>(first_wins) / static_cast<double>(r.records.size());
}

}  // namespace

TEST(TicTacToeOracle, RandomPlayFirstPlayerWinProbability) {
  std::array<char, 9> b;
  b.fill('.');
  const double p = ttt_random_first_player_win(b, 'X');
  EXPECT_NEAR(p, 0.5849, 0.0001);

  // Monte Carlo through the environment agrees with the enumeration.
  std::mt19937_64 rng(1);
  int wins = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    auto e = env::create_env("tictactoe", false);
    e->reset(0);
    for (;;) {
      auto legal = e->oracle_legal_actions();
      auto r = e->step(legal[rng() % legal.size()]);
      if (r.done) {
        wins += r.rewards[0] == 1.0;
        break;
      }
    }
  }
  EXPECT_NEAR(static_cast<double>(wins) / n, p, 0.015);
}

TEST(LegalActionRate, OracleFixtureIsExactlyOneOnEveryGame) {
  for (const auto& g : env::registered_games())
    EXPECT_EQ(eval::legal_action_rate(oracle_agent(g.game_id), g, 1000, 10), 1.0) << g.game_id;
}

TEST(LegalActionRate, AlwaysIllegalIsZero) {
  EXPECT_EQ(eval::legal_action_rate(constant_agent("[999]"), env::game_spec("frozenlake")), 0.0);
}

TEST(LegalActionRate, MatchesAReplayOfAnAlternatingAgent) {
  // Legal on even calls, illegal on odd calls; fresh agent per seed.
  auto make = [](std::uint64_t, int) {
    auto calls = std::make_shared<int>(0);
    return std::make_unique<harness::FunctionAgent>([calls](const env::Observation& obs, std::uint64_t) {
      if ((*calls)++ % 2 == 1) return std::string("[999]");
      return exec::legal_actions_from_board("frozenlake", obs.text)->front();
    });
  };
  // Replay: each seed plays one legal then one illegal action.
  int legal = 0, attempted = 0;
  for (int s = 0; s < 10; ++s) {
    auto e = env::create_env("frozenlake", false);
    auto obs = e->reset(static_cast<std::uint64_t>(s));
    auto agent = make(0, 0);
    for (int step = 0; step < 1000; ++step) {
      ++attempted;
      auto r = e->step(agent->act(obs, 0));
      if (!r.legal) break;
      ++legal;
      obs = r.done ? e->reset(static_cast<std::uint64_t>(s) + 1000) : r.observation;
    }
  }
  EXPECT_EQ(eval::legal_action_rate(make, env::game_spec("frozenlake"), 1000, 10),
            static_cast<double>(legal) / attempted);
}

TEST(OnePlayer, BinarySearchAlwaysWinsGuessTheNumber) {
  auto agent = harness::function_agent([](const env::Observation& obs, std::uint64_t) {
    int lo = 1, hi = 20;
    for (const auto& line : split_lines(obs.text)) {
      if (line.find("-> the secret number is") == std::string::npos) continue;
      int g = std::stoi(line.substr(1));
      if (line.find("higher") != std::string::npos) lo = std::max(lo, g + 1);
      else hi = std::min(hi, g - 1);
    }
    return "[" + std::to_string((lo + hi) / 2) + "]";
  });
  auto r = eval::run_matches_1p(agent, env::game_spec("guessthenumber"), 20);
  EXPECT_EQ(r.mean_reward, 1.0);
  for (const auto& m : r.records) EXPECT_EQ(m.outcome, eval::Outcome::win);
}

TEST(OnePlayer, IllegalScoresZeroAndArgumentsAreChecked) {
  auto r = eval::run_matches_1p(constant_agent("[999]"), env::game_spec("towerofhanoi"), 20);
  EXPECT_EQ(r.mean_reward, 0.0);
  EXPECT_THROW(eval::run_matches_1p(constant_agent("[1]"), env::game_spec("towerofhanoi"), 0), ArgumentError);
  EXPECT_THROW(eval::run_matches_1p(constant_agent("[1]"), env::game_spec("nim"), 20), ArgumentError);
  EXPECT_EQ(eval::one_player_outcome(1.0), eval::Outcome::win);
  EXPECT_EQ(eval::one_player_outcome(0.0), eval::Outcome::loss);
  EXPECT_EQ(eval::one_player_outcome(0.4), eval::Outcome::draw);
}

TEST(OnePlayer, MeanRewardInUnitIntervalForOracleOnAll1PGames) {
  for (const auto& g : env::registered_games()) {
    if (g.players != 1) continue;
    auto r = eval::run_matches_1p(oracle_agent(g.game_id), g, 20);
    EXPECT_GE(r.mean_reward, 0.0);
    EXPECT_LE(r.mean_reward, 1.0);
  }
}

TEST(TwoPlayer, FirstMoverWinsGivesAnEvenSplit) {
  auto nim = harness::function_agent(
      [](const env::Observation& obs, std::uint64_t) { return hforge::testing::optimal_nim_move(obs.text); });
  auto r = eval::run_matches_2p(nim, nim, env::game_spec("nim"), 40);
  EXPECT_EQ(r.wins, 20);
  EXPECT_EQ(r.draws, 0);
  EXPECT_EQ(r.losses, 20);
  for (const auto& m : r.records) EXPECT_EQ(m.outcome, m.agent_seat == 0 ? eval::Outcome::win : eval::Outcome::loss);
}

TEST(TwoPlayer, PairedScheduleSharesSeedsAcrossSeats) {
  auto r = eval::run_matches_2p(random_legal_agent("tictactoe", 1), random_legal_agent("tictactoe", 2),
                                env::game_spec("tictactoe"), 10, 100);
  ASSERT_EQ(r.records.size(), 10u);
  for (int j = 0; j < 5; ++j) {
    EXPECT_EQ(r.records[static_cast<std::size_t>(j)].agent_seat, 0);
    EXPECT_EQ(r.records[static_cast<std::size_t>(j + 5)].agent_seat, 1);
    EXPECT_EQ(r.records[static_cast<std::size_t>(j)].seed, 100u + static_cast<std::uint64_t>(j));
    EXPECT_EQ(r.records[static_cast<std::size_t>(j + 5)].seed, 100u + static_cast<std::uint64_t>(j));
  }
  EXPECT_EQ(r.wins + r.draws + r.losses, 10);
}

TEST(TwoPlayer, SideSwapMirrorsCounts) {
  auto a = random_legal_agent("tictactoe", 1);
  auto b = random_legal_agent("tictactoe", 2);
  const auto& g = env::game_spec("tictactoe");
  auto ab = eval::run_matches_2p(a, b, g, 40, 7);
  auto ba = eval::run_matches_2p(b, a, g, 40, 7);
  EXPECT_EQ(ab.wins, ba.losses);
  EXPECT_EQ(ab.draws, ba.draws);
  EXPECT_EQ(ab.losses, ba.wins);
}

TEST(TwoPlayer, IdenticalDeterministicAgentsAreSymmetric) {
  auto a = harness::function_agent([](const env::Observation& obs, std::uint64_t) {
    return exec::legal_actions_from_board("tictactoe", obs.text)->front();
  });
  auto r = eval::run_matches_2p(a, a, env::game_spec("tictactoe"), 40);
  EXPECT_EQ(r.wins, r.losses);
}

TEST(TwoPlayer, RandomTicTacToeFirstPlayerWinRate) {
  std::array<char, 9> b;
  b.fill('.');
  const double oracle = ttt_random_first_player_win(b, 'X');
  auto r = eval::run_matches_2p(random_legal_agent("tictactoe", 1), random_legal_agent("tictactoe", 2),
                                env::game_spec("tictactoe"), 400, 0);
  EXPECT_NEAR(first_seat_win_fraction(r), oracle, 0.06);
}

TEST(TwoPlayer, IllegalActionLosesAndArgumentsAreChecked) {
  auto bad = constant_agent("[9 9]");
  auto good = random_legal_agent("nim", 3);
  auto r = eval::run_matches_2p(bad, good, env::game_spec("nim"), 4);
  EXPECT_EQ(r.losses, 4);
  for (const auto& m : r.records) {
    EXPECT_TRUE(m.illegal);
    EXPECT_EQ(m.offender, m.agent_seat);
  }
  EXPECT_THROW(eval::run_matches_2p(good, good, env::game_spec("nim"), 3), ArgumentError);
  EXPECT_THROW(eval::run_matches_2p(good, good, env::game_spec("nim"), 0), ArgumentError);
  EXPECT_THROW(eval::run_matches_2p(good, good, env::game_spec("frozenlake"), 4), ArgumentError);
}

TEST(TwoPlayer, WorkerCountDoesNotChangeResults) {
  auto a = random_legal_agent("tictactoe", 1);
  auto b = random_legal_agent("tictactoe", 2);
  const auto& g = env::game_spec("tictactoe");
  auto one = eval::run_matches_2p(a, b, g, 40, 3, {1});
  auto four = eval::run_matches_2p(a, b, g, 40, 3, {4});
  ASSERT_EQ(one.records.size(), four.records.size());
  for (std::size_t i = 0; i < one.records.size(); ++i)
    EXPECT_EQ(eval::to_json(one.records[i]), eval::to_json(four.records[i]));
}

TEST(Report, FormatsWinRateAndHeaders) {
  eval::EvalReport r;
  r.game_id = "tictactoe";
  r.agent = "harness";
  r.opponent = "llm";
  r.matches = 16;
  r.wins = 9;
  r.draws = 2;
  r.losses = 5;
  r.mean_reward = 0.25;
  r.legal_action_rate = 1.0;
  auto md = eval::render_report_md({r});
  EXPECT_NE(md.find("| 56.3% |"), std::string::npos);
  auto csv = eval::render_report_csv({r});
  EXPECT_EQ(csv,
            "game_id,agent,matches,wins,draws,losses,mean_reward,legal_action_rate\n"
            "tictactoe,harness,16,9,2,5,0.2500,1.0000\n");
}

TEST(Report, EmptyAndDeterministic) {
  hforge::testing::TempDir a, b;
  eval::emit_report({}, a.path());
  EXPECT_EQ(read_file(a / "report.csv"), "game_id,agent,matches,wins,draws,losses,mean_reward,legal_action_rate\n");
  EXPECT_NE(read_file(a / "report.md").find("| game | agent |"), std::string::npos);
  eval::EvalReport r;
  r.game_id = "nim";
  r.agent = "x";
  r.opponent = "y";
  r.matches = 2;
  r.wins = 1;
  r.losses = 1;
  eval::emit_report({r}, a.path());
  eval::emit_report({r}, b.path());
  EXPECT_EQ(hforge::testing::snapshot_dir(a.path()), hforge::testing::snapshot_dir(b.path()));
}

TEST(Report, UnwritablePathIsAFilesystemError) {
  EXPECT_THROW(eval::emit_report({}, "/proc/hforge-cannot-write"), FilesystemError);
}
