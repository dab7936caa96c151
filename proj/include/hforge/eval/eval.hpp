#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hforge/env/game.hpp"
#include "hforge/harness/harness.hpp"

namespace hforge::eval {

enum class Outcome { win, draw, loss };
std::string to_string(Outcome o);

struct MatchRecord {
  int match_index = 0;
  std::uint64_t seed = 0;
  int agent_seat = 0;
  int turns = 0;
  bool illegal = false;
  int offender = -1;  // seat that played the illegal action
  double reward = 0.0;  // the evaluated agent's terminal reward
  Outcome outcome = Outcome::draw;
};

nlohmann::json to_json(const MatchRecord& m);

struct EvalReport {
  std::string game_id;
  std::string agent;
  std::string opponent;  // empty for 1P
  int matches = 0;
  int wins = 0;
  int draws = 0;
  int losses = 0;
  double mean_reward = 0.0;
  double legal_action_rate = 0.0;
  std::vector<MatchRecord> records;
};

// Worker-pool size; 0 picks min(hardware threads, 8).
struct PoolConfig {
  int workers = 0;
};

// Per-turn agent seed: derive_seed(match_seed, seat, ply).
std::uint64_t turn_seed(std::uint64_t match_seed, int seat, int ply);

// Fraction of emitted actions judged legal over `seeds` rollouts of `steps`
// actions with auto-reset. Seed s uses base_seed + s. An illegal action ends
// that seed's rollout. In 2P games the agent plays both seats.
double legal_action_rate(const harness::AgentFactory& agent, const env::GameSpec& game, int steps = 1000,
                         int seeds = 10, std::uint64_t base_seed = 0, PoolConfig pool = {});

struct OnePlayerResult {
  double mean_reward = 0.0;
  std::vector<MatchRecord> records;
};

// Match i uses seed base_seed + i. An illegal action scores 0. Throws
// ArgumentError for n <= 0 or a 2P game.
OnePlayerResult run_matches_1p(const harness::AgentFactory& agent, const env::GameSpec& game, int n = 20,
                               std::uint64_t base_seed = 0, PoolConfig pool = {});

struct TwoPlayerResult {
  int wins = 0;
  int draws = 0;
  int losses = 0;
  double mean_reward = 0.0;
  std::vector<MatchRecord> records;
};

// Paired schedule: for j < n/2, match j seats agent_a first and match n/2 + j
// seats agent_b first, both with seed base_seed + j. Counts are from
// agent_a's side; an illegal action loses. Throws ArgumentError for n <= 0,
// odd n or a 1P game.
TwoPlayerResult run_matches_2p(const harness::AgentFactory& agent_a, const harness::AgentFactory& agent_b,
                               const env::GameSpec& game, int n = 40, std::uint64_t base_seed = 0,
                               PoolConfig pool = {});

// 1P outcome used for the W/D/L columns: reward 1 wins, reward 0 loses,
// anything between is a draw.
Outcome one_player_outcome(double reward);

// report.csv and report.md under dir. Throws FilesystemError.
void emit_report(const std::vector<EvalReport>& reports, const std::filesystem::path& dir);

std::string render_report_csv(const std::vector<EvalReport>& reports);
std::string render_report_md(const std::vector<EvalReport>& reports);

}  // namespace hforge::eval
