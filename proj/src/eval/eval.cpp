#include "hforge/eval/eval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "hforge/env/registry.hpp"
#include "hforge/errors.hpp"
#include "hforge/util.hpp"

namespace hforge::eval {
namespace {

using nlohmann::json;

// Every built-in game terminates far below this; it only guards agents
// facing a misbehaving custom environment.
constexpr int kMaxPlies = 100000;

int pool_size(PoolConfig pool, int jobs) {
  int w = pool.workers > 0 ? pool.workers
                           : std::min(8, static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  return std::max(1, std::min(w, jobs));
}

// Runs fn(i) for i in [0, n) on a bounded pool; results go to caller-owned
// slots, so output order never depends on scheduling.
template <typename Fn>
void parallel_for(int n, PoolConfig pool, Fn fn) {
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < pool_size(pool, n); ++t) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string rate_percent(int part, int whole) {
  if (whole <= 0) return "0.0%";
  return format_fixed(100.0 * part / whole, 1) + "%";
}

std::string bar(int part, int whole) {
  constexpr int kWidth = 20;
  int filled = whole > 0 ? static_cast<int>(static_cast<double>(part) * kWidth / whole + 0.5) : 0;
  return std::string(static_cast<std::size_t>(filled), '#') + std::string(static_cast<std::size_t>(kWidth - filled), '.');
}

}  // namespace

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::win: return "win";
    case Outcome::draw: return "draw";
    case Outcome::loss: return "loss";
  }
  return "draw";
}

json to_json(const MatchRecord& m) {
  return {{"match_index", m.match_index}, {"seed", m.seed},         {"agent_seat", m.agent_seat},
          {"turns", m.turns},             {"illegal", m.illegal},   {"offender", m.offender},
          {"reward", m.reward},           {"outcome", to_string(m.outcome)}};
}

std::uint64_t turn_seed(std::uint64_t match_seed, int seat, int ply) {
  return derive_seed(match_seed, static_cast<std::uint64_t>(seat), static_cast<std::uint64_t>(ply));
}

Outcome one_player_outcome(double reward) {
  if (reward >= 1.0) return Outcome::win;
  if (reward <= 0.0) return Outcome::loss;
  return Outcome::draw;
}

double legal_action_rate(const harness::AgentFactory& agent, const env::GameSpec& game, int steps, int seeds,
                         std::uint64_t base_seed, PoolConfig pool) {
  if (steps <= 0 || seeds <= 0) throw ArgumentError("steps and seeds must be positive");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> counts(static_cast<std::size_t>(seeds));
  parallel_for(seeds, pool, [&](int s) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
    auto env = env::create_env(game.game_id, false);
    std::vector<std::unique_ptr<harness::Agent>> seats;
    for (int p = 0; p < game.players; ++p) seats.push_back(agent(seed, p));
    env->reset(seed);
    std::uint64_t attempted = 0, legal = 0, episode = 0;
    for (int step = 0; step < steps; ++step) {
      auto obs = env->observe();
      auto reply = seats[static_cast<std::size_t>(obs.player_id)]->act(obs, turn_seed(seed, obs.player_id, step));
      auto out = env->step(reply);
      ++attempted;
      if (!out.legal) break;
      ++legal;
      if (out.done) {
        env->reset(derive_seed(seed, ++episode));
      }
    }
    counts[static_cast<std::size_t>(s)] = {attempted, legal};
  });
  std::uint64_t attempted = 0, legal = 0;
  for (auto [a, l] : counts) {
    attempted += a;
    legal += l;
  }
  return attempted == 0 ? 0.0 : static_cast<double>(legal) / static_cast<double>(attempted);
}

OnePlayerResult run_matches_1p(const harness::AgentFactory& agent, const env::GameSpec& game, int n,
                               std::uint64_t base_seed, PoolConfig pool) {
  if (n <= 0) throw ArgumentError("match count must be positive");
  if (game.players != 1) throw ArgumentError(game.game_id + " is not a 1-player game");
  OnePlayerResult result;
  result.records.resize(static_cast<std::size_t>(n));
  parallel_for(n, pool, [&](int i) {
    MatchRecord m;
    m.match_index = i;
    m.seed = base_seed + static_cast<std::uint64_t>(i);
    auto env = env::create_env(game.game_id, false);
    auto player = agent(m.seed, 0);
    auto obs = env->reset(m.seed);
    for (int ply = 0; ply < kMaxPlies; ++ply) {
      auto out = env->step(player->act(obs, turn_seed(m.seed, 0, ply)));
      ++m.turns;
      if (!out.legal) {
        m.illegal = true;
        m.offender = 0;
        m.reward = 0.0;
        break;
      }
      if (out.done) {
        m.reward = std::clamp(out.reward_for(0), 0.0, 1.0);
        break;
      }
      obs = out.observation;
    }
    m.outcome = one_player_outcome(m.reward);
    result.records[static_cast<std::size_t>(i)] = m;
  });
  double total = 0.0;
  for (const auto& m : result.records) total += m.reward;
  result.mean_reward = total / n;
  return result;
}

TwoPlayerResult run_matches_2p(const harness::AgentFactory& agent_a, const harness::AgentFactory& agent_b,
                               const env::GameSpec& game, int n, std::uint64_t base_seed, PoolConfig pool) {
  if (n <= 0 || n % 2 != 0) throw ArgumentError("match count must be positive and even");
  if (game.players != 2) throw ArgumentError(game.game_id + " is not a 2-player game");
  const int half = n / 2;
  TwoPlayerResult result;
  result.records.resize(static_cast<std::size_t>(n));
  parallel_for(n, pool, [&](int i) {
    MatchRecord m;
    m.match_index = i;
    m.seed = base_seed + static_cast<std::uint64_t>(i % half);
    m.agent_seat = i < half ? 0 : 1;
    auto env = env::create_env(game.game_id, false);
    std::unique_ptr<harness::Agent> seats[2];
    seats[m.agent_seat] = agent_a(m.seed, m.agent_seat);
    seats[1 - m.agent_seat] = agent_b(m.seed, 1 - m.agent_seat);
    auto obs = env->reset(m.seed);
    for (int ply = 0; ply < kMaxPlies; ++ply) {
      const int seat = obs.player_id;
      auto out = env->step(seats[seat]->act(obs, turn_seed(m.seed, seat, ply)));
      ++m.turns;
      if (!out.legal) {
        m.illegal = true;
        m.offender = seat;
      }
      if (out.done) {
        m.reward = out.reward_for(m.agent_seat);
        break;
      }
      obs = out.observation;
    }
    m.outcome = m.reward > 0 ? Outcome::win : m.reward < 0 ? Outcome::loss : Outcome::draw;
    result.records[static_cast<std::size_t>(i)] = m;
  });
  double total = 0.0;
  for (const auto& m : result.records) {
    total += m.reward;
    switch (m.outcome) {
      case Outcome::win: ++result.wins; break;
      case Outcome::draw: ++result.draws; break;
      case Outcome::loss: ++result.losses; break;
    }
  }
  result.mean_reward = total / n;
  return result;
}

std::string render_report_csv(const std::vector<EvalReport>& reports) {
  std::string out = "game_id,agent,matches,wins,draws,losses,mean_reward,legal_action_rate\n";
  for (const auto& r : reports) {
    out += r.game_id + "," + r.agent + "," + std::to_string(r.matches) + "," + std::to_string(r.wins) + "," +
           std::to_string(r.draws) + "," + std::to_string(r.losses) + "," + format_fixed(r.mean_reward, 4) +
           "," + format_fixed(r.legal_action_rate, 4) + "\n";
  }
  return out;
}

std::string render_report_md(const std::vector<EvalReport>& reports) {
  std::string out = "# Evaluation report\n\n";
  out += "## Win / draw / loss\n\n";
  out += "| game | agent | opponent | matches | wins | draws | losses | win rate | wins bar |\n";
  out += "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    if (r.opponent.empty()) continue;
    out += "| " + r.game_id + " | " + r.agent + " | " + r.opponent + " | " + std::to_string(r.matches) + " | " +
           std::to_string(r.wins) + " | " + std::to_string(r.draws) + " | " + std::to_string(r.losses) + " | " +
           rate_percent(r.wins, r.matches) + " | `" + bar(r.wins, r.matches) + "` |\n";
  }
  out += "\n## Mean reward and legal action rate\n\n";
  out += "| game | agent | matches | mean reward | legal action rate |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    out += "| " + r.game_id + " | " + r.agent + " | " + std::to_string(r.matches) + " | " +
           format_fixed(r.mean_reward, 4) + " | " + format_fixed(r.legal_action_rate, 4) + " |\n";
  }
  return out;
}

void emit_report(const std::vector<EvalReport>& reports, const std::filesystem::path& dir) {
  write_file(dir / "report.csv", render_report_csv(reports));
  write_file(dir / "report.md", render_report_md(reports));
}

}  // namespace hforge::eval
