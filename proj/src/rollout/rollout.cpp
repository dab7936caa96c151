#include "hforge/rollout/rollout.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "hforge/env/registry.hpp"
#include "hforge/errors.hpp"
#include "hforge/util.hpp"

namespace hforge::rollout {
namespace {

using nlohmann::json;

json optional_kind(const std::optional<exec::ErrorKind>& k) {
  return k ? json(std::string(exec::to_string(*k))) : json(nullptr);
}

struct WorkerResult {
  std::uint64_t attempted = 0, legal = 0, illegal = 0, exec_failures = 0, episodes = 0;
  std::vector<FailureRecord> candidates;
  std::vector<StepRecord> steps;
  std::vector<double> trajectories;
};

// Final normalized reward of a finished episode, seen by the hypothesis.
// Self-play covers both seats, so a 2P outcome maps to player 0's view.
double episode_reward(const env::GameSpec& game, double reward_p0) {
  if (game.players == 2) return (1.0 + reward_p0) / 2.0;
  return std::clamp(reward_p0, 0.0, 1.0);
}

class Worker {
 public:
  Worker(const std::string& code, const env::GameSpec& game, const RolloutParams& params,
         int env_index, exec::GuestSession& session)
      : code_(code), game_(game), params_(params), env_index_(env_index), session_(session) {}

  WorkerResult run() {
    auto env = env::create_env(game_.game_id, false);
    const auto seed = env_seed(params_.base_seed, env_index_);
    int episode = 0;
    env->reset(seed);

    auto loaded = session_.load_code(code_);
    if (!loaded.ok) {
      fail_exec(env->observe().text, 0, "", FailedCall::load, loaded, std::nullopt);
      return std::move(out_);
    }

    double episode_return = 0.0;
    for (int step = 0; step < params_.max_steps; ++step) {
      const std::string board = env->observe().text;
      auto proposal = session_.propose_action(board, derive_seed(seed, static_cast<std::uint64_t>(step)));
      if (!proposal.ok) {
        fail_exec(board, step, "", FailedCall::propose_action, proposal, std::nullopt);
        break;
      }
      const std::string action = *proposal.action_value();
      auto check = session_.is_legal_action(board, action);
      if (!check.ok) {
        auto token = env::first_bracketed_token(action);
        auto verdict = token && env->is_legal(*token) ? EnvVerdict::legal : EnvVerdict::illegal;
        fail_exec(board, step, action, FailedCall::is_legal_action, check, verdict);
        break;
      }
      const auto guest = *check.verdict_value() ? GuestVerdict::accepted : GuestVerdict::rejected;
      auto outcome = env->step(action);
      ++out_.attempted;
      const auto verdict = outcome.legal ? EnvVerdict::legal : EnvVerdict::illegal;
      out_.steps.push_back({env_index_, step, hex_hash(board), action, guest, verdict, std::nullopt, {}});
      if (!outcome.legal) {
        ++out_.illegal;
        out_.candidates.push_back({env_index_, step, board, action, guest, verdict, FailedCall::none,
                                   std::nullopt, "the environment rejected the action", {}});
        if (params_.mode == search::HeuristicMode::policy)
          out_.trajectories.push_back(search::trajectory_contribution(true, 0.0));
        break;
      }
      ++out_.legal;
      if (guest == GuestVerdict::rejected)
        out_.candidates.push_back({env_index_, step, board, action, guest, verdict, FailedCall::none,
                                   std::nullopt, "is_legal_action rejected a legal action", {}});
      episode_return += outcome.reward_for(0);
      if (outcome.done) {
        ++out_.episodes;
        if (params_.mode == search::HeuristicMode::policy)
          out_.trajectories.push_back(
              search::trajectory_contribution(false, episode_reward(game_, episode_return)));
        episode_return = 0.0;
        env->reset(derive_seed(seed, static_cast<std::uint64_t>(++episode)));
      }
    }
    return std::move(out_);
  }

 private:
  void fail_exec(const std::string& board, int step, const std::string& action, FailedCall call,
                 const exec::GuestResult& r, std::optional<EnvVerdict> verdict) {
    ++out_.attempted;
    ++out_.exec_failures;
    out_.steps.push_back({env_index_, step, hex_hash(board), action, GuestVerdict::error, verdict,
                          r.error_kind, r.error_message});
    out_.candidates.push_back({env_index_, step, board, action, GuestVerdict::error,
                               verdict.value_or(EnvVerdict::illegal), call, r.error_kind,
                               r.error_message, r.traceback});
    if (params_.mode == search::HeuristicMode::policy)
      out_.trajectories.push_back(search::trajectory_contribution(true, 0.0));
  }

  const std::string& code_;
  const env::GameSpec& game_;
  const RolloutParams& params_;
  int env_index_;
  exec::GuestSession& session_;
  WorkerResult out_;
};

}  // namespace

std::string to_string(GuestVerdict v) {
  switch (v) {
    case GuestVerdict::accepted: return "true";
    case GuestVerdict::rejected: return "false";
    case GuestVerdict::error: return "error";
  }
  return "error";
}

std::string to_string(EnvVerdict v) { return v == EnvVerdict::legal ? "legal" : "illegal"; }

std::string to_string(FailedCall c) {
  switch (c) {
    case FailedCall::none: return "none";
    case FailedCall::load: return "load";
    case FailedCall::propose_action: return "propose_action";
    case FailedCall::is_legal_action: return "is_legal_action";
  }
  return "none";
}

json to_json(const FailureRecord& f) {
  return {{"env_index", f.env_index},
          {"step_index", f.step_index},
          {"board", f.board},
          {"action", f.action},
          {"guest_verdict", to_string(f.guest_verdict)},
          {"env_verdict", to_string(f.env_verdict)},
          {"failed_call", to_string(f.failed_call)},
          {"error_kind", optional_kind(f.error_kind)},
          {"error_message", f.error_message},
          {"traceback", f.traceback}};
}

json to_json(const StepRecord& s) {
  return {{"env_index", s.env_index},
          {"step_index", s.step_index},
          {"board_hash", s.board_hash},
          {"action", s.action},
          {"guest_verdict", to_string(s.guest_verdict)},
          {"env_verdict", s.env_verdict ? json(to_string(*s.env_verdict)) : json(nullptr)},
          {"error_kind", optional_kind(s.error_kind)},
          {"error_message", s.error_message}};
}

void RolloutParams::validate() const {
  if (n_envs <= 0 || max_steps <= 0 || failure_sample_cap <= 0)
    throw ArgumentError("rollout counts must be positive");
}

search::RolloutSummary RolloutReport::summary() const {
  return {steps_attempted, steps_legal, exec_failures, trajectory_heuristics};
}

json to_json(const RolloutReport& r) {
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back(to_json(f));
  return {{"steps_attempted", r.steps_attempted},
          {"steps_legal", r.steps_legal},
          {"steps_illegal", r.steps_illegal},
          {"exec_failures", r.exec_failures},
          {"episodes_completed", r.episodes_completed},
          {"trajectory_heuristics", r.trajectory_heuristics},
          {"failure_candidates", r.failure_candidates.size()},
          {"failures", failures}};
}

std::string steps_jsonl(const RolloutReport& r) {
  std::string out;
  for (const auto& s : r.steps) out += to_json(s).dump() + "\n";
  return out;
}

std::uint64_t env_seed(std::uint64_t base_seed, int env_index) {
  return base_seed + static_cast<std::uint64_t>(env_index);
}

RolloutReport run_rollouts(const std::string& code, const env::GameSpec& game,
                           const RolloutParams& params, const exec::ExecutorFactory& executor) {
  if (code.empty()) throw ArgumentError("guest code must not be empty");
  params.validate();
  const auto n = static_cast<std::size_t>(params.n_envs);

  // Sessions are created up front so start-up failures surface before any
  // worker runs.
  std::vector<std::unique_ptr<exec::GuestSession>> sessions;
  for (std::size_t i = 0; i < n; ++i) {
    auto s = executor(game);
    if (!s) throw InfrastructureError("executor returned no session");
    sessions.push_back(std::move(s));
  }

  std::vector<WorkerResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < n; ++i) {
    threads.emplace_back([&, i] {
      try {
        results[i] = Worker(code, game, params, static_cast<int>(i), *sessions[i]).run();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  RolloutReport report;
  for (auto& w : results) {
    report.steps_attempted += w.attempted;
    report.steps_legal += w.legal;
    report.steps_illegal += w.illegal;
    report.exec_failures += w.exec_failures;
    report.episodes_completed += w.episodes;
    report.trajectory_heuristics.insert(report.trajectory_heuristics.end(), w.trajectories.begin(),
                                        w.trajectories.end());
    std::move(w.candidates.begin(), w.candidates.end(), std::back_inserter(report.failure_candidates));
    std::move(w.steps.begin(), w.steps.end(), std::back_inserter(report.steps));
  }
  report.failures = sample_failures(report.failure_candidates, params.failure_sample_cap,
                                    derive_seed(params.base_seed, 0xfa11ULL));
  return report;
}

std::vector<FailureRecord> sample_failures(const std::vector<FailureRecord>& candidates, int cap,
                                           std::uint64_t rng_seed) {
  const std::size_t k = std::min(candidates.size(), static_cast<std::size_t>(std::max(cap, 0)));
  std::vector<std::size_t> idx(candidates.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(rng_seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::vector<FailureRecord> out;
  for (auto i : idx) out.push_back(candidates[i]);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.env_index, a.step_index) < std::tie(b.env_index, b.step_index);
  });
  return out;
}

}  // namespace hforge::rollout
