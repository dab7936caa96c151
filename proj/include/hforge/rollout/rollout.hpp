#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hforge/env/game.hpp"
#include "hforge/exec/guest.hpp"
#include "hforge/search/tree.hpp"

namespace hforge::rollout {

enum class GuestVerdict { accepted, rejected, error };
enum class EnvVerdict { legal, illegal };

std::string to_string(GuestVerdict v);  // "true" | "false" | "error"
std::string to_string(EnvVerdict v);    // "legal" | "illegal"

// Which guest call failed when guest_verdict is error. "load" covers
// compile, missing-function and import failures.
enum class FailedCall { none, load, propose_action, is_legal_action };
std::string to_string(FailedCall c);

struct FailureRecord {
  int env_index = 0;
  int step_index = 0;
  std::string board;
  std::string action;
  GuestVerdict guest_verdict = GuestVerdict::error;
  EnvVerdict env_verdict = EnvVerdict::illegal;
  FailedCall failed_call = FailedCall::none;
  std::optional<exec::ErrorKind> error_kind;
  std::string error_message;
  std::string traceback;
};

nlohmann::json to_json(const FailureRecord& f);

// One attempted step, as persisted to rollouts.jsonl.
struct StepRecord {
  int env_index = 0;
  int step_index = 0;
  std::string board_hash;
  std::string action;
  GuestVerdict guest_verdict = GuestVerdict::error;
  std::optional<EnvVerdict> env_verdict;  // absent when no action was produced
  std::optional<exec::ErrorKind> error_kind;
  std::string error_message;
};

nlohmann::json to_json(const StepRecord& s);

struct RolloutParams {
  int n_envs = 10;
  int max_steps = 1000;
  search::HeuristicMode mode = search::HeuristicMode::verifier;
  std::uint64_t base_seed = 0;
  int failure_sample_cap = 5;

  void validate() const;  // throws ArgumentError
};

struct RolloutReport {
  std::uint64_t steps_attempted = 0;
  std::uint64_t steps_legal = 0;
  std::uint64_t steps_illegal = 0;
  std::uint64_t exec_failures = 0;
  std::vector<FailureRecord> failures;  // sampled, at most failure_sample_cap
  std::vector<double> trajectory_heuristics;
  std::uint64_t episodes_completed = 0;
  // Every candidate failure before sampling, ordered by (env_index, step_index).
  std::vector<FailureRecord> failure_candidates;
  std::vector<StepRecord> steps;

  search::RolloutSummary summary() const;
};

// Stable serialization; byte-identical for identical runs.
nlohmann::json to_json(const RolloutReport& r);
std::string steps_jsonl(const RolloutReport& r);

// Seed of environment `env_index` for its first episode; later episodes use
// derive_seed(env_seed, episode).
std::uint64_t env_seed(std::uint64_t base_seed, int env_index);

// Runs `code` on params.n_envs environments in parallel, one guest session
// each. Each step: guest propose_action, shadow is_legal_action on the
// proposal, then the environment step. A worker stops at its first illegal
// step, guest failure, or at max_steps; legal episode ends auto-reset.
// Accepted-by-environment steps the guest rejected are kept as failure
// candidates without stopping the worker.
//
// Throws InfrastructureError when a session cannot be created.
RolloutReport run_rollouts(const std::string& code, const env::GameSpec& game,
                           const RolloutParams& params, const exec::ExecutorFactory& executor);

// Uniform sample without replacement of min(cap, size) records, returned in
// (env_index, step_index) order.
std::vector<FailureRecord> sample_failures(const std::vector<FailureRecord>& candidates, int cap,
                                           std::uint64_t rng_seed);

}  // namespace hforge::rollout
