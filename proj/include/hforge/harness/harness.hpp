#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hforge/env/game.hpp"
#include "hforge/exec/guest.hpp"
#include "hforge/llm/client.hpp"

namespace hforge::harness {

enum class ModeKind { action_verifier, action_filter, policy };

std::string to_string(ModeKind kind);
ModeKind mode_kind_from_string(const std::string& name);  // throws ArgumentError

struct HarnessMode {
  ModeKind kind = ModeKind::policy;
  int retry_budget = 4;
  int filter_samples = 16;

  void validate() const;  // throws ArgumentError
};

// Emitted when the agent could not produce an action; it has no bracketed
// token, so the environment scores it illegal.
inline constexpr std::string_view kNoAction = "(no action: harness failure)";

// Action text used for a model reply without <move> tags.
inline constexpr std::string_view kMissingMoveTags = "(missing <move> tags)";

std::string illegal_move_warning(const std::string& action);

// One agent turn, as written to the match transcript.
struct TurnRecord {
  int turn = 0;
  int player_id = 0;
  std::string prompt_hash;  // last prompt sent, empty when no LLM call
  std::vector<std::string> proposals;
  std::vector<std::string> verdicts;  // "true" | "false" | "error: <kind>"
  std::string action;
  bool fallback = false;
  int llm_calls = 0;
  std::string error;
};

nlohmann::json to_json(const TurnRecord& r);

struct ActResult {
  std::string action;
  TurnRecord record;
};

// The LLM proposes; guest is_legal_action gates. Each rejection appends a
// warning naming the rejected action to the prompt. After retry_budget
// rejections the guest propose_action result is played. Throws
// HarnessFailure when that fallback fails as well.
ActResult act_verifier(exec::GuestSession& session, llm::LLMClient& llm, const std::string& observation,
                       int player_id, int retry_budget, std::uint64_t seed, int turn = 0);

// filter_samples guest proposals with distinct seeds, deduplicated in
// first-seen order; the LLM picks among two or more candidates. A choice
// outside the set is replaced by a uniformly random candidate. Throws
// HarnessFailure when every proposal failed.
ActResult act_filter(exec::GuestSession& session, llm::LLMClient& llm, const std::string& observation,
                     int player_id, int filter_samples, std::uint64_t seed, int turn = 0);

// Guest propose_action verbatim; never calls an LLM. Throws HarnessFailure
// carrying the guest traceback on error.
ActResult act_policy(exec::GuestSession& session, const std::string& observation, std::uint64_t seed,
                     int turn = 0);

// Prompt used by act_filter.
std::string build_filter_prompt(int player_id, const std::string& observation,
                                const std::vector<std::string>& candidates);

class Agent {
 public:
  virtual ~Agent() = default;
  // Returns the reply text sent to the environment.
  virtual std::string act(const env::Observation& obs, std::uint64_t seed) = 0;
};

// Builds a fresh agent for one match seat.
using AgentFactory = std::function<std::unique_ptr<Agent>(std::uint64_t match_seed, int seat)>;

struct AgentSpec {
  std::string name;
  AgentFactory factory;
};

// Guest-code agent in one of the three harness modes. Harness failures are
// recorded and turned into kNoAction.
class HarnessAgent final : public Agent {
 public:
  HarnessAgent(std::unique_ptr<exec::GuestSession> session, const std::string& code, HarnessMode mode,
               std::shared_ptr<llm::LLMClient> llm = nullptr);

  std::string act(const env::Observation& obs, std::uint64_t seed) override;
  const std::vector<TurnRecord>& transcript() const { return transcript_; }
  std::string transcript_jsonl() const;

 private:
  std::unique_ptr<exec::GuestSession> session_;
  HarnessMode mode_;
  std::shared_ptr<llm::LLMClient> llm_;
  std::optional<std::string> load_error_;
  std::vector<TurnRecord> transcript_;
};

// Plain LLM player: policy prompt, then the parsed move (or the missing-tag
// text, which the environment rejects).
class LLMAgent final : public Agent {
 public:
  explicit LLMAgent(std::shared_ptr<llm::LLMClient> llm) : llm_(std::move(llm)) {}
  std::string act(const env::Observation& obs, std::uint64_t seed) override;

 private:
  std::shared_ptr<llm::LLMClient> llm_;
  int turn_ = 0;
};

class FunctionAgent final : public Agent {
 public:
  using Fn = std::function<std::string(const env::Observation&, std::uint64_t)>;
  explicit FunctionAgent(Fn fn) : fn_(std::move(fn)) {}
  std::string act(const env::Observation& obs, std::uint64_t seed) override { return fn_(obs, seed); }

 private:
  Fn fn_;
};

AgentFactory function_agent(FunctionAgent::Fn fn);

// Harness agents built from an executor; the LLM client is shared.
AgentFactory harness_agent(const env::GameSpec& game, exec::ExecutorFactory executor, std::string code,
                           HarnessMode mode, std::shared_ptr<llm::LLMClient> llm = nullptr);

}  // namespace hforge::harness
