#pragma once

#include <set>
#include <string>
#include <vector>

#include "hforge/env/game.hpp"
#include "hforge/llm/client.hpp"
#include "hforge/rollout/rollout.hpp"

namespace hforge::critic {

// Subset of {propose_action, is_legal_action}, iterated in that order.
struct RefineTargets {
  bool propose_action = false;
  bool is_legal_action = false;

  bool empty() const { return !propose_action && !is_legal_action; }
  std::vector<std::string> names() const;
  bool operator==(const RefineTargets&) const = default;
};

// Per failure: (true, illegal) -> both; (false, illegal) -> propose_action;
// (false, legal) -> is_legal_action; a failed call adds that function, and a
// failed is_legal_action on an illegal proposal also adds propose_action.
// Load failures target both. The result is the union over all failures.
RefineTargets targets_for(const rollout::FailureRecord& failure);
RefineTargets decide_targets(const std::vector<rollout::FailureRecord>& failures);

enum class FailureCategory {
  illegal_accepted,
  illegal_proposed,
  legal_rejected,
  guest_exception,
  timeout,
  parse,
};

std::string to_string(FailureCategory c);
FailureCategory categorize(const rollout::FailureRecord& failure);

inline constexpr std::size_t kBoardFeedbackLimit = 4000;

// Deterministic feedback text: a targets line, then one block per category in
// enum order, each entry with board, action, verdicts and error detail.
std::string consolidate_feedback(const std::vector<rollout::FailureRecord>& failures,
                                 const RefineTargets& targets);

struct PromptBundle {
  std::string name;
  std::string description;
  std::string action_space;
  std::string tasks_with_feedback;
  std::string code;
  std::string code_signatures;
};

// Throws ArgumentError naming the first empty field.
std::string build_refinement_prompt(const PromptBundle& bundle);

// Body of the last ```python (or unlabeled) fenced block. Throws
// ExtractionError without a complete block and SignatureError when a required
// function name is absent.
std::string extract_code(const std::string& llm_response);

// Game context for the prompt.
struct RefineContext {
  env::GameSpec game;
  std::string code_signatures;
};

struct RefineResult {
  RefineTargets targets;
  std::string feedback;
  std::string prompt;
  std::string response;
  std::string code;
};

// decide_targets -> consolidate_feedback -> build_refinement_prompt -> chat
// -> extract_code. LLM and extraction errors propagate.
RefineResult refine(const std::string& code, const std::vector<rollout::FailureRecord>& failures,
                    const RefineContext& ctx, llm::LLMClient& llm, std::uint64_t sequence = 0);

}  // namespace hforge::critic
