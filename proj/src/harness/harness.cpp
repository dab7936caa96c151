#include "hforge/harness/harness.hpp"

#include <algorithm>
#include <random>

#include "hforge/errors.hpp"
#include "hforge/util.hpp"

namespace hforge::harness {
namespace {

using nlohmann::json;

std::string verdict_text(const exec::GuestResult& r) {
  if (!r.ok) return "error: " + std::string(exec::to_string(r.error_kind.value_or(exec::ErrorKind::protocol_error)));
  return *r.verdict_value() ? "true" : "false";
}

llm::ChatOptions play_options(int turn) {
  return {static_cast<std::uint64_t>(turn), llm::kPlayTemperature};
}

std::string move_or_marker(const std::string& response) {
  try {
    return llm::parse_move(response);
  } catch (const ParseError&) {
    return std::string(kMissingMoveTags);
  }
}

}  // namespace

std::string to_string(ModeKind kind) {
  switch (kind) {
    case ModeKind::action_verifier: return "action_verifier";
    case ModeKind::action_filter: return "action_filter";
    case ModeKind::policy: return "policy";
  }
  return "policy";
}

ModeKind mode_kind_from_string(const std::string& name) {
  if (name == "action_verifier") return ModeKind::action_verifier;
  if (name == "action_filter") return ModeKind::action_filter;
  if (name == "policy") return ModeKind::policy;
  throw ArgumentError("unknown harness mode '" + name + "'");
}

void HarnessMode::validate() const {
  if (retry_budget <= 0 || filter_samples <= 0) throw ArgumentError("harness budgets must be positive");
}

std::string illegal_move_warning(const std::string& action) {
  return "Your previous move " + action + " was an illegal action. Choose a different, legal move.";
}

json to_json(const TurnRecord& r) {
  return {{"turn", r.turn},
          {"player_id", r.player_id},
          {"prompt_hash", r.prompt_hash},
          {"proposals", r.proposals},
          {"verdicts", r.verdicts},
          {"action", r.action},
          {"fallback", r.fallback},
          {"llm_calls", r.llm_calls},
          {"error", r.error}};
}

ActResult act_verifier(exec::GuestSession& session, llm::LLMClient& llm, const std::string& observation,
                       int player_id, int retry_budget, std::uint64_t seed, int turn) {
  if (retry_budget <= 0) throw ArgumentError("retry budget must be positive");
  ActResult out;
  out.record.turn = turn;
  out.record.player_id = player_id;
  std::string prompt = llm::build_policy_prompt(player_id, observation);
  std::string check_error;
  for (int attempt = 0; attempt < retry_budget; ++attempt) {
    out.record.prompt_hash = hex_hash(prompt);
    ++out.record.llm_calls;
    const std::string action = move_or_marker(llm.chat(prompt, play_options(turn)));
    out.record.proposals.push_back(action);
    auto verdict = session.is_legal_action(observation, action);
    out.record.verdicts.push_back(verdict_text(verdict));
    if (verdict.ok && *verdict.verdict_value()) {
      out.action = action;
      out.record.action = action;
      return out;
    }
    if (!verdict.ok) check_error = verdict.error_message;
    prompt += illegal_move_warning(action) + "\n";
  }

  auto fallback = session.propose_action(observation, seed);
  if (!fallback.ok) {
    std::string msg = "verifier fallback failed: " + fallback.error_message;
    if (!check_error.empty()) msg += "; is_legal_action failed: " + check_error;
    throw HarnessFailure(msg, fallback.traceback);
  }
  out.action = *fallback.action_value();
  out.record.action = out.action;
  out.record.fallback = true;
  return out;
}

std::string build_filter_prompt(int player_id, const std::string& observation,
                                const std::vector<std::string>& candidates) {
  std::string prompt = llm::build_policy_prompt(player_id, observation);
  prompt += "\nCandidate moves:\n";
  for (std::size_t i = 0; i < candidates.size(); ++i)
    prompt += std::to_string(i + 1) + ". " + candidates[i] + "\n";
  prompt += "Your move must be exactly one of the candidate moves.\n";
  return prompt;
}

ActResult act_filter(exec::GuestSession& session, llm::LLMClient& llm, const std::string& observation,
                     int player_id, int filter_samples, std::uint64_t seed, int turn) {
  if (filter_samples <= 0) throw ArgumentError("filter samples must be positive");
  ActResult out;
  out.record.turn = turn;
  out.record.player_id = player_id;
  std::vector<std::string> candidates;
  exec::GuestResult last_error;
  for (int i = 0; i < filter_samples; ++i) {
    auto r = session.propose_action(observation, derive_seed(seed, static_cast<std::uint64_t>(i)));
    if (!r.ok) {
      last_error = r;
      out.record.verdicts.push_back(verdict_text(r));
      continue;
    }
    const auto& a = *r.action_value();
    out.record.proposals.push_back(a);
    if (std::find(candidates.begin(), candidates.end(), a) == candidates.end()) candidates.push_back(a);
  }
  if (candidates.empty())
    throw HarnessFailure("every propose_action call failed: " + last_error.error_message, last_error.traceback);
  if (candidates.size() == 1) {
    out.action = candidates.front();
    out.record.action = out.action;
    return out;
  }

  const std::string prompt = build_filter_prompt(player_id, observation, candidates);
  out.record.prompt_hash = hex_hash(prompt);
  out.record.llm_calls = 1;
  std::string choice = move_or_marker(llm.chat(prompt, play_options(turn)));
  if (std::find(candidates.begin(), candidates.end(), choice) == candidates.end()) {
    std::mt19937_64 rng(derive_seed(seed, 0xf117e4ULL));
    choice = candidates[rng() % candidates.size()];
    out.record.fallback = true;
  }
  out.action = choice;
  out.record.action = choice;
  return out;
}

ActResult act_policy(exec::GuestSession& session, const std::string& observation, std::uint64_t seed, int turn) {
  ActResult out;
  out.record.turn = turn;
  auto r = session.propose_action(observation, seed);
  if (!r.ok) throw HarnessFailure("propose_action failed: " + r.error_message, r.traceback);
  out.action = *r.action_value();
  out.record.proposals.push_back(out.action);
  out.record.action = out.action;
  return out;
}

HarnessAgent::HarnessAgent(std::unique_ptr<exec::GuestSession> session, const std::string& code,
                           HarnessMode mode, std::shared_ptr<llm::LLMClient> llm)
    : session_(std::move(session)), mode_(mode), llm_(std::move(llm)) {
  mode_.validate();
  if (mode_.kind != ModeKind::policy && !llm_)
    throw ArgumentError(to_string(mode_.kind) + " mode needs an LLM client");
  auto loaded = session_->load_code(code);
  if (!loaded.ok) load_error_ = "guest code failed to load: " + loaded.error_message;
}

std::string HarnessAgent::act(const env::Observation& obs, std::uint64_t seed) {
  const int turn = static_cast<int>(transcript_.size());
  ActResult r;
  try {
    if (load_error_) throw HarnessFailure(*load_error_);
    switch (mode_.kind) {
      case ModeKind::action_verifier:
        r = act_verifier(*session_, *llm_, obs.text, obs.player_id, mode_.retry_budget, seed, turn);
        break;
      case ModeKind::action_filter:
        r = act_filter(*session_, *llm_, obs.text, obs.player_id, mode_.filter_samples, seed, turn);
        break;
      case ModeKind::policy:
        r = act_policy(*session_, obs.text, seed, turn);
        break;
    }
  } catch (const HarnessFailure& e) {
    r = {};
    r.record.turn = turn;
    r.record.error = e.what();
    r.action = std::string(kNoAction);
    r.record.action = r.action;
  }
  r.record.player_id = obs.player_id;
  transcript_.push_back(r.record);
  return r.action;
}

std::string HarnessAgent::transcript_jsonl() const {
  std::string out;
  for (const auto& t : transcript_) out += to_json(t).dump() + "\n";
  return out;
}

std::string LLMAgent::act(const env::Observation& obs, std::uint64_t) {
  const auto prompt = llm::build_policy_prompt(obs.player_id, obs.text);
  return move_or_marker(llm_->chat(prompt, play_options(turn_++)));
}

AgentFactory function_agent(FunctionAgent::Fn fn) {
  return [fn](std::uint64_t, int) { return std::make_unique<FunctionAgent>(fn); };
}

AgentFactory harness_agent(const env::GameSpec& game, exec::ExecutorFactory executor, std::string code,
                           HarnessMode mode, std::shared_ptr<llm::LLMClient> llm) {
  mode.validate();
  return [game, executor = std::move(executor), code = std::move(code), mode, llm](std::uint64_t, int) {
    return std::make_unique<HarnessAgent>(executor(game), code, mode, llm);
  };
}

}  // namespace hforge::harness
