#include "hforge/critic/critic.hpp"

#include <array>
#include <optional>

#include "hforge/errors.hpp"
#include "hforge/exec/guest_code.hpp"
#include "hforge/util.hpp"

namespace hforge::critic {
namespace {

using rollout::EnvVerdict;
using rollout::FailedCall;
using rollout::FailureRecord;
using rollout::GuestVerdict;

constexpr std::array kCategories = {
    FailureCategory::illegal_accepted, FailureCategory::illegal_proposed,
    FailureCategory::legal_rejected,   FailureCategory::guest_exception,
    FailureCategory::timeout,          FailureCategory::parse,
};

std::string summary_of(FailureCategory c) {
  switch (c) {
    case FailureCategory::illegal_accepted:
      return "is_legal_action returned True for an action the game rejected";
    case FailureCategory::illegal_proposed:
      return "propose_action produced an action the game rejected";
    case FailureCategory::legal_rejected:
      return "is_legal_action returned False for an action the game accepted";
    case FailureCategory::guest_exception:
      return "the code raised an exception or could not be loaded";
    case FailureCategory::timeout:
      return "a function call exceeded its time limit";
    case FailureCategory::parse:
      return "a function returned a value of the wrong type";
  }
  return {};
}

std::optional<FailureCategory> category_of(const FailureRecord& f) {
  if (f.failed_call != FailedCall::none || f.guest_verdict == GuestVerdict::error) return categorize(f);
  if (f.guest_verdict == GuestVerdict::accepted && f.env_verdict == EnvVerdict::legal) return std::nullopt;
  return categorize(f);
}

std::string truncated_board(const std::string& board) {
  if (board.size() <= kBoardFeedbackLimit) return board;
  return board.substr(0, kBoardFeedbackLimit) + "\n[truncated " +
         std::to_string(board.size() - kBoardFeedbackLimit) + " characters]";
}

void append_entry(std::string& out, int number, const FailureRecord& f) {
  out += "-- failure " + std::to_string(number) + " --\n";
  out += "Board:\n";
  auto board = truncated_board(f.board);
  out += board;
  if (board.empty() || board.back() != '\n') out += "\n";
  const bool action_made = f.failed_call == FailedCall::none || f.failed_call == FailedCall::is_legal_action;
  out += "Action: " + (action_made ? f.action : std::string("(none)")) + "\n";
  if (action_made) {
    std::string verdict = f.guest_verdict == GuestVerdict::accepted   ? "True"
                          : f.guest_verdict == GuestVerdict::rejected ? "False"
                                                                      : "error";
    out += "is_legal_action verdict: " + verdict + "\n";
    out += "Environment verdict: " + rollout::to_string(f.env_verdict) + "\n";
  }
  if (f.failed_call != FailedCall::none) {
    out += "Error in " + rollout::to_string(f.failed_call);
    if (f.error_kind) out += " (" + std::string(exec::to_string(*f.error_kind)) + ")";
    out += ": " + f.error_message + "\n";
    if (!f.traceback.empty()) {
      out += "Traceback:\n" + f.traceback;
      if (f.traceback.back() != '\n') out += "\n";
    }
  }
}

// Single pass: substituted values are never rescanned for placeholders.
std::string substitute(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool matched = false;
    if (tmpl[i] == '{') {
      for (const auto& [key, value] : values) {
        std::string token = "{" + key + "}";
        if (tmpl.substr(i, token.size()) == token) {
          out += value;
          i += token.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out += tmpl[i++];
  }
  return out;
}

constexpr std::string_view kRefinementTemplate = R"(You are a python programmer with expertise in text games.

You are given a text game with the following name: {name}

Here is a description of the game.
{description}

Here is a description of the action space of the game.
{action_space}

You are observing the following game boards as text with error feedback.
{tasks_with_feedback}

Your task is to write or refine the following python functions.
```python
{code}
```

Make sure to follow these function signatures.
```python
{code_signatures}
```

Make sure to follow these instructions.

* Think step by step about the code, the game boards and the error feedback.

* Reason about each action through the game board and write down critical failure steps.

* Reason about code refinements that can help fix the failure steps.

* Reason about the entire sequence of actions and write down the progress of the game as a value between 0 and 1.

* Reason about code refinements that can help improve the game progress.

* Reason about code refinements that can avoid running in loops.

* Write down your thoughts before writing the code.

* Make sure to follow the given function signatures.

* Make sure the new code can satisfy all the observed game boards.

* Make sure the new code can fix all the current errors.

* Make sure to only produce code that is safe to execute.

* Make sure the code is concise and precise.

* If necessary, randomply sample one of the best legal actions and return it as the proposed action.

* Do not use any the try-except blocks.

* Write your functions in a python code block enclosed in ```python
)";

// Prompt fields are newline-terminated text blocks.
std::string as_block(std::string s) {
  if (!s.empty() && s.back() != '\n') s += '\n';
  return s;
}

bool opens_guest_block(std::string_view line) {
  if (!starts_with(line, "```")) return false;
  auto lang = trim(line.substr(3));
  return lang.empty() || lang == "python" || lang == "py";
}

}  // namespace

std::vector<std::string> RefineTargets::names() const {
  std::vector<std::string> out;
  if (propose_action) out.emplace_back(exec::kProposeAction);
  if (is_legal_action) out.emplace_back(exec::kIsLegalAction);
  return out;
}

RefineTargets targets_for(const FailureRecord& f) {
  switch (f.failed_call) {
    case FailedCall::load:
      return {true, true};
    case FailedCall::propose_action:
      return {true, false};
    case FailedCall::is_legal_action:
      return {f.env_verdict == EnvVerdict::illegal, true};
    case FailedCall::none:
      break;
  }
  switch (f.guest_verdict) {
    case GuestVerdict::accepted:
      return {f.env_verdict == EnvVerdict::illegal, f.env_verdict == EnvVerdict::illegal};
    case GuestVerdict::rejected:
      return f.env_verdict == EnvVerdict::illegal ? RefineTargets{true, false} : RefineTargets{false, true};
    case GuestVerdict::error:
      return {f.env_verdict == EnvVerdict::illegal, true};
  }
  return {};
}

RefineTargets decide_targets(const std::vector<FailureRecord>& failures) {
  RefineTargets out;
  for (const auto& f : failures) {
    auto t = targets_for(f);
    out.propose_action |= t.propose_action;
    out.is_legal_action |= t.is_legal_action;
  }
  return out;
}

std::string to_string(FailureCategory c) {
  switch (c) {
    case FailureCategory::illegal_accepted: return "illegal-accepted";
    case FailureCategory::illegal_proposed: return "illegal-proposed";
    case FailureCategory::legal_rejected: return "legal-rejected";
    case FailureCategory::guest_exception: return "guest-exception";
    case FailureCategory::timeout: return "timeout";
    case FailureCategory::parse: return "parse";
  }
  return {};
}

FailureCategory categorize(const FailureRecord& f) {
  if (f.failed_call != FailedCall::none || f.guest_verdict == GuestVerdict::error) {
    if (f.error_kind == exec::ErrorKind::timeout) return FailureCategory::timeout;
    if (f.error_kind == exec::ErrorKind::protocol_error) return FailureCategory::parse;
    return FailureCategory::guest_exception;
  }
  if (f.env_verdict == EnvVerdict::legal) return FailureCategory::legal_rejected;
  return f.guest_verdict == GuestVerdict::accepted ? FailureCategory::illegal_accepted
                                                   : FailureCategory::illegal_proposed;
}

std::string consolidate_feedback(const std::vector<FailureRecord>& failures, const RefineTargets& targets) {
  std::vector<std::vector<const FailureRecord*>> groups(kCategories.size());
  for (const auto& f : failures)
    if (auto c = category_of(f)) groups[static_cast<std::size_t>(*c)].push_back(&f);

  bool any = false;
  for (const auto& g : groups) any |= !g.empty();
  if (!any) return "No errors were observed in the sampled rollouts.\n";

  auto names = targets.names();
  std::string out = "Functions to refine: " + (names.empty() ? std::string("none") : join(names, ", ")) + "\n";
  bool first_block = true;
  for (auto c : kCategories) {
    const auto& g = groups[static_cast<std::size_t>(c)];
    if (g.empty()) continue;
    if (!first_block) out += "\n";
    first_block = false;
    out += "== " + to_string(c) + " (" + std::to_string(g.size()) +
           (g.size() == 1 ? " failure" : " failures") + "): " + summary_of(c) + " ==\n";
    int n = 0;
    for (const auto* f : g) append_entry(out, ++n, *f);
  }
  return out;
}

std::string build_refinement_prompt(const PromptBundle& b) {
  const std::vector<std::pair<std::string, std::string>> values = {
      {"name", b.name},
      {"description", b.description},
      {"action_space", b.action_space},
      {"tasks_with_feedback", b.tasks_with_feedback},
      {"code", b.code},
      {"code_signatures", b.code_signatures},
  };
  for (const auto& [key, value] : values)
    if (value.empty()) throw ArgumentError("prompt bundle field '" + key + "' is empty");
  return substitute(kRefinementTemplate, values);
}

std::string extract_code(const std::string& response) {
  std::optional<std::string> last;
  std::size_t pos = 0;
  std::optional<std::size_t> body_start;
  while (pos < response.size()) {
    auto eol = response.find('\n', pos);
    std::size_t line_end = eol == std::string::npos ? response.size() : eol;
    std::string_view line(response.data() + pos, line_end - pos);
    if (!body_start) {
      if (opens_guest_block(line) && eol != std::string::npos) body_start = eol + 1;
    } else if (trim(line) == "```") {
      // Body excludes the newline that precedes the closing fence.
      std::size_t end = pos > *body_start ? pos - 1 : *body_start;
      last = response.substr(*body_start, end - *body_start);
      body_start.reset();
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  if (!last) throw ExtractionError("no fenced python code block in the response");
  std::vector<std::string> missing;
  for (auto name : {exec::kProposeAction, exec::kIsLegalAction})
    if (last->find("def " + std::string(name)) == std::string::npos) missing.emplace_back(name);
  if (!missing.empty())
    throw SignatureError("code block does not define: " + join(missing, ", "));
  return *last;
}

RefineResult refine(const std::string& code, const std::vector<FailureRecord>& failures,
                    const RefineContext& ctx, llm::LLMClient& llm, std::uint64_t sequence) {
  RefineResult r;
  r.targets = decide_targets(failures);
  r.feedback = consolidate_feedback(failures, r.targets);
  r.prompt = build_refinement_prompt({ctx.game.game_id, as_block(ctx.game.description),
                                      as_block(ctx.game.action_space_description), r.feedback,
                                      as_block(code), as_block(ctx.code_signatures)});
  r.response = llm.chat(r.prompt, {sequence, llm::kRefinementTemperature});
  r.code = extract_code(r.response);
  return r;
}

}  // namespace hforge::critic
