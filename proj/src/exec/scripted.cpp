#include "hforge/exec/scripted.hpp"

#include <algorithm>
#include <random>

#include "hforge/errors.hpp"
#include "hforge/util.hpp"

namespace hforge::exec {
namespace {

constexpr std::string_view kDirective = "# scripted-harness:";

bool valid_rule(std::string_view rule, bool propose) {
  auto head = rule.substr(0, rule.find(':'));
  if (propose)
    return rule == "oracle" || rule == "first" || rule == "hang" || head == "const" ||
           head == "raise";
  return rule == "oracle" || rule == "true" || rule == "false" || rule == "hang" ||
         head == "raise" || head == "string";
}

std::string rule_arg(std::string_view rule) {
  auto colon = rule.find(':');
  return colon == std::string_view::npos ? std::string() : std::string(rule.substr(colon + 1));
}

std::string traceback_for(std::string_view fn, std::string_view exc) {
  return "Traceback (most recent call last):\n  File \"<guest>\", in " + std::string(fn) + "\n" +
         std::string(exc) + "\n";
}

GuestResult raise_result(std::string_view fn, std::string_view exc_type, std::string_view msg) {
  std::string exc = std::string(exc_type) + (msg.empty() ? "" : ": " + std::string(msg));
  return GuestResult::failure(ErrorKind::guest_exception, std::string(msg.empty() ? exc_type : msg),
                              traceback_for(fn, exc));
}

}  // namespace

std::optional<ScriptedBehavior> parse_scripted_directive(std::string_view code) {
  for (const auto& raw : split_lines(code)) {
    auto line = trim(raw);
    if (!starts_with(line, kDirective)) continue;
    auto spec = trim(std::string_view(line).substr(kDirective.size()));
    ScriptedBehavior b;
    if (spec == "oracle") return b;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
      auto semi = spec.find(';', pos);
      auto part = trim(spec.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos));
      if (!part.empty()) {
        auto eq = part.find('=');
        if (eq == std::string::npos) throw ParseError("scripted directive: expected key=rule, got '" + part + "'");
        auto key = trim(part.substr(0, eq));
        auto rule = trim(part.substr(eq + 1));
        if (key == "propose" && valid_rule(rule, true)) {
          b.propose = rule;
        } else if (key == "legal" && valid_rule(rule, false)) {
          b.legal = rule;
        } else {
          throw ParseError("scripted directive: bad entry '" + part + "'");
        }
      }
      if (semi == std::string::npos) break;
      pos = semi + 1;
    }
    return b;
  }
  return std::nullopt;
}

std::string scripted_harness_code(std::string_view directive, HarnessFlavor flavor) {
  std::string code = std::string(kDirective) + " " + std::string(directive) + "\n";
  // Bodies are never executed by the scripted host; keep them valid Python.
  auto sig = code_signatures(flavor);
  std::string placeholder = "raise NotImplementedError()";
  std::string body = "return scripted_behaviour(board)";
  auto first = sig.find(placeholder);
  sig.replace(first, placeholder.size(), body);
  auto second = sig.find(placeholder);
  sig.replace(second, placeholder.size(), "return scripted_verdict(board, action)");
  return code + sig;
}

std::string oracle_fixture_code(HarnessFlavor flavor) {
  return scripted_harness_code("oracle", flavor);
}

ScriptedSession::ScriptedSession(std::string game_id, ExecLimits limits)
    : game_id_(std::move(game_id)), limits_(std::move(limits)) {
  limits_.validate();
}

GuestResult ScriptedSession::ping() { return GuestResult::action("pong"); }

GuestResult ScriptedSession::load_code(std::string_view code) {
  ++calls_;
  loaded_ = false;
  behavior_.reset();
  propose_stub_ = legal_stub_ = false;
  default_seed_state_ = 0;

  if (auto err = structural_syntax_error(code))
    return GuestResult::failure(ErrorKind::compile_error, "SyntaxError: " + *err);
  auto fns = top_level_functions(code);
  auto find_fn = [&](std::string_view name) -> const FunctionBlock* {
    auto it = std::find_if(fns.begin(), fns.end(), [&](const auto& f) { return f.name == name; });
    return it == fns.end() ? nullptr : &*it;
  };
  for (auto name : {kProposeAction, kIsLegalAction})
    if (!find_fn(name))
      return GuestResult::failure(ErrorKind::missing_function,
                                  "missing required function: " + std::string(name));
  for (const auto& mod : imported_modules(code)) {
    const auto& allow = limits_.import_allowlist;
    if (std::find(allow.begin(), allow.end(), mod) == allow.end())
      return GuestResult::failure(ErrorKind::resource_limit, "import of '" + mod + "' is not allowed");
  }
  try {
    behavior_ = parse_scripted_directive(code);
  } catch (const ParseError& e) {
    return GuestResult::failure(ErrorKind::compile_error, e.what());
  }
  propose_stub_ = is_unimplemented_stub(*find_fn(kProposeAction));
  legal_stub_ = is_unimplemented_stub(*find_fn(kIsLegalAction));
  loaded_ = true;
  return GuestResult::success();
}

GuestResult ScriptedSession::unloaded_call(std::string_view fn) const {
  return GuestResult::failure(ErrorKind::protocol_error,
                              "no code loaded before call to " + std::string(fn));
}

GuestResult ScriptedSession::propose_action(std::string_view board,
                                            std::optional<std::uint64_t> rng_seed) {
  ++calls_;
  if (!loaded_) return unloaded_call(kProposeAction);
  if (!behavior_) {
    if (propose_stub_) return raise_result(kProposeAction, "NotImplementedError", "");
    return raise_result(kProposeAction, "RuntimeError",
                        "the in-process scripted executor cannot run this function body");
  }
  const auto& rule = behavior_->propose;
  if (rule == "hang")
    return GuestResult::failure(ErrorKind::timeout,
                                "propose_action exceeded the call timeout of " +
                                    format_fixed(limits_.call_timeout_s, 1) + "s");
  if (starts_with(rule, "raise:")) return raise_result(kProposeAction, "Exception", rule_arg(rule));
  if (starts_with(rule, "const:")) return GuestResult::action(rule_arg(rule));

  auto legal = legal_actions_from_board(game_id_, board);
  if (!legal) return raise_result(kProposeAction, "ValueError", "could not parse the game board");
  if (legal->empty()) return raise_result(kProposeAction, "Exception", "no legal action available");
  std::sort(legal->begin(), legal->end());
  if (rule == "first") return GuestResult::action(legal->front());

  std::uint64_t seed = rng_seed ? *rng_seed : mix64(++default_seed_state_);
  std::mt19937_64 rng(seed);
  return GuestResult::action((*legal)[rng() % legal->size()]);
}

GuestResult ScriptedSession::is_legal_action(std::string_view board, std::string_view action) {
  ++calls_;
  if (!loaded_) return unloaded_call(kIsLegalAction);
  if (!behavior_) {
    if (legal_stub_) return raise_result(kIsLegalAction, "NotImplementedError", "");
    return raise_result(kIsLegalAction, "RuntimeError",
                        "the in-process scripted executor cannot run this function body");
  }
  const auto& rule = behavior_->legal;
  if (rule == "true") return GuestResult::verdict(true);
  if (rule == "false") return GuestResult::verdict(false);
  if (rule == "hang")
    return GuestResult::failure(ErrorKind::timeout,
                                "is_legal_action exceeded the call timeout of " +
                                    format_fixed(limits_.call_timeout_s, 1) + "s");
  if (starts_with(rule, "raise:")) return raise_result(kIsLegalAction, "Exception", rule_arg(rule));
  if (starts_with(rule, "string:"))
    return GuestResult::failure(ErrorKind::protocol_error,
                                "is_legal_action returned a non-boolean value: '" + rule_arg(rule) + "'");

  auto legal = legal_actions_from_board(game_id_, board);
  if (!legal) return raise_result(kIsLegalAction, "ValueError", "could not parse the game board");
  auto token = env::first_bracketed_token(action);
  return GuestResult::verdict(token &&
                              std::find(legal->begin(), legal->end(), *token) != legal->end());
}

ExecutorFactory scripted_executor(ExecLimits limits) {
  limits.validate();
  return [limits](const env::GameSpec& game) -> std::unique_ptr<GuestSession> {
    return std::make_unique<ScriptedSession>(game.game_id, limits);
  };
}

}  // namespace hforge::exec
