#include "hforge/env/game.hpp"

#include <algorithm>

#include "hforge/errors.hpp"
#include "hforge/util.hpp"

namespace hforge::env {

std::string strip_hints(std::string_view obs_text) {
  std::string out;
  out.reserve(obs_text.size());
  std::size_t pos = 0;
  while (pos < obs_text.size()) {
    auto nl = obs_text.find('\n', pos);
    auto end = nl == std::string_view::npos ? obs_text.size() : nl + 1;
    auto line = obs_text.substr(pos, end - pos);
    bool hint = std::any_of(std::begin(kHintMarkers), std::end(kHintMarkers),
                            [&](std::string_view m) { return starts_with(line, m); });
    if (!hint) out.append(line);
    pos = end;
  }
  return out;
}

std::optional<std::string> first_bracketed_token(std::string_view reply) {
  auto open = reply.find('[');
  if (open == std::string_view::npos) return std::nullopt;
  auto close = reply.find(']', open + 1);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(reply.substr(open, close - open + 1));
}

Observation Environment::reset(Seed seed) {
  terminal_ = false;
  started_ = true;
  current_player_ = 0;
  do_reset(seed);
  return observe();
}

Observation Environment::observe() const {
  std::string text = render();
  auto legal = legal_actions();
  text += hint_marker();
  text += ' ';
  text += join(legal, ", ");
  text += '\n';
  if (!hints_enabled_) text = strip_hints(text);
  return {std::move(text), current_player_};
}

std::vector<std::string> Environment::oracle_legal_actions() const {
  if (!started_ || terminal_) throw UsageError("oracle_legal_actions on a terminal or unstarted environment");
  auto actions = legal_actions();
  std::sort(actions.begin(), actions.end());
  return actions;
}

bool Environment::is_legal(std::string_view canonical_action) const {
  auto actions = legal_actions();
  return std::find(actions.begin(), actions.end(), canonical_action) != actions.end();
}

StepOutcome Environment::step(std::string_view action) {
  if (!started_) throw UsageError("step before reset");
  if (terminal_) throw UsageError("step on a terminal environment");

  StepOutcome out;
  out.rewards.assign(spec_.players, 0.0);
  auto token = first_bracketed_token(action);
  if (!token || !is_legal(*token)) {
    terminal_ = true;
    out.legal = false;
    out.done = true;
    out.rewards[current_player_] = -1.0;
    if (spec_.players == 2) out.rewards[1 - current_player_] = 1.0;
    return out;
  }

  Transition t = apply(*token);
  out.legal = true;
  out.done = t.done;
  if (!t.rewards.empty()) out.rewards = std::move(t.rewards);
  if (t.done) {
    terminal_ = true;
  } else {
    out.observation = observe();
  }
  return out;
}

}  // namespace hforge::env
