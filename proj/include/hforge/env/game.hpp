#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hforge::env {

struct GameSpec {
  std::string game_id;
  int players = 1;
  std::string display_name;
  std::string description;
  std::string action_space_description;
};

struct Observation {
  std::string text;
  int player_id = 0;
};

struct StepOutcome {
  bool legal = false;
  bool done = false;
  // Reward per player for this transition; terminal rewards land here.
  std::vector<double> rewards;
  // Valid only when !done.
  Observation observation;

  double reward_for(int player) const {
    return player < static_cast<int>(rewards.size()) ? rewards[player] : 0.0;
  }
};

using Seed = std::uint64_t;

// Lines starting with these markers carry legal-move hints.
inline constexpr std::string_view kHintMarkers[] = {"Valid moves:", "Available Moves:"};

// Removes every line that begins with a hint marker; all other bytes are kept.
std::string strip_hints(std::string_view obs_text);

// Extracts the first "[...]" token from an agent reply, brackets included.
std::optional<std::string> first_bracketed_token(std::string_view reply);

// A seedable text game with an exact legal-action oracle.
//
// step() on an illegal or unparseable action ends the episode: the acting
// player receives -1 and, in 2-player games, the opponent +1.
class Environment {
 public:
  virtual ~Environment() = default;

  const GameSpec& spec() const { return spec_; }
  bool hints_enabled() const { return hints_enabled_; }
  bool terminal() const { return terminal_; }
  bool started() const { return started_; }
  int current_player() const { return current_player_; }

  Observation reset(Seed seed);
  StepOutcome step(std::string_view action);
  Observation observe() const;

  // Exactly the set of actions step() accepts, in canonical form, sorted.
  std::vector<std::string> oracle_legal_actions() const;
  bool is_legal(std::string_view canonical_action) const;

  virtual std::unique_ptr<Environment> clone() const = 0;

 protected:
  Environment(GameSpec spec, bool hints_enabled)
      : spec_(std::move(spec)), hints_enabled_(hints_enabled) {}

  struct Transition {
    bool done = false;
    std::vector<double> rewards;
  };

  virtual void do_reset(Seed seed) = 0;
  virtual std::vector<std::string> legal_actions() const = 0;
  // Called only with a member of legal_actions().
  virtual Transition apply(const std::string& action) = 0;
  // Observation body for the player to act, without any hint line.
  virtual std::string render() const = 0;
  virtual std::string_view hint_marker() const { return kHintMarkers[0]; }

  int current_player_ = 0;

 private:
  GameSpec spec_;
  bool hints_enabled_;
  bool terminal_ = false;
  bool started_ = false;
};

}  // namespace hforge::env
