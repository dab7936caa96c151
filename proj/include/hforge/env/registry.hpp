#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hforge/env/game.hpp"

namespace hforge::env {

// Built-in games: guessthenumber, towerofhanoi, frozenlake, minesweeper-small,
// tictactoe, nim. The registry is immutable and safe for concurrent reads.
const std::vector<GameSpec>& registered_games();

// Throws RegistryError for unknown ids.
const GameSpec& game_spec(std::string_view game_id);

// Returns an unstarted environment; call reset() before step().
std::unique_ptr<Environment> create_env(std::string_view game_id, bool hints_enabled);

}  // namespace hforge::env
