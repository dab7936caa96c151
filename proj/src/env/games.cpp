#include <array>
#include <random>
#include <sstream>

#include "hforge/env/registry.hpp"
#include "hforge/errors.hpp"

namespace hforge::env {
namespace {

std::string cell_action(int r, int c) {
  return "[" + std::to_string(r) + " " + std::to_string(c) + "]";
}

// Parses "[a b]" with two small non-negative integers; canonical form only.
bool parse_pair(const std::string& action, int& a, int& b) {
  std::istringstream in(action);
  char open = 0, close = 0;
  if (!(in >> open >> a >> b >> close) || open != '[' || close != ']') return false;
  return cell_action(a, b) == action;
}

// ---------------------------------------------------------------------------

class GuessTheNumber final : public Environment {
 public:
  static constexpr int kLow = 1, kHigh = 20, kTurns = 10;
  explicit GuessTheNumber(bool hints) : Environment(game_spec("guessthenumber"), hints) {}
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<GuessTheNumber>(*this);
  }

 protected:
  void do_reset(Seed seed) override {
    std::mt19937_64 rng(seed);
    secret_ = kLow + static_cast<int>(rng() % (kHigh - kLow + 1));
    history_.clear();
  }
  std::vector<std::string> legal_actions() const override {
    std::vector<std::string> out;
    for (int n = kLow; n <= kHigh; ++n) out.push_back("[" + std::to_string(n) + "]");
    return out;
  }
  Transition apply(const std::string& action) override {
    int guess = std::stoi(action.substr(1));
    history_.push_back(guess);
    if (guess == secret_) return {true, {1.0}};
    if (static_cast<int>(history_.size()) == kTurns) return {true, {0.0}};
    return {};
  }
  std::string render() const override {
    std::ostringstream o;
    o << "[GAME] You are playing GuessTheNumber.\n"
      << "[GAME] Guess the secret number between " << kLow << " and " << kHigh
      << " within " << kTurns << " turns. Submit a guess as [n], e.g. [10].\n"
      << "[GAME] Turns used: " << history_.size() << " of " << kTurns << ".\n";
    if (history_.empty()) {
      o << "[GAME] No guesses yet.\n";
    } else {
      o << "[GAME] Previous guesses:\n";
      for (int g : history_)
        o << "[" << g << "] -> the secret number is " << (secret_ > g ? "higher" : "lower") << "\n";
    }
    return o.str();
  }
  std::string_view hint_marker() const override { return kHintMarkers[1]; }

 private:
  int secret_ = kLow;
  std::vector<int> history_;
};

// ---------------------------------------------------------------------------

class TowerOfHanoi final : public Environment {
 public:
  static constexpr int kDisks = 3, kMaxMoves = 100;
  explicit TowerOfHanoi(bool hints) : Environment(game_spec("towerofhanoi"), hints) {}
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<TowerOfHanoi>(*this);
  }

 protected:
  void do_reset(Seed) override {
    for (auto& p : pegs_) p.clear();
    for (int d = kDisks; d >= 1; --d) pegs_[0].push_back(d);
    moves_ = 0;
  }
  std::vector<std::string> legal_actions() const override {
    std::vector<std::string> out;
    for (int s = 0; s < 3; ++s) {
      if (pegs_[s].empty()) continue;
      for (int d = 0; d < 3; ++d) {
        if (d == s) continue;
        if (pegs_[d].empty() || pegs_[d].back() > pegs_[s].back())
          out.push_back(std::string("[") + peg_name(s) + " " + peg_name(d) + "]");
      }
    }
    return out;
  }
  Transition apply(const std::string& action) override {
    int s = action[1] - 'A', d = action[3] - 'A';
    pegs_[d].push_back(pegs_[s].back());
    pegs_[s].pop_back();
    ++moves_;
    if (static_cast<int>(pegs_[2].size()) == kDisks) return {true, {1.0}};
    if (moves_ == kMaxMoves) return {true, {0.0}};
    return {};
  }
  std::string render() const override {
    std::ostringstream o;
    o << "[GAME] You are playing TowerOfHanoi with " << kDisks << " disks and pegs A, B, C.\n"
      << "[GAME] Move the whole stack to peg C. Move a top disk with [src dst], e.g. [A C]. "
         "A disk may never be placed on a smaller disk.\n"
      << "[GAME] Moves used: " << moves_ << " of " << kMaxMoves << ".\n"
      << "[GAME] Pegs (bottom to top):\n";
    for (int p = 0; p < 3; ++p) {
      o << peg_name(p) << ":";
      for (int disk : pegs_[p]) o << " " << disk;
      o << "\n";
    }
    return o.str();
  }

 private:
  static char peg_name(int p) { return static_cast<char>('A' + p); }
  std::array<std::vector<int>, 3> pegs_;
  int moves_ = 0;
};

// ---------------------------------------------------------------------------

class FrozenLake final : public Environment {
 public:
  static constexpr int kSize = 4, kMaxSteps = 100;
  static constexpr std::array<std::string_view, kSize> kMap = {"SFFF", "FHFH", "FFFH", "HFFG"};
  explicit FrozenLake(bool hints) : Environment(game_spec("frozenlake"), hints) {}
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<FrozenLake>(*this);
  }

 protected:
  void do_reset(Seed) override {
    row_ = col_ = 0;
    steps_ = 0;
  }
  std::vector<std::string> legal_actions() const override {
    std::vector<std::string> out;
    if (row_ > 0) out.emplace_back("[up]");
    if (row_ < kSize - 1) out.emplace_back("[down]");
    if (col_ > 0) out.emplace_back("[left]");
    if (col_ < kSize - 1) out.emplace_back("[right]");
    return out;
  }
  Transition apply(const std::string& action) override {
    if (action == "[up]") --row_;
    else if (action == "[down]") ++row_;
    else if (action == "[left]") --col_;
    else ++col_;
    ++steps_;
    char cell = kMap[row_][col_];
    if (cell == 'H') return {true, {0.0}};
    if (cell == 'G') return {true, {1.0}};
    if (steps_ == kMaxSteps) return {true, {0.0}};
    return {};
  }
  std::string render() const override {
    std::ostringstream o;
    o << "[GAME] You are playing FrozenLake on a " << kSize << "x" << kSize << " grid.\n"
      << "[GAME] Reach the goal G without falling into a hole H. Move with [up], [down], "
         "[left] or [right]; moves off the grid are not allowed.\n"
      << "[GAME] Steps used: " << steps_ << " of " << kMaxSteps << ".\n"
      << "[GAME] Current map (P marks your position):\n";
    for (int r = 0; r < kSize; ++r) {
      for (int c = 0; c < kSize; ++c) {
        if (c) o << ' ';
        o << ((r == row_ && c == col_) ? 'P' : kMap[r][c]);
      }
      o << "\n";
    }
    return o.str();
  }

 private:
  int row_ = 0, col_ = 0, steps_ = 0;
};

// ---------------------------------------------------------------------------

class MinesweeperSmall final : public Environment {
 public:
  static constexpr int kSize = 5, kMines = 3, kSafe = kSize * kSize - kMines;
  explicit MinesweeperSmall(bool hints) : Environment(game_spec("minesweeper-small"), hints) {}
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<MinesweeperSmall>(*this);
  }

 protected:
  void do_reset(Seed seed) override {
    seed_ = seed;
    placed_ = false;
    mine_ = {};
    revealed_ = {};
    revealed_count_ = 0;
  }
  std::vector<std::string> legal_actions() const override {
    std::vector<std::string> out;
    for (int r = 0; r < kSize; ++r)
      for (int c = 0; c < kSize; ++c)
        if (!revealed_[idx(r, c)]) out.push_back(cell_action(r, c));
    return out;
  }
  Transition apply(const std::string& action) override {
    int r = 0, c = 0;
    parse_pair(action, r, c);
    if (!placed_) place_mines(idx(r, c));
    if (mine_[idx(r, c)])
      return {true, {static_cast<double>(revealed_count_) / kSafe}};
    flood(r, c);
    if (revealed_count_ == kSafe) return {true, {1.0}};
    return {};
  }
  std::string render() const override {
    std::ostringstream o;
    o << "[GAME] You are playing Minesweeper on a " << kSize << "x" << kSize << " grid with "
      << kMines << " mines.\n"
      << "[GAME] Reveal a cell with [row col], e.g. [2 2]. Digits count adjacent mines and "
         "'.' marks an unrevealed cell. The first reveal is always safe.\n"
      << "[GAME] Current board:\n"
      << " ";
    for (int c = 0; c < kSize; ++c) o << ' ' << c;
    o << "\n";
    for (int r = 0; r < kSize; ++r) {
      o << r;
      for (int c = 0; c < kSize; ++c)
        o << ' ' << (revealed_[idx(r, c)] ? static_cast<char>('0' + adjacent(r, c)) : '.');
      o << "\n";
    }
    return o.str();
  }

 private:
  static int idx(int r, int c) { return r * kSize + c; }

  // Layout is a pure function of (seed, first revealed cell).
  void place_mines(int first) {
    std::vector<int> cells;
    for (int i = 0; i < kSize * kSize; ++i)
      if (i != first) cells.push_back(i);
    std::mt19937_64 rng(seed_);
    for (int i = static_cast<int>(cells.size()) - 1; i > 0; --i)
      std::swap(cells[i], cells[rng() % static_cast<std::uint64_t>(i + 1)]);
    for (int m = 0; m < kMines; ++m) mine_[cells[m]] = true;
    placed_ = true;
  }
  int adjacent(int r, int c) const {
    int n = 0;
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        int nr = r + dr, nc = c + dc;
        if ((dr || dc) && nr >= 0 && nr < kSize && nc >= 0 && nc < kSize && mine_[idx(nr, nc)]) ++n;
      }
    return n;
  }
  void flood(int r, int c) {
    std::vector<std::pair<int, int>> stack{{r, c}};
    while (!stack.empty()) {
      auto [cr, cc] = stack.back();
      stack.pop_back();
      if (revealed_[idx(cr, cc)] || mine_[idx(cr, cc)]) continue;
      revealed_[idx(cr, cc)] = true;
      ++revealed_count_;
      if (adjacent(cr, cc) != 0) continue;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          int nr = cr + dr, nc = cc + dc;
          if (nr >= 0 && nr < kSize && nc >= 0 && nc < kSize) stack.emplace_back(nr, nc);
        }
    }
  }

  Seed seed_ = 0;
  bool placed_ = false;
  std::array<bool, kSize * kSize> mine_{};
  std::array<bool, kSize * kSize> revealed_{};
  int revealed_count_ = 0;
};

// ---------------------------------------------------------------------------

class TicTacToe final : public Environment {
 public:
  explicit TicTacToe(bool hints) : Environment(game_spec("tictactoe"), hints) {}
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<TicTacToe>(*this);
  }

 protected:
  void do_reset(Seed) override { board_.assign(9, '.'); }
  std::vector<std::string> legal_actions() const override {
    std::vector<std::string> out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        if (board_[r * 3 + c] == '.') out.push_back(cell_action(r, c));
    return out;
  }
  Transition apply(const std::string& action) override {
    int r = 0, c = 0;
    parse_pair(action, r, c);
    const char mark = current_player_ == 0 ? 'X' : 'O';
    board_[r * 3 + c] = mark;
    static constexpr int kLines[8][3] = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {0, 3, 6},
                                         {1, 4, 7}, {2, 5, 8}, {0, 4, 8}, {2, 4, 6}};
    for (const auto& l : kLines) {
      if (board_[l[0]] == mark && board_[l[1]] == mark && board_[l[2]] == mark) {
        std::vector<double> rewards(2, -1.0);
        rewards[current_player_] = 1.0;
        return {true, rewards};
      }
    }
    if (board_.find('.') == std::string::npos) return {true, {0.0, 0.0}};
    current_player_ = 1 - current_player_;
    return {};
  }
  std::string render() const override {
    std::ostringstream o;
    o << "[GAME] You are playing TicTacToe as player " << current_player_ << " ("
      << (current_player_ == 0 ? 'X' : 'O') << ").\n"
      << "[GAME] Place your mark on an empty cell with [row col], where row and col are "
         "0, 1 or 2 (e.g., [1 1]).\n"
      << "[GAME] Current board:\n"
      << "  0 1 2\n";
    for (int r = 0; r < 3; ++r)
      o << r << ' ' << board_[r * 3] << ' ' << board_[r * 3 + 1] << ' ' << board_[r * 3 + 2] << "\n";
    return o.str();
  }

 private:
  std::string board_ = std::string(9, '.');
};

// ---------------------------------------------------------------------------

class Nim final : public Environment {
 public:
  static constexpr std::array<int, 3> kInitial = {3, 4, 5};
  explicit Nim(bool hints) : Environment(game_spec("nim"), hints) {}
  std::unique_ptr<Environment> clone() const override { return std::make_unique<Nim>(*this); }

 protected:
  void do_reset(Seed) override { heaps_ = kInitial; }
  std::vector<std::string> legal_actions() const override {
    std::vector<std::string> out;
    for (int h = 0; h < static_cast<int>(heaps_.size()); ++h)
      for (int a = 1; a <= heaps_[h]; ++a) out.push_back(cell_action(h, a));
    return out;
  }
  Transition apply(const std::string& action) override {
    int h = 0, a = 0;
    parse_pair(action, h, a);
    heaps_[h] -= a;
    if (heaps_[0] + heaps_[1] + heaps_[2] == 0) {
      std::vector<double> rewards(2, -1.0);
      rewards[current_player_] = 1.0;
      return {true, rewards};
    }
    current_player_ = 1 - current_player_;
    return {};
  }
  std::string render() const override {
    std::ostringstream o;
    o << "[GAME] You are playing Nim as player " << current_player_ << ".\n"
      << "[GAME] Players alternate removing objects from a single heap; whoever takes the "
         "last object wins. Move with [heap amount], e.g. [0 2] removes 2 objects from heap 0.\n"
      << "[GAME] Heaps:\n";
    for (std::size_t h = 0; h < heaps_.size(); ++h) o << "heap " << h << ": " << heaps_[h] << "\n";
    return o.str();
  }

 private:
  std::array<int, 3> heaps_ = kInitial;
};

}  // namespace

const std::vector<GameSpec>& registered_games() {
  static const std::vector<GameSpec> games = {
      {"guessthenumber", 1, "GuessTheNumber",
       "Guess a secret integer between 1 and 20 chosen at random. After every wrong guess the "
       "game says whether the secret is higher or lower. You have 10 turns; guessing the secret "
       "scores 1, running out of turns scores 0.",
       "An action is a bracketed integer [n] with 1 <= n <= 20 (e.g., [10])."},
      {"towerofhanoi", 1, "TowerOfHanoi",
       "Three disks of different sizes start stacked on peg A, largest at the bottom. Move the "
       "whole stack to peg C one top disk at a time, never placing a disk on a smaller one. "
       "Solving within 100 moves scores 1, otherwise 0.",
       "An action is [src dst] with src and dst distinct pegs among A, B, C (e.g., [A C]); the "
       "source peg must be non-empty and its top disk smaller than the destination's top disk."},
      {"frozenlake", 1, "FrozenLake",
       "Walk across a fixed 4x4 frozen lake from the start S in the top-left corner to the goal "
       "G in the bottom-right corner. Stepping on a hole H ends the game with score 0; reaching "
       "G scores 1. The ice is not slippery. At most 100 steps are allowed.",
       "An action is one of [up], [down], [left], [right]; moves that would leave the grid are "
       "not allowed."},
      {"minesweeper-small", 1, "Minesweeper",
       "A 5x5 Minesweeper board hides 3 mines. Reveal cells one at a time; a revealed digit "
       "counts the mines among the 8 neighbours and zero cells open their neighbourhood. The "
       "first reveal is always safe. The score is the fraction of safe cells revealed when the "
       "game ends.",
       "An action is [row col] naming an unrevealed cell, with row and col in 0..4 "
       "(e.g., [2 2])."},
      {"tictactoe", 2, "TicTacToe",
       "Two players take turns placing X and O on a 3x3 grid. The first player to get three of "
       "their marks in a row, column or diagonal wins. If the grid fills up without a line, the "
       "game is a draw.",
       "An action is a bracketed pair [row col] naming an empty cell, with row and col in "
       "0, 1, 2 (e.g., [1 1])."},
      {"nim", 2, "Nim",
       "Two players alternately remove objects from heaps of sizes 3, 4 and 5. On each turn a "
       "player removes one or more objects from a single heap. The player who takes the last "
       "object wins.",
       "An action is [heap amount] with heap in 0, 1, 2 and 1 <= amount <= the heap's current "
       "size (e.g., [2 3])."},
  };
  return games;
}

const GameSpec& game_spec(std::string_view game_id) {
  for (const auto& g : registered_games())
    if (g.game_id == game_id) return g;
  throw RegistryError("unknown game id: " + std::string(game_id));
}

std::unique_ptr<Environment> create_env(std::string_view game_id, bool hints_enabled) {
  const auto& spec = game_spec(game_id);
  if (spec.game_id == "guessthenumber") return std::make_unique<GuessTheNumber>(hints_enabled);
  if (spec.game_id == "towerofhanoi") return std::make_unique<TowerOfHanoi>(hints_enabled);
  if (spec.game_id == "frozenlake") return std::make_unique<FrozenLake>(hints_enabled);
  if (spec.game_id == "minesweeper-small") return std::make_unique<MinesweeperSmall>(hints_enabled);
  if (spec.game_id == "tictactoe") return std::make_unique<TicTacToe>(hints_enabled);
  return std::make_unique<Nim>(hints_enabled);
}

}  // namespace hforge::env
