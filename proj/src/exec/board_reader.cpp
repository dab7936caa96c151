#include <sstream>

#include "hforge/exec/scripted.hpp"
#include "hforge/util.hpp"

namespace hforge::exec {
namespace {

using Actions = std::vector<std::string>;

// Index of the first line starting with `prefix`, or lines.size().
std::size_t find_line(const std::vector<std::string>& lines, std::string_view prefix) {
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (starts_with(lines[i], prefix)) return i;
  return lines.size();
}

// Rows "r c0 c1 ..." following a column header line; returns the cell chars.
std::optional<std::vector<std::string>> read_grid(const std::vector<std::string>& lines,
                                                  std::size_t header, int rows, int cols) {
  std::vector<std::string> grid;
  for (int r = 0; r < rows; ++r) {
    std::size_t li = header + 1 + static_cast<std::size_t>(r);
    if (li >= lines.size()) return std::nullopt;
    std::istringstream in(lines[li]);
    int label = -1;
    if (!(in >> label) || label != r) return std::nullopt;
    std::string row;
    std::string cell;
    while (in >> cell) {
      if (cell.size() != 1) return std::nullopt;
      row += cell;
    }
    if (static_cast<int>(row.size()) != cols) return std::nullopt;
    grid.push_back(row);
  }
  return grid;
}

std::string cell(int r, int c) { return "[" + std::to_string(r) + " " + std::to_string(c) + "]"; }

std::optional<Actions> empty_cells(std::string_view board, int size, char empty) {
  auto lines = split_lines(board);
  auto at = find_line(lines, "[GAME] Current board:");
  if (at + 1 >= lines.size()) return std::nullopt;
  auto grid = read_grid(lines, at + 1, size, size);
  if (!grid) return std::nullopt;
  Actions out;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
      if ((*grid)[r][c] == empty) out.push_back(cell(r, c));
  return out;
}

std::optional<Actions> tictactoe(std::string_view board) { return empty_cells(board, 3, '.'); }
std::optional<Actions> minesweeper(std::string_view board) { return empty_cells(board, 5, '.'); }

std::optional<Actions> nim(std::string_view board) {
  Actions out;
  int expected = 0;
  for (const auto& line : split_lines(board)) {
    if (!starts_with(line, "heap ")) continue;
    std::istringstream in(line.substr(5));
    int h = -1, n = -1;
    char colon = 0;
    if (!(in >> h >> colon >> n) || colon != ':' || h != expected || n < 0) return std::nullopt;
    for (int a = 1; a <= n; ++a) out.push_back(cell(h, a));
    ++expected;
  }
  if (expected == 0) return std::nullopt;
  return out;
}

std::optional<Actions> guess_the_number(std::string_view board) {
  const std::string key = "between ";
  auto pos = board.find(key);
  if (pos == std::string_view::npos) return std::nullopt;
  std::istringstream in(std::string(board.substr(pos + key.size(), 32)));
  int lo = 0, hi = 0;
  std::string and_word;
  if (!(in >> lo >> and_word >> hi) || and_word != "and" || lo > hi) return std::nullopt;
  Actions out;
  for (int n = lo; n <= hi; ++n) out.push_back("[" + std::to_string(n) + "]");
  return out;
}

std::optional<Actions> tower_of_hanoi(std::string_view board) {
  auto lines = split_lines(board);
  auto at = find_line(lines, "[GAME] Pegs (bottom to top):");
  if (at + 3 >= lines.size()) return std::nullopt;
  std::vector<std::vector<int>> pegs(3);
  for (int p = 0; p < 3; ++p) {
    const auto& line = lines[at + 1 + static_cast<std::size_t>(p)];
    if (line.size() < 2 || line[0] != static_cast<char>('A' + p) || line[1] != ':') return std::nullopt;
    std::istringstream in(line.substr(2));
    int d = 0;
    while (in >> d) pegs[p].push_back(d);
  }
  Actions out;
  for (int s = 0; s < 3; ++s) {
    if (pegs[s].empty()) continue;
    for (int d = 0; d < 3; ++d)
      if (d != s && (pegs[d].empty() || pegs[d].back() > pegs[s].back()))
        out.push_back(std::string("[") + static_cast<char>('A' + s) + " " +
                      static_cast<char>('A' + d) + "]");
  }
  return out;
}

std::optional<Actions> frozen_lake(std::string_view board) {
  auto lines = split_lines(board);
  auto at = find_line(lines, "[GAME] Current map");
  if (at == lines.size()) return std::nullopt;
  int rows = 0, cols = -1, pr = -1, pc = -1;
  for (std::size_t li = at + 1; li < lines.size(); ++li) {
    std::istringstream in(lines[li]);
    std::string tok;
    int c = 0;
    bool ok = true;
    while (in >> tok) {
      if (tok.size() != 1 || std::string("SFHGP").find(tok[0]) == std::string::npos) {
        ok = false;
        break;
      }
      if (tok[0] == 'P') {
        pr = rows;
        pc = c;
      }
      ++c;
    }
    if (!ok || c == 0) break;
    if (cols >= 0 && c != cols) return std::nullopt;
    cols = c;
    ++rows;
  }
  if (pr < 0 || rows == 0) return std::nullopt;
  Actions out;
  if (pr > 0) out.emplace_back("[up]");
  if (pr < rows - 1) out.emplace_back("[down]");
  if (pc > 0) out.emplace_back("[left]");
  if (pc < cols - 1) out.emplace_back("[right]");
  return out;
}

}  // namespace

std::optional<std::vector<std::string>> legal_actions_from_board(std::string_view game_id,
                                                                 std::string_view board) {
  if (game_id == "tictactoe") return tictactoe(board);
  if (game_id == "nim") return nim(board);
  if (game_id == "guessthenumber") return guess_the_number(board);
  if (game_id == "towerofhanoi") return tower_of_hanoi(board);
  if (game_id == "frozenlake") return frozen_lake(board);
  if (game_id == "minesweeper-small") return minesweeper(board);
  return std::nullopt;
}

}  // namespace hforge::exec
