#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hforge/env/registry.hpp"
#include "hforge/exec/scripted.hpp"
#include "hforge/harness/harness.hpp"
#include "hforge/util.hpp"

namespace hforge::testing {

inline std::string golden(const std::string& name) {
  return read_file(std::filesystem::path(HFORGE_GOLDEN_DIR) / name);
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("hforge_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// Relative path -> content for every regular file under root.
inline std::map<std::string, std::string> snapshot_dir(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

// Every canonical-looking token any built-in game could accept, plus near
// misses. Brute-force legality checks step a clone with each of these.
inline std::vector<std::string> candidate_universe() {
  std::vector<std::string> out;
  for (int n = -1; n <= 25; ++n) out.push_back("[" + std::to_string(n) + "]");
  for (int a = -1; a <= 8; ++a)
    for (int b = -1; b <= 8; ++b) out.push_back("[" + std::to_string(a) + " " + std::to_string(b) + "]");
  for (char s : std::string("ABCD"))
    for (char d : std::string("ABCD")) out.push_back(std::string("[") + s + " " + d + "]");
  for (const char* m : {"[up]", "[down]", "[left]", "[right]", "[Up]", "[stay]"}) out.emplace_back(m);
  for (const char* m : {"[1  1]", "[ 1 1]", "[1 1 ]", "[01 1]", "[1,1]", "[]", "[a c]"}) out.emplace_back(m);
  return out;
}

inline std::set<std::string> brute_force_legal(const env::Environment& e) {
  std::set<std::string> out;
  for (const auto& a : candidate_universe()) {
    auto c = e.clone();
    if (c->step(a).legal) out.insert(a);
  }
  return out;
}

// Uniform-random legal player that reads the legal set from the board text.
inline harness::AgentFactory random_legal_agent(const std::string& game_id, std::uint64_t salt = 0) {
  return harness::function_agent([game_id, salt](const env::Observation& obs, std::uint64_t seed) {
    auto legal = exec::legal_actions_from_board(game_id, obs.text);
    if (!legal || legal->empty()) return std::string("[999]");
    std::mt19937_64 rng(derive_seed(seed, salt));
    return (*legal)[rng() % legal->size()];
  });
}

// Nim heaps parsed from "heap i: n" lines.
inline std::vector<int> nim_heaps(const std::string& obs) {
  std::vector<int> heaps;
  for (const auto& line : split_lines(obs))
    if (starts_with(line, "heap ")) heaps.push_back(std::stoi(line.substr(line.find(':') + 1)));
  return heaps;
}

// Optimal Nim play: move to nim-sum zero when possible, else take one.
inline std::string optimal_nim_move(const std::string& obs) {
  auto heaps = nim_heaps(obs);
  int x = 0;
  for (int h : heaps) x ^= h;
  for (std::size_t i = 0; i < heaps.size(); ++i) {
    int target = heaps[i] ^ x;
    if (x != 0 && target < heaps[i])
      return "[" + std::to_string(i) + " " + std::to_string(heaps[i] - target) + "]";
  }
  for (std::size_t i = 0; i < heaps.size(); ++i)
    if (heaps[i] > 0) return "[" + std::to_string(i) + " 1]";
  return "[0 1]";
}

}  // namespace hforge::testing
