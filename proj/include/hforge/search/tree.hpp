#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hforge::search {

enum class HeuristicMode { verifier, policy };

std::string to_string(HeuristicMode mode);
HeuristicMode heuristic_mode_from_string(const std::string& name);  // throws ArgumentError

struct NodeStats {
  std::uint64_t steps_attempted = 0;
  std::uint64_t steps_legal = 0;
  std::uint64_t exec_failures = 0;
  // Per-trajectory contributions in {0} ∪ [0.5, 1] (policy mode).
  std::vector<double> trajectory_heuristics;
  double heuristic = 0.0;
};

// The evidence a rollout contributes to a node.
struct RolloutSummary {
  std::uint64_t steps_attempted = 0;
  std::uint64_t steps_legal = 0;
  std::uint64_t exec_failures = 0;
  std::vector<double> trajectory_heuristics;
};

// A trajectory scores 0 when it contained an illegal action (or the code
// failed), otherwise 0.5 + 0.5 * r with r the final reward in [0, 1].
double trajectory_contribution(bool had_illegal_action, double final_reward);

// Verifier: legal / attempted (0 with no attempts). Policy: mean trajectory
// contribution (0 with no trajectories).
double heuristic_value(const NodeStats& stats, HeuristicMode mode);

struct CodeHypothesis {
  int node_id = 0;
  std::optional<int> parent_id;
  std::string code;
  int created_at_iteration = 0;
  NodeStats stats;
};

struct SelectionConfig {
  double heuristic_weight = 1.0;
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
  std::uint64_t rng_seed = 0;

  void validate() const;  // throws ArgumentError
};

class Tree {
 public:
  // Throws ArgumentError on empty code.
  static Tree init(std::string root_code, HeuristicMode mode = HeuristicMode::verifier);

  int add_child(int parent_id, std::string code, int iteration = 0);
  const NodeStats& update_stats(int node_id, const RolloutSummary& summary);

  const CodeHypothesis& node(int node_id) const;
  const std::vector<CodeHypothesis>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  HeuristicMode mode() const { return mode_; }
  std::vector<int> children(int node_id) const;

  // Highest heuristic; ties go to the lower node id.
  int best_node() const;

  // Stats and structure only; code lives in per-node files.
  nlohmann::json to_json() const;
  // `code_of(node_id)` supplies each node's code text.
  template <typename CodeLookup>
  static Tree from_json(const nlohmann::json& j, CodeLookup&& code_of);

 private:
  Tree() = default;
  CodeHypothesis& mutable_node(int node_id);
  static Tree from_json_impl(const nlohmann::json& j, std::vector<std::string> codes);

  HeuristicMode mode_ = HeuristicMode::verifier;
  std::vector<CodeHypothesis> nodes_;
};

template <typename CodeLookup>
Tree Tree::from_json(const nlohmann::json& j, CodeLookup&& code_of) {
  std::vector<std::string> codes;
  for (const auto& n : j.at("nodes")) codes.push_back(code_of(n.at("node_id").get<int>()));
  return from_json_impl(j, std::move(codes));
}

// Thompson sampling: each node draws from
// Beta(alpha + w * successes, beta + w * failures) and the largest draw wins;
// exact ties go to the larger node id. Successes are legal steps (verifier)
// or the summed trajectory contributions (policy).
int select_node(const Tree& tree, const SelectionConfig& config, std::mt19937_64& rng);

// Pure form: seeds a fresh engine from config.rng_seed.
int select_node(const Tree& tree, const SelectionConfig& config);

// Beta(a, b) draw via two gamma variates.
double sample_beta(double a, double b, std::mt19937_64& rng);

}  // namespace hforge::search
