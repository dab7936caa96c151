#include "hforge/search/tree.hpp"

#include <numeric>

#include "hforge/errors.hpp"

namespace hforge::search {

std::string to_string(HeuristicMode mode) {
  return mode == HeuristicMode::verifier ? "verifier" : "policy";
}

HeuristicMode heuristic_mode_from_string(const std::string& name) {
  if (name == "verifier") return HeuristicMode::verifier;
  if (name == "policy") return HeuristicMode::policy;
  throw ArgumentError("unknown mode '" + name + "' (expected verifier or policy)");
}

double trajectory_contribution(bool had_illegal_action, double final_reward) {
  if (had_illegal_action) return 0.0;
  return 0.5 + 0.5 * final_reward;
}

double heuristic_value(const NodeStats& stats, HeuristicMode mode) {
  if (mode == HeuristicMode::verifier) {
    if (stats.steps_attempted == 0) return 0.0;
    return static_cast<double>(stats.steps_legal) / static_cast<double>(stats.steps_attempted);
  }
  const auto& t = stats.trajectory_heuristics;
  if (t.empty()) return 0.0;
  return std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
}

void SelectionConfig::validate() const {
  if (!(prior_alpha > 0) || !(prior_beta > 0)) throw ArgumentError("priors must be positive");
  if (!(heuristic_weight >= 0)) throw ArgumentError("heuristic weight must be nonnegative");
}

Tree Tree::init(std::string root_code, HeuristicMode mode) {
  if (root_code.empty()) throw ArgumentError("root code must not be empty");
  Tree t;
  t.mode_ = mode;
  t.nodes_.push_back({0, std::nullopt, std::move(root_code), 0, {}});
  return t;
}

int Tree::add_child(int parent_id, std::string code, int iteration) {
  if (parent_id < 0 || parent_id >= static_cast<int>(nodes_.size()))
    throw ArgumentError("unknown parent node " + std::to_string(parent_id));
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back({id, parent_id, std::move(code), iteration, {}});
  return id;
}

CodeHypothesis& Tree::mutable_node(int node_id) {
  if (node_id < 0 || node_id >= static_cast<int>(nodes_.size()))
    throw ArgumentError("unknown node " + std::to_string(node_id));
  return nodes_[static_cast<std::size_t>(node_id)];
}

const CodeHypothesis& Tree::node(int node_id) const {
  return const_cast<Tree*>(this)->mutable_node(node_id);
}

const NodeStats& Tree::update_stats(int node_id, const RolloutSummary& summary) {
  auto& s = mutable_node(node_id).stats;
  s.steps_attempted += summary.steps_attempted;
  s.steps_legal += summary.steps_legal;
  s.exec_failures += summary.exec_failures;
  s.trajectory_heuristics.insert(s.trajectory_heuristics.end(),
                                 summary.trajectory_heuristics.begin(),
                                 summary.trajectory_heuristics.end());
  s.heuristic = heuristic_value(s, mode_);
  return s;
}

std::vector<int> Tree::children(int node_id) const {
  node(node_id);
  std::vector<int> out;
  for (const auto& n : nodes_)
    if (n.parent_id == node_id) out.push_back(n.node_id);
  return out;
}

int Tree::best_node() const {
  int best = 0;
  for (const auto& n : nodes_)
    if (n.stats.heuristic > nodes_[static_cast<std::size_t>(best)].stats.heuristic) best = n.node_id;
  return best;
}

nlohmann::json Tree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({
        {"node_id", n.node_id},
        {"parent_id", n.parent_id ? nlohmann::json(*n.parent_id) : nlohmann::json(nullptr)},
        {"code_file", "nodes/" + std::to_string(n.node_id) + "/code.txt"},
        {"created_at_iteration", n.created_at_iteration},
        {"stats",
         {{"steps_attempted", n.stats.steps_attempted},
          {"steps_legal", n.stats.steps_legal},
          {"exec_failures", n.stats.exec_failures},
          {"trajectory_heuristics", n.stats.trajectory_heuristics},
          {"heuristic", n.stats.heuristic}}},
    });
  }
  return {{"mode", to_string(mode_)}, {"nodes", nodes}};
}

Tree Tree::from_json_impl(const nlohmann::json& j, std::vector<std::string> codes) {
  Tree t;
  t.mode_ = heuristic_mode_from_string(j.at("mode").get<std::string>());
  std::size_t i = 0;
  for (const auto& n : j.at("nodes")) {
    CodeHypothesis h;
    h.node_id = n.at("node_id").get<int>();
    if (h.node_id != static_cast<int>(i)) throw IntegrityError("node ids are not dense");
    if (!n.at("parent_id").is_null()) {
      h.parent_id = n.at("parent_id").get<int>();
      if (*h.parent_id < 0 || *h.parent_id >= h.node_id)
        throw IntegrityError("node " + std::to_string(h.node_id) + " has an invalid parent");
    } else if (h.node_id != 0) {
      throw IntegrityError("only node 0 may be the root");
    }
    h.code = std::move(codes.at(i));
    h.created_at_iteration = n.at("created_at_iteration").get<int>();
    const auto& s = n.at("stats");
    h.stats.steps_attempted = s.at("steps_attempted").get<std::uint64_t>();
    h.stats.steps_legal = s.at("steps_legal").get<std::uint64_t>();
    h.stats.exec_failures = s.at("exec_failures").get<std::uint64_t>();
    h.stats.trajectory_heuristics = s.at("trajectory_heuristics").get<std::vector<double>>();
    h.stats.heuristic = s.at("heuristic").get<double>();
    t.nodes_.push_back(std::move(h));
    ++i;
  }
  if (t.nodes_.empty()) throw IntegrityError("tree has no root");
  return t;
}

double sample_beta(double a, double b, std::mt19937_64& rng) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  double x = ga(rng);
  double y = gb(rng);
  if (x + y <= 0.0) return 0.5;
  return x / (x + y);
}

int select_node(const Tree& tree, const SelectionConfig& config, std::mt19937_64& rng) {
  config.validate();
  const double w = config.heuristic_weight;
  int best = 0;
  double best_draw = -1.0;
  for (const auto& n : tree.nodes()) {
    double successes = 0, failures = 0;
    if (tree.mode() == HeuristicMode::verifier) {
      successes = static_cast<double>(n.stats.steps_legal);
      failures = static_cast<double>(n.stats.steps_attempted - n.stats.steps_legal);
    } else {
      const auto& t = n.stats.trajectory_heuristics;
      successes = std::accumulate(t.begin(), t.end(), 0.0);
      failures = static_cast<double>(t.size()) - successes;
    }
    double draw = sample_beta(config.prior_alpha + w * successes, config.prior_beta + w * failures, rng);
    if (draw >= best_draw) {
      best_draw = draw;
      best = n.node_id;
    }
  }
  return best;
}

int select_node(const Tree& tree, const SelectionConfig& config) {
  std::mt19937_64 rng(config.rng_seed);
  return select_node(tree, config, rng);
}

}  // namespace hforge::search
