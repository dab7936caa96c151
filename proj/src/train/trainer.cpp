#include "hforge/train/trainer.hpp"

#include <chrono>
#include <fstream>
#include <map>

#include "hforge/critic/critic.hpp"
#include "hforge/env/registry.hpp"
#include "hforge/errors.hpp"
#include "hforge/util.hpp"

namespace hforge::train {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr const char* kMetricsHeader = "iteration,node_id,heuristic,attempted,legal,exec_failures\n";

fs::path node_dir(const fs::path& run_dir, int id) { return run_dir / "nodes" / std::to_string(id); }

struct RunState {
  TrainConfig config;
  search::Tree tree;
  int iteration = 0;
  bool finished = false;
  std::string stop_reason;
  json events = json::array();
};

// Writes staged during one iteration; committed together, tree.json last.
struct Pending {
  std::string metrics;
  std::map<fs::path, std::string> writes;
  std::map<fs::path, std::string> appends;
};

double best_heuristic(const search::Tree& tree) { return tree.node(tree.best_node()).stats.heuristic; }

bool verifier_done(const RunState& s, int node_id) {
  if (s.config.mode != search::HeuristicMode::verifier) return false;
  const auto& st = s.tree.node(node_id).stats;
  const auto needed = static_cast<std::uint64_t>(s.config.rollout.n_envs) * kStopEvidencePerEnv;
  return st.steps_attempted >= needed && st.steps_legal == st.steps_attempted;
}

std::string render_run_report(const RunState& s) {
  const int best = s.tree.best_node();
  std::string out = "# Training run\n\n";
  out += "- game: " + s.config.game_id + "\n";
  out += "- mode: " + search::to_string(s.config.mode) + "\n";
  out += "- iterations used: " + std::to_string(s.iteration) + "\n";
  out += "- finished: " + std::string(s.finished ? "yes" : "no") + "\n";
  if (!s.stop_reason.empty()) out += "- stop reason: " + s.stop_reason + "\n";
  out += "- best node: " + std::to_string(best) + "\n";
  out += "- best heuristic: " + format_fixed(best_heuristic(s.tree), 6) + "\n";
  out += "- refinement errors: " + std::to_string(s.events.size()) + "\n\n";
  out += "| node | parent | iteration | attempted | legal | exec failures | heuristic |\n";
  out += "|---|---|---|---|---|---|---|\n";
  for (const auto& n : s.tree.nodes()) {
    out += "| " + std::to_string(n.node_id) + " | " + (n.parent_id ? std::to_string(*n.parent_id) : "-") + " | " +
           std::to_string(n.created_at_iteration) + " | " + std::to_string(n.stats.steps_attempted) + " | " +
           std::to_string(n.stats.steps_legal) + " | " + std::to_string(n.stats.exec_failures) + " | " +
           format_fixed(n.stats.heuristic, 6) + " |\n";
  }
  return out;
}

json tree_document(const RunState& s) {
  return {{"version", 1},
          {"game_id", s.config.game_id},
          {"iteration", s.iteration},
          {"finished", s.finished},
          {"stop_reason", s.stop_reason},
          {"best_node_id", s.tree.best_node()},
          {"best_heuristic", best_heuristic(s.tree)},
          {"events", s.events},
          {"tree", s.tree.to_json()}};
}

RunArtifacts artifacts_of(const RunState& s) {
  RunArtifacts a;
  a.best_node_id = s.tree.best_node();
  a.best_heuristic = best_heuristic(s.tree);
  a.iterations_used = s.iteration;
  a.finished = s.finished;
  a.stop_reason = s.stop_reason;
  a.tree_path = s.config.run_dir / "tree.json";
  a.metrics_path = s.config.run_dir / "metrics.csv";
  return a;
}

void commit(const RunState& s, Pending& p) {
  const auto& dir = s.config.run_dir;
  for (const auto& [path, content] : p.writes) write_file(path, content);
  for (const auto& [path, content] : p.appends) append_file(path, content);
  if (!p.metrics.empty()) append_file(dir / "metrics.csv", p.metrics);
  write_file(dir / "report.md", render_run_report(s));
  write_file(dir / "tree.json", tree_document(s).dump(2) + "\n");
  p = {};
}

void score(RunState& s, Pending& p, int node_id, std::uint64_t seed, const env::GameSpec& game,
           const exec::ExecutorFactory& executor, rollout::RolloutReport* report_out) {
  auto params = s.config.rollout;
  params.mode = s.config.mode;
  params.base_seed = seed;
  auto report = rollout::run_rollouts(s.tree.node(node_id).code, game, params, executor);
  const auto& st = s.tree.update_stats(node_id, report.summary());
  p.metrics += std::to_string(s.iteration) + "," + std::to_string(node_id) + "," + format_fixed(st.heuristic, 6) +
               "," + std::to_string(st.steps_attempted) + "," + std::to_string(st.steps_legal) + "," +
               std::to_string(st.exec_failures) + "\n";
  p.appends[node_dir(s.config.run_dir, node_id) / "rollouts.jsonl"] += rollout::steps_jsonl(report);
  if (report_out) *report_out = std::move(report);
}

RunArtifacts run_loop(RunState& s, const TrainDeps& deps) {
  if (!deps.llm) throw ArgumentError("training needs an LLM client");
  if (!deps.executor) throw ArgumentError("training needs an executor");
  const auto& game = env::game_spec(s.config.game_id);
  const auto flavor = flavor_for(s.config.mode);
  const critic::RefineContext ctx{game, exec::code_signatures(flavor)};
  const int max_iterations = s.config.effective_max_iterations();
  const auto started = Clock::now();
  const auto& dir = s.config.run_dir;

  while (!s.finished) {
    if (s.iteration >= max_iterations) {
      s.finished = true;
      s.stop_reason = "max_iterations";
      Pending none;
      commit(s, none);
      break;
    }
    if (std::chrono::duration<double>(Clock::now() - started).count() >= s.config.wall_clock_budget_s) {
      s.finished = true;
      s.stop_reason = "wall_clock";
      Pending none;
      commit(s, none);
      break;
    }

    const int it = s.iteration + 1;
    s.iteration = it;
    Pending p;
    auto selection = s.config.selection;
    selection.rng_seed = derive_seed(s.config.selection.rng_seed, static_cast<std::uint64_t>(it));
    const int selected = search::select_node(s.tree, selection);

    rollout::RolloutReport report;
    score(s, p, selected, derive_seed(s.config.rollout.base_seed, it, 0), game, deps.executor, &report);
    if (verifier_done(s, selected)) {
      s.finished = true;
      s.stop_reason = "heuristic_reached_1";
      commit(s, p);
      break;
    }

    critic::RefineResult refined;
    try {
      refined = critic::refine(s.tree.node(selected).code, report.failures, ctx, *deps.llm,
                               static_cast<std::uint64_t>(it));
    } catch (const InfrastructureError&) {
      throw;
    } catch (const TransportError&) {
      // The endpoint is unreachable; abort at the last committed iteration.
      throw;
    } catch (const Error& e) {
      s.events.push_back({{"iteration", it}, {"node_id", selected}, {"kind", "refine_error"}, {"message", e.what()}});
      commit(s, p);
      if (deps.interrupt_after && deps.interrupt_after(it)) return artifacts_of(s);
      continue;
    }

    const int child = s.tree.add_child(selected, refined.code, it);
    const auto cdir = node_dir(dir, child);
    p.writes[cdir / "code.txt"] = refined.code;
    p.writes[cdir / "prompt.txt"] = refined.prompt;
    p.writes[cdir / "response.txt"] = refined.response;
    p.writes[cdir / "targets.txt"] = join(refined.targets.names(), "\n") + "\n";
    score(s, p, child, derive_seed(s.config.rollout.base_seed, it, 1), game, deps.executor, nullptr);
    if (verifier_done(s, child)) {
      s.finished = true;
      s.stop_reason = "heuristic_reached_1";
    }
    commit(s, p);
    if (!s.finished && deps.interrupt_after && deps.interrupt_after(it)) return artifacts_of(s);
  }
  return artifacts_of(s);
}

// Drops metric rows from iterations that never committed.
void truncate_metrics(const fs::path& path, int iteration) {
  if (!fs::exists(path)) {
    write_file(path, kMetricsHeader);
    return;
  }
  auto lines = split_lines(read_file(path));
  std::string kept = kMetricsHeader;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto comma = lines[i].find(',');
    int row_it = 0;
    try {
      row_it = std::stoi(lines[i].substr(0, comma));
    } catch (const std::exception&) {
      throw IntegrityError("corrupt metrics.csv row: " + lines[i]);
    }
    if (row_it <= iteration) kept += lines[i] + "\n";
  }
  write_file(path, kept);
}

}  // namespace

RunArtifacts train(const TrainConfig& config, const TrainDeps& deps) {
  config.validate();
  if (fs::exists(config.run_dir / "tree.json"))
    throw ArgumentError(config.run_dir.string() + " already holds a run; use resume");
  const auto flavor = flavor_for(config.mode);
  RunState s{config, search::Tree::init(exec::stub_code(flavor), config.mode), 0, false, {}, json::array()};
  s.config.rollout.mode = config.mode;
  write_file(config.run_dir / "config.json", config.to_json().dump(2) + "\n");
  write_file(config.run_dir / "metrics.csv", kMetricsHeader);
  write_file(node_dir(config.run_dir, 0) / "code.txt", s.tree.node(0).code);
  Pending none;
  commit(s, none);
  return run_loop(s, deps);
}

RunArtifacts resume(const fs::path& run_dir, const TrainDeps& deps) {
  const auto tree_path = run_dir / "tree.json";
  if (!fs::exists(tree_path)) throw IntegrityError("missing " + tree_path.string());
  auto config = load_run_config(run_dir);
  config.run_dir = run_dir;
  json doc = json::parse(read_file(tree_path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw IntegrityError("corrupt " + tree_path.string());
  try {
    if (doc.at("game_id").get<std::string>() != config.game_id)
      throw IntegrityError("tree.json and config.json disagree on the game");
    auto tree = search::Tree::from_json(doc.at("tree"), [&](int id) {
      auto path = node_dir(run_dir, id) / "code.txt";
      if (!fs::exists(path)) throw IntegrityError("missing " + path.string());
      return read_file(path);
    });
    if (tree.mode() != config.mode) throw IntegrityError("tree.json and config.json disagree on the mode");
    RunState s{config, std::move(tree), doc.at("iteration").get<int>(), doc.at("finished").get<bool>(),
               doc.at("stop_reason").get<std::string>(), doc.at("events")};
    if (s.finished) return artifacts_of(s);
    truncate_metrics(run_dir / "metrics.csv", s.iteration);
    return run_loop(s, deps);
  } catch (const json::exception& e) {
    throw IntegrityError("corrupt " + tree_path.string() + ": " + e.what());
  }
}

}  // namespace hforge::train
