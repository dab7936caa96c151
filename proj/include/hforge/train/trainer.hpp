#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hforge/exec/guest.hpp"
#include "hforge/exec/guest_code.hpp"
#include "hforge/llm/client.hpp"
#include "hforge/rollout/rollout.hpp"
#include "hforge/search/tree.hpp"

namespace hforge::train {

inline constexpr int kPolicyMaxIterations = 256;
inline constexpr int kVerifierMaxIterations = 128;
inline constexpr double kDefaultWallClockBudget = 7200.0;
// Verifier stop needs this many attempted steps per environment.
inline constexpr std::uint64_t kStopEvidencePerEnv = 100;

struct TrainConfig {
  std::string game_id;
  search::HeuristicMode mode = search::HeuristicMode::verifier;
  rollout::RolloutParams rollout;
  search::SelectionConfig selection;
  int max_iterations = 0;  // 0 selects the mode default
  double wall_clock_budget_s = kDefaultWallClockBudget;
  // {"kind": "http", "http": {...}} or {"kind": "scripted", "scripted": {...}}
  nlohmann::json llm;
  // {"kind": "scripted"} or {"kind": "process", "argv": [...]}, plus limits
  nlohmann::json executor;
  std::filesystem::path run_dir;

  int effective_max_iterations() const;
  void validate() const;  // throws ArgumentError / RegistryError

  // Accepts exactly the keys of default_config_json(); throws ArgumentError.
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

nlohmann::json default_config_json();

// Overlays `overrides` onto `base`; every override path must already exist
// in base. Throws ArgumentError otherwise.
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overrides);

// Builds the collaborators a config names.
std::unique_ptr<llm::LLMClient> make_llm_client(const nlohmann::json& llm_config, exec::HarnessFlavor flavor);
exec::ExecutorFactory make_executor(const nlohmann::json& executor_config);
exec::ExecLimits limits_from_json(const nlohmann::json& executor_config);

exec::HarnessFlavor flavor_for(search::HeuristicMode mode);

// Scripted refiner replies keyed by iteration: 1 proposes an out-of-range
// action its checker accepts, 2 raises in propose_action, 3 and later return
// the oracle fixture harness.
std::unique_ptr<llm::ScriptedLLMClient> fixture_refiner(exec::HarnessFlavor flavor);

// Wraps code the way a model reply would: thoughts, then a fenced block.
std::string fenced_reply(const std::string& code);

struct TrainDeps {
  llm::LLMClient* llm = nullptr;
  exec::ExecutorFactory executor;
  // Test hook: called after each persisted iteration; returning true stops
  // the run as if the process died there.
  std::function<bool(int iteration)> interrupt_after;
};

struct RunArtifacts {
  int best_node_id = 0;
  double best_heuristic = 0.0;
  int iterations_used = 0;
  bool finished = false;
  std::string stop_reason;
  std::filesystem::path tree_path;
  std::filesystem::path metrics_path;
};

// Fresh run into config.run_dir, which must not already hold a run.
RunArtifacts train(const TrainConfig& config, const TrainDeps& deps);

// Continues the run persisted in run_dir. A finished run is returned as is.
// Throws IntegrityError for a missing or corrupt checkpoint.
RunArtifacts resume(const std::filesystem::path& run_dir, const TrainDeps& deps);

// Reads only the config.json of a run.
TrainConfig load_run_config(const std::filesystem::path& run_dir);

}  // namespace hforge::train
