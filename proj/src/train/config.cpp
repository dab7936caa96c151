#include <nlohmann/json.hpp>

#include "hforge/env/registry.hpp"
#include "hforge/errors.hpp"
#include "hforge/exec/process.hpp"
#include "hforge/exec/scripted.hpp"
#include "hforge/train/trainer.hpp"
#include "hforge/util.hpp"

namespace hforge::train {
namespace {

using nlohmann::json;

template <typename T>
T get_as(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ArgumentError("config " + where + key + ": " + e.what());
  }
}

json coerce(const json& value, const json& like, const std::string& path) {
  if (like.is_null()) return value;
  if (like.is_number_float() && value.is_number()) return value.get<double>();
  if (like.is_number_integer() && value.is_number_integer()) return value;
  if (like.is_number_unsigned() && value.is_number_integer()) return value;
  if (like.is_number() && value.is_number()) throw ArgumentError("config " + path + " must be an integer");
  if (like.type() != value.type() && !(like.is_object() && value.is_object()))
    throw ArgumentError("config " + path + " expects " + std::string(like.type_name()) + ", got " +
                        value.type_name());
  return value;
}

void merge_into(json& base, const json& overrides, const std::string& prefix) {
  if (!overrides.is_object()) throw ArgumentError("config " + (prefix.empty() ? "root" : prefix) + " must be an object");
  for (auto& [key, value] : overrides.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ArgumentError("unknown config key: " + path);
    json& slot = base[key];
    if (slot.is_object() && !slot.empty()) {
      merge_into(slot, value, path);
    } else {
      slot = coerce(value, slot, path);
    }
  }
}

}  // namespace

nlohmann::json default_config_json() {
  const exec::ExecLimits limits;
  return {
      {"game_id", "tictactoe"},
      {"mode", "verifier"},
      {"max_iterations", 0},
      {"wall_clock_budget_s", kDefaultWallClockBudget},
      {"run_dir", "run"},
      {"rollout",
       {{"n_envs", 10}, {"max_steps", 1000}, {"base_seed", 0}, {"failure_sample_cap", 5}}},
      {"selection", {{"heuristic_weight", 1.0}, {"prior_alpha", 1.0}, {"prior_beta", 1.0}, {"rng_seed", 0}}},
      {"llm",
       {{"kind", "http"},
        {"http", llm::LLMConfig{}.to_json()},
        {"scripted", {{"preset", ""}, {"by_sequence", json::object()}, {"by_hash", json::object()}, {"default", nullptr}}}}},
      {"executor",
       {{"kind", "scripted"},
        {"argv", json::array()},
        {"call_timeout_s", limits.call_timeout_s},
        {"load_timeout_s", limits.load_timeout_s},
        {"memory_cap_bytes", limits.memory_cap_bytes},
        {"import_allowlist", limits.import_allowlist}}},
  };
}

nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overrides) {
  merge_into(base, overrides, "");
  return base;
}

int TrainConfig::effective_max_iterations() const {
  if (max_iterations > 0) return max_iterations;
  return mode == search::HeuristicMode::policy ? kPolicyMaxIterations : kVerifierMaxIterations;
}

void TrainConfig::validate() const {
  env::game_spec(game_id);
  rollout.validate();
  selection.validate();
  if (max_iterations < 0) throw ArgumentError("max_iterations must be >= 0 (0 selects the mode default)");
  if (!(wall_clock_budget_s > 0)) throw ArgumentError("wall_clock_budget_s must be positive");
  if (run_dir.empty()) throw ArgumentError("run_dir must be set");
}

TrainConfig TrainConfig::from_json(const json& raw) {
  const json j = merge_config(default_config_json(), raw);
  TrainConfig c;
  c.game_id = get_as<std::string>(j, "game_id", "");
  c.mode = search::heuristic_mode_from_string(get_as<std::string>(j, "mode", ""));
  c.max_iterations = get_as<int>(j, "max_iterations", "");
  c.wall_clock_budget_s = get_as<double>(j, "wall_clock_budget_s", "");
  c.run_dir = get_as<std::string>(j, "run_dir", "");
  const auto& r = j.at("rollout");
  c.rollout.n_envs = get_as<int>(r, "n_envs", "rollout.");
  c.rollout.max_steps = get_as<int>(r, "max_steps", "rollout.");
  c.rollout.base_seed = get_as<std::uint64_t>(r, "base_seed", "rollout.");
  c.rollout.failure_sample_cap = get_as<int>(r, "failure_sample_cap", "rollout.");
  c.rollout.mode = c.mode;
  const auto& s = j.at("selection");
  c.selection.heuristic_weight = get_as<double>(s, "heuristic_weight", "selection.");
  c.selection.prior_alpha = get_as<double>(s, "prior_alpha", "selection.");
  c.selection.prior_beta = get_as<double>(s, "prior_beta", "selection.");
  c.selection.rng_seed = get_as<std::uint64_t>(s, "rng_seed", "selection.");
  c.llm = j.at("llm");
  c.executor = j.at("executor");
  limits_from_json(c.executor).validate();
  c.validate();
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"game_id", game_id},
      {"mode", search::to_string(mode)},
      {"max_iterations", max_iterations},
      {"wall_clock_budget_s", wall_clock_budget_s},
      {"run_dir", run_dir.string()},
      {"rollout",
       {{"n_envs", rollout.n_envs},
        {"max_steps", rollout.max_steps},
        {"base_seed", rollout.base_seed},
        {"failure_sample_cap", rollout.failure_sample_cap}}},
      {"selection",
       {{"heuristic_weight", selection.heuristic_weight},
        {"prior_alpha", selection.prior_alpha},
        {"prior_beta", selection.prior_beta},
        {"rng_seed", selection.rng_seed}}},
      {"llm", llm.is_null() ? default_config_json()["llm"] : llm},
      {"executor", executor.is_null() ? default_config_json()["executor"] : executor},
  };
}

exec::HarnessFlavor flavor_for(search::HeuristicMode mode) {
  return mode == search::HeuristicMode::policy ? exec::HarnessFlavor::policy : exec::HarnessFlavor::verifier;
}

exec::ExecLimits limits_from_json(const json& e) {
  exec::ExecLimits limits;
  if (e.is_null()) return limits;
  limits.call_timeout_s = e.value("call_timeout_s", limits.call_timeout_s);
  limits.load_timeout_s = e.value("load_timeout_s", limits.load_timeout_s);
  limits.memory_cap_bytes = e.value("memory_cap_bytes", limits.memory_cap_bytes);
  limits.import_allowlist = e.value("import_allowlist", limits.import_allowlist);
  return limits;
}

exec::ExecutorFactory make_executor(const json& e) {
  auto limits = limits_from_json(e);
  const std::string kind = e.is_null() ? "scripted" : e.value("kind", std::string("scripted"));
  if (kind == "scripted") return exec::scripted_executor(limits);
  if (kind == "process") {
    exec::ProcessExecutorConfig pc{e.value("argv", std::vector<std::string>{}), limits};
    if (pc.argv.empty()) throw ArgumentError("process executor needs a non-empty argv");
    return exec::process_executor(pc);
  }
  throw ArgumentError("unknown executor kind '" + kind + "'");
}

std::string fenced_reply(const std::string& code) {
  return "The previous code failed on the sampled boards. Here is a revised version.\n\n```python\n" + code +
         "\n```\n";
}

std::unique_ptr<llm::ScriptedLLMClient> fixture_refiner(exec::HarnessFlavor flavor) {
  auto client = std::make_unique<llm::ScriptedLLMClient>();
  client->on_sequence(1, fenced_reply(exec::scripted_harness_code("propose=const:[999]; legal=true", flavor)));
  client->on_sequence(2, fenced_reply(exec::scripted_harness_code(
                             "propose=raise:list index out of range; legal=oracle", flavor)));
  client->otherwise(fenced_reply(exec::oracle_fixture_code(flavor)));
  return client;
}

std::unique_ptr<llm::LLMClient> make_llm_client(const json& l, exec::HarnessFlavor flavor) {
  const std::string kind = l.value("kind", std::string("http"));
  if (kind == "http") return std::make_unique<llm::HttpLLMClient>(llm::LLMConfig::from_json(l.value("http", json::object())));
  if (kind != "scripted") throw ArgumentError("unknown llm kind '" + kind + "'");
  json s = l.value("scripted", json::object());
  const std::string preset = s.value("preset", std::string());
  if (preset == "fixture") return fixture_refiner(flavor);
  if (!preset.empty()) throw ArgumentError("unknown scripted llm preset '" + preset + "'");
  s.erase("preset");
  if (s.contains("default") && s["default"].is_null()) s.erase("default");
  return llm::ScriptedLLMClient::from_json(s);
}

TrainConfig load_run_config(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "config.json";
  if (!std::filesystem::exists(path)) throw IntegrityError("missing " + path.string());
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw IntegrityError("corrupt " + path.string());
  try {
    return TrainConfig::from_json(j);
  } catch (const ArgumentError& e) {
    throw IntegrityError("invalid " + path.string() + ": " + e.what());
  }
}

}  // namespace hforge::train
