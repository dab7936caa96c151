#include "hforge/cli/cli.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <memory>
#include <sstream>

#include "hforge/env/registry.hpp"
#include "hforge/errors.hpp"
#include "hforge/eval/eval.hpp"
#include "hforge/exec/scripted.hpp"
#include "hforge/harness/harness.hpp"
#include "hforge/train/trainer.hpp"
#include "hforge/util.hpp"

namespace hforge::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_json_file(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw UsageError("config file is not valid JSON: " + path);
  return j;
}

// defaults <- file <- overrides, each layer restricted to known keys.
json layered_config(json defaults, const std::string& config_path, const std::vector<std::string>& sets) {
  try {
    if (!config_path.empty()) defaults = train::merge_config(std::move(defaults), load_json_file(config_path));
    for (const auto& s : sets) defaults = train::merge_config(std::move(defaults), parse_override(s));
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  return defaults;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets, const std::string& run_dir,
              const std::string& resume_dir, std::ostream& out) {
  train::RunArtifacts a;
  if (!resume_dir.empty()) {
    if (!config_path.empty() || !sets.empty() || !run_dir.empty())
      throw UsageError("--resume takes no other options");
    auto config = train::load_run_config(resume_dir);
    auto llm = train::make_llm_client(config.llm, train::flavor_for(config.mode));
    a = train::resume(resume_dir, {llm.get(), train::make_executor(config.executor), {}});
  } else {
    auto merged = layered_config(train::default_config_json(), config_path, sets);
    if (!run_dir.empty()) merged["run_dir"] = run_dir;
    train::TrainConfig config;
    try {
      config = train::TrainConfig::from_json(merged);
    } catch (const ArgumentError& e) {
      throw UsageError(e.what());
    } catch (const RegistryError& e) {
      throw UsageError(e.what());
    }
    auto llm = train::make_llm_client(config.llm, train::flavor_for(config.mode));
    a = train::train(config, {llm.get(), train::make_executor(config.executor), {}});
  }
  out << "iterations_used " << a.iterations_used << "\n"
      << "best_node_id " << a.best_node_id << "\n"
      << "best_heuristic " << format_fixed(a.best_heuristic, 6) << "\n"
      << "stop_reason " << a.stop_reason << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct AgentBuild {
  std::string name;
  harness::AgentFactory factory;
};

AgentBuild build_agent(const json& spec, const env::GameSpec& game, const exec::ExecutorFactory& executor,
                       const std::shared_ptr<llm::LLMClient>& llm) {
  if (!spec.is_object()) throw UsageError("agent entries must be objects");
  const std::string kind = spec.value("kind", std::string("harness"));
  const std::string name = spec.value("name", kind);
  if (name.empty() || name.find(',') != std::string::npos) throw UsageError("agent names must be non-empty and comma-free");
  harness::HarnessMode mode;
  mode.kind = harness::mode_kind_from_string(spec.value("mode", std::string("policy")));
  mode.retry_budget = spec.value("retry_budget", mode.retry_budget);
  mode.filter_samples = spec.value("filter_samples", mode.filter_samples);
  if (kind == "llm") {
    return {name, [llm](std::uint64_t, int) { return std::make_unique<harness::LLMAgent>(llm); }};
  }
  std::string code;
  if (kind == "oracle") {
    code = exec::oracle_fixture_code();
  } else if (kind == "harness") {
    if (spec.contains("code")) {
      code = spec["code"].get<std::string>();
    } else if (spec.contains("code_file")) {
      code = read_file(spec["code_file"].get<std::string>());
    } else {
      throw UsageError("harness agent '" + name + "' needs code or code_file");
    }
  } else {
    throw UsageError("unknown agent kind '" + kind + "'");
  }
  return {name, harness::harness_agent(game, executor, code, mode, mode.kind == harness::ModeKind::policy ? nullptr : llm)};
}

int cmd_eval(const std::string& config_path, const std::vector<std::string>& sets, const std::string& run_dir,
             std::ostream& out) {
  auto c = layered_config(default_eval_config_json(), config_path, sets);
  if (!run_dir.empty()) c["run_dir"] = run_dir;
  const fs::path dir = c["run_dir"].get<std::string>();
  const auto executor = train::make_executor(c["executor"]);
  std::shared_ptr<llm::LLMClient> llm;
  bool needs_llm = false;
  auto all_agents = c["agents"];
  all_agents.push_back(c["opponent"]);
  for (const auto& a : all_agents)
    needs_llm |= a.value("kind", std::string()) == "llm" || a.value("mode", std::string("policy")) != "policy";
  if (needs_llm) llm = train::make_llm_client(c["llm"], exec::HarnessFlavor::policy);

  eval::PoolConfig pool{c["workers"].get<int>()};
  const auto base_seed = c["base_seed"].get<std::uint64_t>();
  std::vector<eval::EvalReport> reports;
  std::string matches;
  for (const auto& game_id : c["games"].get<std::vector<std::string>>()) {
    const auto& game = env::game_spec(game_id);
    for (const auto& spec : c["agents"]) {
      auto agent = build_agent(spec, game, executor, llm);
      eval::EvalReport r;
      r.game_id = game_id;
      r.agent = agent.name;
      r.legal_action_rate = eval::legal_action_rate(agent.factory, game, c["legal_steps"].get<int>(),
                                                    c["legal_seeds"].get<int>(), base_seed, pool);
      if (game.players == 1) {
        auto res = eval::run_matches_1p(agent.factory, game, c["matches_1p"].get<int>(), base_seed, pool);
        r.matches = static_cast<int>(res.records.size());
        r.mean_reward = res.mean_reward;
        r.records = res.records;
        for (const auto& m : res.records) {
          r.wins += m.outcome == eval::Outcome::win;
          r.draws += m.outcome == eval::Outcome::draw;
          r.losses += m.outcome == eval::Outcome::loss;
        }
      } else {
        auto opponent = build_agent(c["opponent"], game, executor, llm);
        auto res = eval::run_matches_2p(agent.factory, opponent.factory, game, c["matches_2p"].get<int>(),
                                        base_seed, pool);
        r.opponent = opponent.name;
        r.matches = static_cast<int>(res.records.size());
        r.wins = res.wins;
        r.draws = res.draws;
        r.losses = res.losses;
        r.mean_reward = res.mean_reward;
        r.records = res.records;
      }
      for (const auto& m : r.records) {
        auto j = eval::to_json(m);
        j["game_id"] = r.game_id;
        j["agent"] = r.agent;
        matches += j.dump() + "\n";
      }
      reports.push_back(std::move(r));
    }
  }
  eval::emit_report(reports, dir);
  write_file(dir / "matches.jsonl", matches);
  out << eval::render_report_csv(reports);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// play / replay

int cmd_play(const std::string& game_id, std::uint64_t seed, const std::string& code_file, const std::string& mode,
             const std::string& llm_config, const std::string& transcript_path, std::ostream& out) {
  const auto& game = env::game_spec(game_id);
  std::string code = code_file.empty() ? exec::oracle_fixture_code() : read_file(code_file);
  harness::HarnessMode hm;
  hm.kind = harness::mode_kind_from_string(mode);
  std::shared_ptr<llm::LLMClient> llm;
  if (hm.kind != harness::ModeKind::policy) {
    if (llm_config.empty()) throw UsageError(mode + " mode needs --llm-config");
    llm = train::make_llm_client(layered_config(train::default_config_json()["llm"], llm_config, {}),
                                 exec::HarnessFlavor::policy);
  }
  auto executor = exec::scripted_executor();
  harness::HarnessAgent agent(executor(game), code, hm, llm);

  auto env = env::create_env(game_id, false);
  auto obs = env->reset(seed);
  std::string transcript = json{{"type", "header"}, {"game_id", game_id}, {"seed", seed}}.dump() + "\n";
  std::vector<double> rewards(static_cast<std::size_t>(game.players), 0.0);
  for (int ply = 0;; ++ply) {
    const auto action = agent.act(obs, eval::turn_seed(seed, obs.player_id, ply));
    auto outcome = env->step(action);
    out << "--- ply " << ply << " (player " << obs.player_id << ") ---\n" << obs.text;
    if (!obs.text.empty() && obs.text.back() != '\n') out << "\n";
    out << "> " << action << (outcome.legal ? "" : "  [illegal]") << "\n";
    json turn = {{"type", "turn"},       {"ply", ply},           {"player_id", obs.player_id},
                 {"observation", obs.text}, {"action", action},  {"legal", outcome.legal},
                 {"done", outcome.done},  {"rewards", outcome.rewards}, {"harness", harness::to_json(agent.transcript().back())}};
    transcript += turn.dump() + "\n";
    if (outcome.done) {
      rewards = outcome.rewards;
      break;
    }
    obs = outcome.observation;
  }
  out << "result:";
  for (double r : rewards) out << " " << format_fixed(r, 4);
  out << "\n";
  transcript += json{{"type", "result"}, {"rewards", rewards}}.dump() + "\n";
  if (!transcript_path.empty()) write_file(transcript_path, transcript);
  return kExitOk;
}

int cmd_replay(const std::string& path, std::ostream& out) {
  if (!fs::exists(path)) throw UsageError("transcript not found: " + path);
  auto lines = split_lines(read_file(path));
  std::unique_ptr<env::Environment> env;
  std::optional<env::Observation> obs;
  for (const auto& line : lines) {
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IntegrityError("transcript line is not JSON");
    const auto type = j.value("type", std::string());
    if (type == "header") {
      env = env::create_env(j.at("game_id").get<std::string>(), false);
      obs = env->reset(j.at("seed").get<std::uint64_t>());
      out << "game " << env->spec().game_id << " seed " << j.at("seed").get<std::uint64_t>() << "\n";
    } else if (type == "turn") {
      if (!env || !obs) throw IntegrityError("transcript turn before header");
      if (obs->text != j.at("observation").get<std::string>() || obs->player_id != j.at("player_id").get<int>())
        throw IntegrityError("transcript diverges from the game at ply " + std::to_string(j.at("ply").get<int>()));
      const auto action = j.at("action").get<std::string>();
      out << "--- ply " << j.at("ply").get<int>() << " (player " << obs->player_id << ") ---\n" << obs->text;
      if (!obs->text.empty() && obs->text.back() != '\n') out << "\n";
      auto outcome = env->step(action);
      out << "> " << action << (outcome.legal ? "" : "  [illegal]") << "\n";
      if (outcome.legal != j.at("legal").get<bool>()) throw IntegrityError("recorded legality does not replay");
      if (outcome.done) {
        obs.reset();
        out << "result:";
        for (double r : outcome.rewards) out << " " << format_fixed(r, 4);
        out << "\n";
      } else {
        obs = outcome.observation;
      }
    }
  }
  if (!env) throw IntegrityError("transcript has no header");
  return kExitOk;
}

int cmd_list_envs(std::ostream& out) {
  out << std::left << std::setw(20) << "game_id" << std::setw(9) << "players" << "name\n";
  for (const auto& g : env::registered_games())
    out << std::left << std::setw(20) << g.game_id << std::setw(9) << g.players << g.display_name << "\n";
  return kExitOk;
}

}  // namespace

json parse_override(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  std::vector<std::string> parts;
  std::size_t pos = 0;
  for (;;) {
    auto dot = key.find('.', pos);
    parts.push_back(key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos));
    if (parts.back().empty()) throw UsageError("empty key segment in override: " + assignment);
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) value = json{{*it, value}};
  return value;
}

json default_eval_config_json() {
  auto t = train::default_config_json();
  return {
      {"games", json::array({"tictactoe"})},
      {"run_dir", "eval"},
      {"matches_1p", 20},
      {"matches_2p", 40},
      {"legal_steps", 1000},
      {"legal_seeds", 10},
      {"base_seed", 0},
      {"workers", 0},
      {"agents", json::array({{{"name", "oracle"}, {"kind", "oracle"}}})},
      {"opponent", {{"name", "random"}, {"kind", "oracle"}}},
      {"llm", t["llm"]},
      {"executor", t["executor"]},
  };
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Code-harness synthesis, rollout and evaluation"};
  app.require_subcommand(1);

  std::string config_path, run_dir, resume_dir;
  std::vector<std::string> sets;
  auto* train_cmd = app.add_subcommand("train", "Run tree-search training");
  train_cmd->add_option("--config", config_path, "JSON config file");
  train_cmd->add_option("--set", sets, "Override key=value (dotted keys)");
  train_cmd->add_option("--run-dir", run_dir, "Run directory");
  train_cmd->add_option("--resume", resume_dir, "Resume the run in this directory");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate agents");
  eval_cmd->add_option("--config", config_path, "JSON config file");
  eval_cmd->add_option("--set", sets, "Override key=value (dotted keys)");
  eval_cmd->add_option("--run-dir", run_dir, "Report directory");

  std::string game_id, code_file, mode = "policy", llm_config, transcript;
  std::uint64_t seed = 0;
  auto* play_cmd = app.add_subcommand("play", "Play one logged match");
  play_cmd->add_option("--game", game_id, "Game id")->required();
  play_cmd->add_option("--seed", seed, "Match seed");
  play_cmd->add_option("--code", code_file, "Harness code file (default: oracle fixture)");
  play_cmd->add_option("--mode", mode, "policy | action_verifier | action_filter");
  play_cmd->add_option("--llm-config", llm_config, "JSON llm config for LLM-backed modes");
  play_cmd->add_option("--transcript", transcript, "Write the match transcript (JSONL) here");

  auto* list_cmd = app.add_subcommand("list-envs", "List built-in games");

  std::string replay_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-render a match transcript");
  replay_cmd->add_option("transcript", replay_path, "Transcript JSONL")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsageError;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, sets, run_dir, resume_dir, out);
    if (eval_cmd->parsed()) return cmd_eval(config_path, sets, run_dir, out);
    if (play_cmd->parsed()) return cmd_play(game_id, seed, code_file, mode, llm_config, transcript, out);
    if (list_cmd->parsed()) return cmd_list_envs(out);
    if (replay_cmd->parsed()) return cmd_replay(replay_path, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const nlohmann::json::exception& e) {
    err << "usage error: malformed configuration: " << e.what() << "\n";
    return kExitUsageError;
  }
  return kExitUsageError;
}

}  // namespace hforge::cli
