#include <gtest/gtest.h>

#include "hforge/env/registry.hpp"
#include "hforge/errors.hpp"
#include "hforge/train/trainer.hpp"
#include "support/test_support.hpp"

using namespace hforge;
using nlohmann::json;
using hforge::testing::snapshot_dir;
using hforge::testing::TempDir;

namespace {

train::TrainConfig config_for(const std::string& game, const std::filesystem::path& dir,
                              search::HeuristicMode mode = search::HeuristicMode::verifier) {
  json j = {{"game_id", game},
            {"mode", search::to_string(mode)},
            {"run_dir", dir.string()},
            {"rollout", {{"max_steps", 200}}},
            {"llm", {{"kind", "scripted"}, {"scripted", {{"preset", "fixture"}}}}}};
  return train::TrainConfig::from_json(j);
}

train::RunArtifacts run_fixture(const train::TrainConfig& c, std::function<bool(int)> interrupt = {}) {
  auto llm = train::make_llm_client(c.llm, train::flavor_for(c.mode));
  return train::train(c, {llm.get(), train::make_executor(c.executor), std::move(interrupt)});
}

train::RunArtifacts resume_fixture(const std::filesystem::path& dir) {
  auto c = train::load_run_config(dir);
  auto llm = train::make_llm_client(c.llm, train::flavor_for(c.mode));
  return train::resume(dir, {llm.get(), train::make_executor(c.executor), {}});
}

std::vector<std::string> metric_rows(const std::filesystem::path& dir) {
  auto lines = split_lines(read_file(dir / "metrics.csv"));
  std::vector<std::string> out;
  for (std::size_t i = 1; i < lines.size(); ++i)
    if (!lines[i].empty()) out.push_back(lines[i]);
  return out;
}

}  // namespace

TEST(Trainer, FixtureRefinerReachesOneOnEveryGame) {
  for (const auto& g : env::registered_games()) {
    TempDir dir;
    auto a = run_fixture(config_for(g.game_id, dir / "run"));
    EXPECT_EQ(a.best_heuristic, 1.0) << g.game_id;
    EXPECT_LE(a.iterations_used, 4) << g.game_id;
    EXPECT_TRUE(a.finished);
    EXPECT_EQ(a.stop_reason, "heuristic_reached_1");
    auto tree = json::parse(read_file(a.tree_path));
    EXPECT_LE(tree["tree"]["nodes"].size(), static_cast<std::size_t>(1 + a.iterations_used));
    for (const char* f : {"config.json", "tree.json", "metrics.csv", "report.md", "nodes/0/code.txt",
                          "nodes/1/code.txt", "nodes/1/prompt.txt", "nodes/1/response.txt", "nodes/1/rollouts.jsonl",
                          "nodes/1/targets.txt"})
      EXPECT_TRUE(std::filesystem::exists(dir / "run" / f)) << f;
  }
}

TEST(Trainer, FirstRefinementSeesTheStubFailures) {
  TempDir dir;
  run_fixture(config_for("tictactoe", dir / "run"));
  auto prompt = read_file(dir / "run/nodes/1/prompt.txt");
  EXPECT_NE(prompt.find("NotImplementedError"), std::string::npos);
  EXPECT_EQ(read_file(dir / "run/nodes/1/targets.txt"), "propose_action\n");
  EXPECT_EQ(read_file(dir / "run/nodes/2/targets.txt"), "propose_action\nis_legal_action\n");
}

TEST(Trainer, IdenticalSeedsGiveByteIdenticalRunDirectories) {
  TempDir dir;
  const auto path = dir / "run";
  run_fixture(config_for("nim", path));
  auto first = snapshot_dir(path);
  std::filesystem::remove_all(path);
  run_fixture(config_for("nim", path));
  EXPECT_EQ(first, snapshot_dir(path));
}

TEST(Trainer, ResumeAfterInterruptionMatchesAnUninterruptedRun) {
  TempDir dir;
  const auto path = dir / "run";
  auto c = config_for("frozenlake", path, search::HeuristicMode::policy);
  c.max_iterations = 5;
  run_fixture(c);
  auto full = snapshot_dir(path);
  std::filesystem::remove_all(path);

  auto partial = run_fixture(c, [](int it) { return it == 2; });
  EXPECT_FALSE(partial.finished);
  EXPECT_EQ(partial.iterations_used, 2);
  // Rows from an iteration that never committed are dropped on resume.
  append_file(path / "metrics.csv", "3,0,0.000000,1,1,0\n");
  auto resumed = resume_fixture(path);
  EXPECT_TRUE(resumed.finished);
  EXPECT_EQ(resumed.iterations_used, 5);
  EXPECT_EQ(full, snapshot_dir(path));
  auto again = resume_fixture(path);
  EXPECT_EQ(again.iterations_used, 5);
  EXPECT_EQ(full, snapshot_dir(path));
}

TEST(Trainer, PolicyModeRunsToTheIterationCap) {
  TempDir dir;
  auto c = config_for("tictactoe", dir / "run", search::HeuristicMode::policy);
  c.max_iterations = 4;
  auto a = run_fixture(c);
  EXPECT_EQ(a.stop_reason, "max_iterations");
  EXPECT_EQ(a.iterations_used, 4);
  EXPECT_GE(a.best_heuristic, 0.5);
  EXPECT_LE(a.best_heuristic, 1.0);
  // Two metric rows per iteration: parent re-score then child.
  EXPECT_EQ(metric_rows(dir / "run").size(), 8u);
}

TEST(Trainer, BestHeuristicNeverDecreases) {
  TempDir dir;
  auto c = config_for("minesweeper-small", dir / "run", search::HeuristicMode::policy);
  c.max_iterations = 5;
  double best = -1.0;
  run_fixture(c, [&](int) {
    auto t = json::parse(read_file(dir / "run/tree.json"));
    double b = t["best_heuristic"].get<double>();
    EXPECT_GE(b, best);
    best = b;
    return false;
  });
}

TEST(Trainer, RefinementErrorsAreRecordedAndTheRunContinues) {
  TempDir dir;
  auto c = config_for("nim", dir / "run");
  c.max_iterations = 3;
  llm::ScriptedLLMClient llm;
  llm.otherwise("Sorry, no code today.");
  auto a = train::train(c, {&llm, train::make_executor(c.executor), {}});
  EXPECT_EQ(a.iterations_used, 3);
  EXPECT_EQ(a.stop_reason, "max_iterations");
  auto t = json::parse(read_file(a.tree_path));
  EXPECT_EQ(t["tree"]["nodes"].size(), 1u);
  ASSERT_EQ(t["events"].size(), 3u);
  EXPECT_EQ(t["events"][0]["kind"], "refine_error");
}

TEST(Trainer, TransportFailuresPropagate) {
  TempDir dir;
  auto c = config_for("nim", dir / "run");
  llm::ScriptedLLMClient silent;
  EXPECT_THROW(train::train(c, {&silent, train::make_executor(c.executor), {}}), TransportError);
}

TEST(Trainer, WallClockBudgetStopsTheRun) {
  TempDir dir;
  auto c = config_for("nim", dir / "run");
  c.wall_clock_budget_s = 1e-9;
  auto a = run_fixture(c);
  EXPECT_EQ(a.stop_reason, "wall_clock");
}

TEST(Trainer, RefusesToOverwriteAndChecksIntegrity) {
  TempDir dir;
  const auto path = dir / "run";
  auto c = config_for("nim", path);
  run_fixture(c);
  EXPECT_THROW(run_fixture(c), ArgumentError);

  std::filesystem::remove(path / "tree.json");
  EXPECT_THROW(resume_fixture(path), IntegrityError);
  write_file(path / "tree.json", "{ not json");
  EXPECT_THROW(resume_fixture(path), IntegrityError);
  EXPECT_THROW(resume_fixture(dir / "nowhere"), IntegrityError);
}

TEST(TrainConfig, DefaultsOverridesAndValidation) {
  auto c = train::TrainConfig::from_json(json::object());
  EXPECT_EQ(c.game_id, "tictactoe");
  EXPECT_EQ(c.effective_max_iterations(), train::kVerifierMaxIterations);
  c.mode = search::HeuristicMode::policy;
  EXPECT_EQ(c.effective_max_iterations(), train::kPolicyMaxIterations);
  EXPECT_EQ(c.wall_clock_budget_s, 7200.0);

  auto coerced = train::TrainConfig::from_json({{"wall_clock_budget_s", 60}, {"selection", {{"heuristic_weight", 2}}}});
  EXPECT_TRUE(coerced.to_json()["wall_clock_budget_s"].is_number_float());
  EXPECT_EQ(coerced.selection.heuristic_weight, 2.0);
  EXPECT_EQ(train::TrainConfig::from_json(coerced.to_json()).to_json(), coerced.to_json());

  EXPECT_THROW(train::TrainConfig::from_json({{"bogus", 1}}), ArgumentError);
  EXPECT_THROW(train::TrainConfig::from_json({{"rollout", {{"n_envs", "ten"}}}}), ArgumentError);
  EXPECT_THROW(train::TrainConfig::from_json({{"rollout", {{"n_envs", 2.5}}}}), ArgumentError);
  EXPECT_THROW(train::TrainConfig::from_json({{"max_iterations", -1}}), ArgumentError);
  EXPECT_THROW(train::TrainConfig::from_json({{"game_id", "chess"}}), RegistryError);
}

TEST(TrainConfig, CollaboratorFactories) {
  EXPECT_THROW(train::make_llm_client({{"kind", "carrier-pigeon"}}, exec::HarnessFlavor::verifier), ArgumentError);
  EXPECT_THROW(train::make_executor({{"kind", "process"}, {"argv", json::array()}}), ArgumentError);
  auto scripted = train::make_llm_client(
      {{"kind", "scripted"}, {"scripted", {{"preset", ""}, {"by_sequence", {{"1", "one"}}}, {"default", nullptr}}}},
      exec::HarnessFlavor::verifier);
  EXPECT_EQ(scripted->chat("x", {1, std::nullopt}), "one");
  auto fixture = train::fixture_refiner(exec::HarnessFlavor::verifier);
  EXPECT_NE(fixture->chat("x", {3, std::nullopt}).find("# scripted-harness: oracle"), std::string::npos);
}

TEST(Trainer, TransportFailureLeavesAResumableCheckpoint) {
  TempDir dir;
  const auto path = dir / "run";
  auto c = config_for("nim", path);
  llm::ScriptedLLMClient flaky;
  flaky.on_sequence(1, train::fenced_reply(exec::scripted_harness_code("propose=const:[999]; legal=true")));
  EXPECT_THROW(train::train(c, {&flaky, train::make_executor(c.executor), {}}), TransportError);
  auto t = json::parse(read_file(path / "tree.json"));
  EXPECT_EQ(t["iteration"], 1);
  EXPECT_EQ(metric_rows(path).size(), 2u);
  auto a = resume_fixture(path);
  EXPECT_EQ(a.best_heuristic, 1.0);
}
