#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "hforge/cli/cli.hpp"
#include "hforge/errors.hpp"
#include "hforge/exec/scripted.hpp"
#include "support/test_support.hpp"

using namespace hforge;
using nlohmann::json;
using hforge::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json fixture_train_config(const std::string& game) {
  return {{"game_id", game},
          {"rollout", {{"max_steps", 200}}},
          {"llm", {{"kind", "scripted"}, {"scripted", {{"preset", "fixture"}}}}}};
}

}  // namespace

TEST(Cli, ListEnvsPrintsSixRows) {
  auto r = invoke({"list-envs"});
  EXPECT_EQ(r.code, 0);
  auto lines = split_lines(r.out);
  std::size_t rows = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) rows += !lines[i].empty();
  EXPECT_EQ(rows, 6u);
  EXPECT_NE(r.out.find("minesweeper-small"), std::string::npos);
}

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(invoke({"train", "--config", "/nonexistent/missing.json"}).code, 2);
  EXPECT_EQ(invoke({"fly"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"train", "--set", "no_such_key=1"}).code, 2);
  EXPECT_EQ(invoke({"train", "--set", "rollout.n_envs=many"}).code, 2);
  EXPECT_EQ(invoke({"play"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, BinaryExitCodes) {
  auto status = [](const std::string& args) {
    int s = std::system((std::string(HFORGE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  EXPECT_EQ(status("list-envs"), 0);
  EXPECT_EQ(status("train --config missing.json"), 2);
  EXPECT_EQ(status("bogus"), 2);
  EXPECT_EQ(status("train --resume /nonexistent/run"), 1);
}

TEST(Cli, TrainAppliesOverridesAfterTheFile) {
  TempDir dir;
  write_file(dir / "cfg.json", fixture_train_config("nim").dump());
  const auto run_dir = (dir / "run").string();
  auto r = invoke({"train", "--config", (dir / "cfg.json").string(), "--set", "rollout.max_steps=150", "--set",
                "selection.rng_seed=9", "--run-dir", run_dir});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("best_heuristic 1.000000"), std::string::npos);
  auto persisted = json::parse(read_file(dir / "run/config.json"));
  EXPECT_EQ(persisted["rollout"]["max_steps"], 150);
  EXPECT_EQ(persisted["selection"]["rng_seed"], 9);
  EXPECT_EQ(persisted["game_id"], "nim");
  EXPECT_EQ(persisted["run_dir"], run_dir);
  // Nothing is written beside the run directory.
  std::set<std::string> entries;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) entries.insert(e.path().filename().string());
  EXPECT_EQ(entries, (std::set<std::string>{"cfg.json", "run"}));

  EXPECT_EQ(invoke({"train", "--resume", run_dir}).code, 0);
  EXPECT_EQ(invoke({"train", "--config", (dir / "cfg.json").string(), "--run-dir", run_dir}).code, 1);
  EXPECT_EQ(invoke({"train", "--resume", run_dir, "--set", "game_id=nim"}).code, 2);
}

TEST(Cli, EvalWritesReports) {
  TempDir dir;
  json cfg = {{"games", {"tictactoe", "guessthenumber"}},
              {"matches_1p", 4},
              {"matches_2p", 4},
              {"legal_steps", 50},
              {"legal_seeds", 2},
              {"agents",
               {{{"name", "oracle"}, {"kind", "oracle"}},
                {{"name", "first"}, {"kind", "harness"}, {"code", exec::scripted_harness_code("propose=first")}}}},
              {"opponent", {{"name", "random"}, {"kind", "oracle"}}}};
  write_file(dir / "eval.json", cfg.dump());
  auto r = invoke({"eval", "--config", (dir / "eval.json").string(), "--run-dir", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto csv = read_file(dir / "out/report.csv");
  EXPECT_EQ(split_lines(csv).front(), "game_id,agent,matches,wins,draws,losses,mean_reward,legal_action_rate");
  EXPECT_NE(csv.find("tictactoe,oracle,4,"), std::string::npos);
  EXPECT_NE(csv.find("guessthenumber,first,4,"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "out/report.md"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out/matches.jsonl"));

  EXPECT_EQ(invoke({"eval", "--config", (dir / "eval.json").string(), "--set", "agents=[{\"kind\":\"wizard\"}]",
                 "--run-dir", (dir / "out2").string()})
                .code,
            2);
}

TEST(Cli, PlayThenReplay) {
  TempDir dir;
  const auto transcript = (dir / "match.jsonl").string();
  auto play = invoke({"play", "--game", "tictactoe", "--seed", "4", "--transcript", transcript});
  ASSERT_EQ(play.code, 0) << play.err;
  EXPECT_NE(play.out.find("--- ply 0 (player 0) ---"), std::string::npos);
  EXPECT_NE(play.out.find("result:"), std::string::npos);
  auto header = json::parse(split_lines(read_file(transcript)).front());
  EXPECT_EQ(header["game_id"], "tictactoe");
  EXPECT_EQ(header["seed"], 4);

  auto replay = invoke({"replay", transcript});
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(replay.out, "game tictactoe seed 4\n" + play.out);

  auto lines = split_lines(read_file(transcript));
  auto turn = json::parse(lines[1]);
  turn["observation"] = "tampered";
  lines[1] = turn.dump();
  write_file(transcript, join(lines, "\n") + "\n");
  EXPECT_EQ(invoke({"replay", transcript}).code, 1);
  EXPECT_EQ(invoke({"replay", (dir / "missing.jsonl").string()}).code, 2);
}

TEST(Cli, PlayLlmModesNeedAnLlmConfig) {
  EXPECT_EQ(invoke({"play", "--game", "nim", "--mode", "action_verifier"}).code, 2);
  TempDir dir;
  write_file(dir / "llm.json",
             json{{"kind", "scripted"}, {"scripted", {{"default", "<move>[0 1]</move>"}}}}.dump());
  auto r = invoke({"play", "--game", "nim", "--mode", "action_verifier", "--llm-config", (dir / "llm.json").string()});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, ParseOverride) {
  EXPECT_EQ(cli::parse_override("a.b.c=3"), (json{{"a", {{"b", {{"c", 3}}}}}}));
  EXPECT_EQ(cli::parse_override("name=hello world"), (json{{"name", "hello world"}}));
  EXPECT_EQ(cli::parse_override("flag=true"), (json{{"flag", true}}));
  EXPECT_EQ(cli::parse_override("s=\"42\""), (json{{"s", "42"}}));
  EXPECT_THROW(cli::parse_override("novalue"), UsageError);
  EXPECT_THROW(cli::parse_override("a..b=1"), UsageError);
  EXPECT_THROW(cli::parse_override("=1"), UsageError);
}
