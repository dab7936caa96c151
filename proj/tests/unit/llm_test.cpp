#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <random>
#include <thread>

#include "hforge/env/registry.hpp"
#include "hforge/errors.hpp"
#include "hforge/llm/client.hpp"
#include "support/test_support.hpp"

using namespace hforge;
using nlohmann::json;

namespace {

std::string completion(const std::string& text) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})},
              {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 7}}}}
      .dump();
}

// Local chat-completions endpoint; `handler` sees the 1-based request count.
class MockProvider {
 public:
  using Handler = std::function<void(int, const httplib::Request&, httplib::Response&)>;
  explicit MockProvider(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      handler_(++count_, req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockProvider() {
    server_.stop();
    thread_.join();
  }
  llm::LLMConfig config() const {
    llm::LLMConfig c;
    c.endpoint_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    c.model_name = "test-model";
    c.initial_backoff_s = 0.01;
    c.requests_per_second = 1000;
    c.burst = 100;
    c.request_timeout_s = 5;
    c.api_key_env_var = "HFORGE_TEST_API_KEY";
    return c;
  }
  int count() const { return count_.load(); }

 private:
  httplib::Server server_;
  Handler handler_;
  std::atomic<int> count_{0};
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(PolicyPrompt, MatchesGolden) {
  auto obs = env::create_env("tictactoe", false)->reset(0);
  EXPECT_EQ(obs.text, hforge::testing::golden("fixture_tictactoe_board.txt"));
  EXPECT_EQ(llm::build_policy_prompt(0, obs.text), hforge::testing::golden("policy_prompt_tictactoe_p0.txt"));
}

TEST(ParseMove, TakesTheLastCompletePair) {
  EXPECT_EQ(llm::parse_move("think <move>[0 0]</move> then <move>\n [1 1] \n</move>"), "[1 1]");
  EXPECT_EQ(llm::parse_move("<move>a</move> <move>unterminated"), "a");
  EXPECT_THROW(llm::parse_move("no tags"), ParseError);
  EXPECT_THROW(llm::parse_move("</move> before <move>"), ParseError);
}

TEST(ParseMove, RoundTripsRandomEmbeddings) {
  std::mt19937_64 rng(99);
  const std::string move_chars = "[]0123456789 abcXYZ-";
  const std::string prose = "abc .,\n[]123:()";
  const std::string pad = " \n\t";
  auto text = [&](const std::string& alphabet, std::size_t max) {
    std::string s;
    for (std::size_t i = 0, n = rng() % max; i < n; ++i) s += alphabet[rng() % alphabet.size()];
    return s;
  };
  for (int i = 0; i < 1000; ++i) {
    std::string move = "[" + text(move_chars, 12) + "]";
    std::string reply = text(prose, 200);
    if (rng() % 2) reply += "<move>" + text(move_chars, 8) + "</move>" + text(prose, 40);
    reply += "<move>" + text(pad, 4) + move + text(pad, 4) + "</move>";
    ASSERT_EQ(llm::parse_move(reply), trim(move)) << reply;
  }
}

TEST(ScriptedClient, LookupOrder) {
  llm::ScriptedLLMClient c;
  c.on_prompt("exact", "by-hash").on_sequence(2, "by-seq").otherwise("fallback");
  EXPECT_EQ(c.chat("exact", {2, std::nullopt}), "by-hash");
  EXPECT_EQ(c.chat("other", {2, std::nullopt}), "by-seq");
  EXPECT_EQ(c.chat("other", {3, std::nullopt}), "fallback");
  c.respond_with([](const std::string& p, const llm::ChatOptions&) { return "fn:" + p; });
  EXPECT_EQ(c.chat("exact"), "fn:exact");
  EXPECT_EQ(c.calls(), 4u);
  EXPECT_EQ(c.exchanges().size(), 4u);
  EXPECT_EQ(c.exchanges()[1].response, "by-seq");
  llm::ScriptedLLMClient empty;
  EXPECT_THROW(empty.chat("x"), TransportError);
}

TEST(ScriptedClient, FromJson) {
  auto c = llm::ScriptedLLMClient::from_json(
      {{"by_hash", {{hex_hash("p"), "h"}}}, {"by_sequence", {{"1", "one"}}}, {"default", "d"}});
  EXPECT_EQ(c->chat("p"), "h");
  EXPECT_EQ(c->chat("q", {1, std::nullopt}), "one");
  EXPECT_EQ(c->chat("q"), "d");
  EXPECT_THROW(llm::ScriptedLLMClient::from_json({{"unknown", 1}}), ArgumentError);
}

TEST(LLMConfig, JsonRoundTripAndValidation) {
  llm::LLMConfig c;
  c.model_name = "m";
  c.max_retries = 2;
  auto back = llm::LLMConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  c.burst = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(HttpClient, RetriesRateLimitsThenSucceeds) {
  hforge::testing::TempDir dir;
  ::setenv("HFORGE_TEST_API_KEY", "sk-very-secret", 1);
  std::string auth;
  MockProvider provider([&](int n, const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    if (n <= 2) {
      res.status = 429;
      return;
    }
    auto body = json::parse(req.body);
    EXPECT_EQ(body["model"], "test-model");
    EXPECT_EQ(body["messages"][0]["content"], "hello");
    res.set_content(completion("<move>[1 1]</move>"), "application/json");
  });
  auto cfg = provider.config();
  cfg.exchange_log = dir / "exchanges.jsonl";
  llm::HttpLLMClient client(cfg);
  EXPECT_EQ(client.chat("hello"), "<move>[1 1]</move>");
  EXPECT_EQ(provider.count(), 3);
  EXPECT_EQ(auth, "Bearer sk-very-secret");
  auto log = read_file(dir / "exchanges.jsonl");
  EXPECT_EQ(log.find("sk-very-secret"), std::string::npos);
  auto entry = json::parse(split_lines(log).front());
  EXPECT_EQ(entry["response"], "<move>[1 1]</move>");
  EXPECT_EQ(entry["input_tokens"], 11);
  ::unsetenv("HFORGE_TEST_API_KEY");
}

TEST(HttpClient, ClientErrorsAreNotRetried) {
  MockProvider provider([](int, const httplib::Request&, httplib::Response& res) {
    res.status = 401;
    res.set_content("{\"error\": \"bad key\"}", "application/json");
  });
  llm::HttpLLMClient client(provider.config());
  try {
    client.chat("x");
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.status(), 401);
  }
  EXPECT_EQ(provider.count(), 1);
}

TEST(HttpClient, ExhaustedRetriesAreATransportError) {
  MockProvider provider([](int, const httplib::Request&, httplib::Response& res) { res.status = 503; });
  auto cfg = provider.config();
  cfg.max_retries = 2;
  llm::HttpLLMClient client(cfg);
  EXPECT_THROW(client.chat("x"), TransportError);
  EXPECT_EQ(provider.count(), 3);
}

TEST(HttpClient, MalformedBodyIsAProviderError) {
  MockProvider provider([](int, const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"choices\": []}", "application/json");
  });
  llm::HttpLLMClient client(provider.config());
  EXPECT_THROW(client.chat("x"), ProviderError);
}

TEST(HttpClient, UnreachableEndpointIsATransportError) {
  llm::LLMConfig c;
  c.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
  c.max_retries = 1;
  c.initial_backoff_s = 0.01;
  c.request_timeout_s = 1;
  llm::HttpLLMClient client(c);
  EXPECT_THROW(client.chat("x"), TransportError);
}

TEST(TokenBucket, LimitsSustainedRate) {
  llm::TokenBucket bucket(50.0, 2);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 12; ++i) bucket.acquire();
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  // Two burst tokens, then ten at 50/s.
  EXPECT_GE(elapsed, 0.18);
}
