#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hforge::llm {

inline constexpr double kRefinementTemperature = 0.0;
inline constexpr double kPlayTemperature = 0.7;

struct ChatOptions {
  // Caller-defined position in a call sequence (the trainer passes the
  // iteration). Scripted clients may key replies on it.
  std::uint64_t sequence = 0;
  std::optional<double> temperature;
};

struct ChatExchange {
  std::string prompt;
  std::string response;
  double latency_s = 0.0;
  std::optional<std::int64_t> input_tokens;
  std::optional<std::int64_t> output_tokens;
};

nlohmann::json to_json(const ChatExchange& e);

// Safe for concurrent calls.
class LLMClient {
 public:
  virtual ~LLMClient() = default;
  virtual std::string chat(const std::string& prompt, const ChatOptions& options = {}) = 0;
};

// Deterministic offline client. Lookup order: prompt hash (hex_hash of the
// prompt), then sequence number, then the default reply. A prompt with no
// reply raises TransportError.
class ScriptedLLMClient final : public LLMClient {
 public:
  ScriptedLLMClient() = default;

  ScriptedLLMClient& on_prompt_hash(std::string hash, std::string reply);
  ScriptedLLMClient& on_prompt(const std::string& prompt, std::string reply);
  ScriptedLLMClient& on_sequence(std::uint64_t sequence, std::string reply);
  ScriptedLLMClient& otherwise(std::string reply);
  // Computes the reply from the prompt; takes precedence over the tables.
  ScriptedLLMClient& respond_with(std::function<std::string(const std::string&, const ChatOptions&)> fn);

  // {"by_hash": {hash: reply}, "by_sequence": {"1": reply}, "default": reply}
  static std::unique_ptr<ScriptedLLMClient> from_json(const nlohmann::json& j);

  std::string chat(const std::string& prompt, const ChatOptions& options = {}) override;

  std::size_t calls() const { return calls_.load(); }
  std::vector<ChatExchange> exchanges() const;

 private:
  std::map<std::string, std::string> by_hash_;
  std::map<std::uint64_t, std::string> by_sequence_;
  std::optional<std::string> default_;
  std::function<std::string(const std::string&, const ChatOptions&)> responder_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mu_;
  std::vector<ChatExchange> exchanges_;
};

struct LLMConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string model_name;
  double temperature = kRefinementTemperature;
  int max_output_tokens = 4096;
  double request_timeout_s = 120.0;
  int max_retries = 4;
  std::string api_key_env_var = "OPENAI_API_KEY";
  double initial_backoff_s = 1.0;
  // Token bucket: sustained requests per second and burst size.
  double requests_per_second = 2.0;
  int burst = 4;
  // JSONL exchange log; empty disables logging.
  std::filesystem::path exchange_log;

  void validate() const;  // throws ArgumentError
  static LLMConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

class TokenBucket {
 public:
  TokenBucket(double rate_per_s, int burst);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::mutex mu_;
  double rate_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
};

// OpenAI-compatible chat-completions client. Retries 429, 5xx and transport
// failures with exponential backoff (initial_backoff_s, doubled per retry);
// other non-2xx statuses raise ProviderError immediately. Exhausted retries
// raise TransportError. The API key is read from the environment on each
// call and never logged.
class HttpLLMClient final : public LLMClient {
 public:
  explicit HttpLLMClient(LLMConfig config);
  std::string chat(const std::string& prompt, const ChatOptions& options = {}) override;
  const LLMConfig& config() const { return config_; }

 private:
  void log_exchange(const ChatExchange& e);

  LLMConfig config_;
  TokenBucket bucket_;
  std::mutex log_mu_;
};

// The game-playing prompt for one observation.
std::string build_policy_prompt(int player_id, const std::string& observation);

// Trimmed contents of the last <move>...</move> pair; throws ParseError when
// no complete pair exists.
std::string parse_move(const std::string& response);

}  // namespace hforge::llm
