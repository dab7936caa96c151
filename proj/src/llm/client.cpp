#include "hforge/llm/client.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include "hforge/errors.hpp"
#include "hforge/util.hpp"

namespace hforge::llm {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ArgumentError("invalid endpoint url: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

bool transient_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

json to_json(const ChatExchange& e) {
  json j = {{"prompt", e.prompt}, {"response", e.response}, {"latency_s", e.latency_s}};
  j["input_tokens"] = e.input_tokens ? json(*e.input_tokens) : json(nullptr);
  j["output_tokens"] = e.output_tokens ? json(*e.output_tokens) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------

ScriptedLLMClient& ScriptedLLMClient::on_prompt_hash(std::string hash, std::string reply) {
  by_hash_[std::move(hash)] = std::move(reply);
  return *this;
}

ScriptedLLMClient& ScriptedLLMClient::on_prompt(const std::string& prompt, std::string reply) {
  return on_prompt_hash(hex_hash(prompt), std::move(reply));
}

ScriptedLLMClient& ScriptedLLMClient::on_sequence(std::uint64_t sequence, std::string reply) {
  by_sequence_[sequence] = std::move(reply);
  return *this;
}

ScriptedLLMClient& ScriptedLLMClient::otherwise(std::string reply) {
  default_ = std::move(reply);
  return *this;
}

ScriptedLLMClient& ScriptedLLMClient::respond_with(
    std::function<std::string(const std::string&, const ChatOptions&)> fn) {
  responder_ = std::move(fn);
  return *this;
}

std::unique_ptr<ScriptedLLMClient> ScriptedLLMClient::from_json(const json& j) {
  auto client = std::make_unique<ScriptedLLMClient>();
  auto& c = *client;
  if (!j.is_object()) throw ArgumentError("scripted llm config must be an object");
  for (auto& [k, v] : j.items()) {
    if (k == "by_hash") {
      for (auto& [h, r] : v.items()) c.on_prompt_hash(h, r.get<std::string>());
    } else if (k == "by_sequence") {
      for (auto& [s, r] : v.items()) {
        std::size_t used = 0;
        std::uint64_t seq = 0;
        try {
          seq = std::stoull(s, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != s.size() || s.empty()) throw ArgumentError("by_sequence key is not an integer: " + s);
        c.on_sequence(seq, r.get<std::string>());
      }
    } else if (k == "default") {
      c.otherwise(v.get<std::string>());
    } else {
      throw ArgumentError("unknown scripted llm key: " + k);
    }
  }
  return client;
}

std::string ScriptedLLMClient::chat(const std::string& prompt, const ChatOptions& options) {
  ++calls_;
  std::string reply;
  if (responder_) {
    reply = responder_(prompt, options);
  } else if (auto h = by_hash_.find(hex_hash(prompt)); h != by_hash_.end()) {
    reply = h->second;
  } else if (auto s = by_sequence_.find(options.sequence); s != by_sequence_.end()) {
    reply = s->second;
  } else if (default_) {
    reply = *default_;
  } else {
    throw TransportError("scripted client has no reply for prompt " + hex_hash(prompt) +
                         " (sequence " + std::to_string(options.sequence) + ")");
  }
  std::lock_guard lock(mu_);
  exchanges_.push_back({prompt, reply, 0.0, std::nullopt, std::nullopt});
  return reply;
}

std::vector<ChatExchange> ScriptedLLMClient::exchanges() const {
  std::lock_guard lock(mu_);
  return exchanges_;
}

// ---------------------------------------------------------------------------

void LLMConfig::validate() const {
  if (max_retries < 0) throw ArgumentError("max_retries must be >= 0");
  if (!(request_timeout_s > 0)) throw ArgumentError("request_timeout must be > 0");
  if (max_output_tokens <= 0) throw ArgumentError("max_output_tokens must be > 0");
  if (!(initial_backoff_s >= 0)) throw ArgumentError("initial_backoff must be >= 0");
  if (!(requests_per_second > 0) || burst <= 0) throw ArgumentError("rate limit must be positive");
  parse_url(endpoint_url);
}

LLMConfig LLMConfig::from_json(const json& j) {
  LLMConfig c;
  c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
  c.model_name = j.value("model_name", c.model_name);
  c.temperature = j.value("temperature", c.temperature);
  c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
  c.request_timeout_s = j.value("request_timeout_s", c.request_timeout_s);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.api_key_env_var = j.value("api_key_env_var", c.api_key_env_var);
  c.initial_backoff_s = j.value("initial_backoff_s", c.initial_backoff_s);
  c.requests_per_second = j.value("requests_per_second", c.requests_per_second);
  c.burst = j.value("burst", c.burst);
  c.exchange_log = j.value("exchange_log", std::string());
  c.validate();
  return c;
}

json LLMConfig::to_json() const {
  return {{"endpoint_url", endpoint_url},
          {"model_name", model_name},
          {"temperature", temperature},
          {"max_output_tokens", max_output_tokens},
          {"request_timeout_s", request_timeout_s},
          {"max_retries", max_retries},
          {"api_key_env_var", api_key_env_var},
          {"initial_backoff_s", initial_backoff_s},
          {"requests_per_second", requests_per_second},
          {"burst", burst},
          {"exchange_log", exchange_log.string()}};
}

TokenBucket::TokenBucket(double rate_per_s, int burst)
    : rate_(rate_per_s), capacity_(burst), tokens_(burst), last_(Clock::now()) {}

void TokenBucket::acquire() {
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mu_);
      auto now = Clock::now();
      tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

HttpLLMClient::HttpLLMClient(LLMConfig config)
    : config_(std::move(config)), bucket_(config_.requests_per_second, config_.burst) {
  config_.validate();
}

std::string HttpLLMClient::chat(const std::string& prompt, const ChatOptions& options) {
  const auto url = parse_url(config_.endpoint_url);
  const json body = {
      {"model", config_.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", options.temperature.value_or(config_.temperature)},
      {"max_tokens", config_.max_output_tokens},
  };
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env_var.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  const auto timeout = std::chrono::duration<double>(config_.request_timeout_s);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      double backoff = config_.initial_backoff_s * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    }
    bucket_.acquire();
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout_us);
    client.set_read_timeout(timeout_us);
    client.set_write_timeout(timeout_us);
    const auto start = Clock::now();
    auto res = client.Post(url.path, headers, payload, "application/json");
    const double latency = std::chrono::duration<double>(Clock::now() - start).count();
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (transient_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status > 299)
      throw ProviderError(res->status, "provider returned HTTP " + std::to_string(res->status) + ": " +
                                           res->body.substr(0, 500));
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty())
      throw ProviderError(res->status, "malformed chat-completions response");
    const auto& message = reply["choices"][0].value("message", json::object());
    if (!message.contains("content") || !message["content"].is_string())
      throw ProviderError(res->status, "chat-completions response has no text content");

    ChatExchange ex{prompt, message["content"].get<std::string>(), latency, std::nullopt, std::nullopt};
    if (reply.contains("usage") && reply["usage"].is_object()) {
      const auto& u = reply["usage"];
      if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_integer())
        ex.input_tokens = u["prompt_tokens"].get<std::int64_t>();
      if (u.contains("completion_tokens") && u["completion_tokens"].is_number_integer())
        ex.output_tokens = u["completion_tokens"].get<std::int64_t>();
    }
    log_exchange(ex);
    return ex.response;
  }
  throw TransportError("chat request failed after " + std::to_string(config_.max_retries + 1) +
                       " attempts: " + last_error);
}

void HttpLLMClient::log_exchange(const ChatExchange& e) {
  if (config_.exchange_log.empty()) return;
  json j = to_json(e);
  j["model"] = config_.model_name;
  std::lock_guard lock(log_mu_);
  append_file(config_.exchange_log, j.dump() + "\n");
}

}  // namespace hforge::llm
