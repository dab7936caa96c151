#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hforge/env/game.hpp"

namespace hforge::exec {

enum class ErrorKind {
  compile_error,
  missing_function,
  guest_exception,
  timeout,
  protocol_error,
  resource_limit,
};

// Wire names: "compile-error", "missing-function", ...
std::string_view to_string(ErrorKind kind);
std::optional<ErrorKind> error_kind_from_string(std::string_view name);

struct GuestResult {
  bool ok = false;
  std::variant<std::monostate, std::string, bool> value;
  std::optional<ErrorKind> error_kind;
  std::string error_message;
  std::string traceback;

  static GuestResult success() { return {true, {}, std::nullopt, {}, {}}; }
  static GuestResult action(std::string a) { return {true, std::move(a), std::nullopt, {}, {}}; }
  static GuestResult verdict(bool v) { return {true, v, std::nullopt, {}, {}}; }
  static GuestResult failure(ErrorKind kind, std::string message, std::string traceback = {}) {
    return {false, {}, kind, std::move(message), std::move(traceback)};
  }

  const std::string* action_value() const { return std::get_if<std::string>(&value); }
  const bool* verdict_value() const { return std::get_if<bool>(&value); }
};

struct ExecLimits {
  double call_timeout_s = 5.0;
  double load_timeout_s = 10.0;
  std::uint64_t memory_cap_bytes = 512ULL * 1024 * 1024;
  std::vector<std::string> import_allowlist = default_import_allowlist();

  static std::vector<std::string> default_import_allowlist();
  void validate() const;  // throws ArgumentError
};

// One guest code host. A session serves one call at a time; distinct
// sessions are independent and may be used from different threads.
class GuestSession {
 public:
  virtual ~GuestSession() = default;
  virtual GuestResult ping() = 0;
  // Replaces any previously loaded code.
  virtual GuestResult load_code(std::string_view code) = 0;
  virtual GuestResult propose_action(std::string_view board,
                                     std::optional<std::uint64_t> rng_seed = std::nullopt) = 0;
  virtual GuestResult is_legal_action(std::string_view board, std::string_view action) = 0;
};

// Creates a started session for a game; throws InfrastructureError when the
// host cannot be brought up.
using ExecutorFactory = std::function<std::unique_ptr<GuestSession>(const env::GameSpec&)>;

}  // namespace hforge::exec
