#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hforge/exec/guest.hpp"

namespace hforge::exec {

// Launch settings for an external guest worker speaking the JSON-lines
// protocol on its stdin/stdout:
//
//   request:  {"id": int, "op": "ping"|"load"|"propose_action"|"is_legal_action",
//              "code"?: str, "board"?: str, "action"?: str, "rng_seed"?: int}
//   response: {"id": int, "ok": bool, "value"?: ..., "error_kind"?: str,
//              "error_message"?: str, "traceback"?: str}
//
// Each argv element may contain "{game_id}", substituted at launch. The
// import allowlist is passed in GUEST_IMPORT_ALLOWLIST (comma-separated) and
// the memory cap is applied with RLIMIT_AS before exec.
struct ProcessExecutorConfig {
  std::vector<std::string> argv;
  ExecLimits limits;
};

class ProcessSession final : public GuestSession {
 public:
  // Starts the worker and completes a ping handshake; throws
  // InfrastructureError when either fails.
  ProcessSession(ProcessExecutorConfig config, std::string game_id);
  ~ProcessSession() override;
  ProcessSession(const ProcessSession&) = delete;
  ProcessSession& operator=(const ProcessSession&) = delete;

  GuestResult ping() override;
  GuestResult load_code(std::string_view code) override;
  GuestResult propose_action(std::string_view board,
                             std::optional<std::uint64_t> rng_seed = std::nullopt) override;
  GuestResult is_legal_action(std::string_view board, std::string_view action) override;

  int restarts() const { return restarts_; }
  int worker_pid() const { return pid_; }

 private:
  enum class Expect { none, string, boolean };

  void launch();
  void terminate_worker();
  // Kills and relaunches the worker, then reloads the current code.
  void restart();
  GuestResult exchange(const std::string& op, const std::string& payload_json, double timeout_s,
                       Expect expect);

  ProcessExecutorConfig config_;
  std::string game_id_;
  int pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  long long next_id_ = 1;
  std::optional<std::string> code_;
  int restarts_ = 0;
  bool reloading_ = false;
};

ExecutorFactory process_executor(ProcessExecutorConfig config);

}  // namespace hforge::exec
