#include "hforge/exec/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <nlohmann/json.hpp>

#include "hforge/errors.hpp"
#include "hforge/util.hpp"

extern char** environ;

namespace hforge::exec {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string substitute(std::string s, const std::string& game_id) {
  const std::string key = "{game_id}";
  for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + game_id.size()))
    s.replace(pos, key.size(), game_id);
  return s;
}

}  // namespace

ProcessSession::ProcessSession(ProcessExecutorConfig config, std::string game_id)
    : config_(std::move(config)), game_id_(std::move(game_id)) {
  config_.limits.validate();
  if (config_.argv.empty()) throw InfrastructureError("process executor: empty argv");
  launch();
  auto pong = ping();
  if (!pong.ok) {
    terminate_worker();
    throw InfrastructureError("guest worker handshake failed: " + pong.error_message);
  }
}

ProcessSession::~ProcessSession() { terminate_worker(); }

void ProcessSession::launch() {
  // Everything the child needs is prepared before fork().
  std::vector<std::string> args;
  for (const auto& a : config_.argv) args.push_back(substitute(a, game_id_));
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  std::vector<std::string> env_strings;
  for (char** e = environ; *e; ++e)
    if (!starts_with(*e, "GUEST_IMPORT_ALLOWLIST=")) env_strings.emplace_back(*e);
  env_strings.push_back("GUEST_IMPORT_ALLOWLIST=" + join(config_.limits.import_allowlist, ","));
  std::vector<char*> envp;
  for (auto& e : env_strings) envp.push_back(e.data());
  envp.push_back(nullptr);

  int sv[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
    throw InfrastructureError(std::string("socketpair: ") + std::strerror(errno));
  int devnull = ::open("/dev/null", O_WRONLY | O_CLOEXEC);
  rlimit mem{static_cast<rlim_t>(config_.limits.memory_cap_bytes),
             static_cast<rlim_t>(config_.limits.memory_cap_bytes)};

  pid_t pid = fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    if (devnull >= 0) ::close(devnull);
    throw InfrastructureError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(sv[1], STDIN_FILENO);
    dup2(sv[1], STDOUT_FILENO);
    if (devnull >= 0) dup2(devnull, STDERR_FILENO);
    setrlimit(RLIMIT_AS, &mem);
    execvpe(argv[0], argv.data(), envp.data());
    _exit(127);
  }
  ::close(sv[1]);
  if (devnull >= 0) ::close(devnull);
  pid_ = pid;
  fd_ = sv[0];
  buffer_.clear();
}

void ProcessSession::terminate_worker() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void ProcessSession::restart() {
  terminate_worker();
  ++restarts_;
  launch();
  if (code_ && !reloading_) {
    reloading_ = true;
    json req = {{"code", *code_}};
    exchange("load", req.dump(), config_.limits.load_timeout_s, Expect::none);
    reloading_ = false;
  }
}

GuestResult ProcessSession::exchange(const std::string& op, const std::string& payload_json,
                                     double timeout_s, Expect expect) {
  if (fd_ < 0) return GuestResult::failure(ErrorKind::protocol_error, "worker is not running");
  json req = json::parse(payload_json);
  const long long id = next_id_++;
  req["id"] = id;
  req["op"] = op;
  std::string line = req.dump() + "\n";

  std::size_t sent = 0;
  while (sent < line.size()) {
    ssize_t n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      restart();
      return GuestResult::failure(ErrorKind::protocol_error, "worker closed its input");
    }
    sent += static_cast<std::size_t>(n);
  }

  const auto deadline = Clock::now() + std::chrono::duration<double>(timeout_s);
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      json resp = json::parse(reply, nullptr, false);
      if (resp.is_discarded() || !resp.is_object() || !resp.contains("id") || !resp.contains("ok"))
        return GuestResult::failure(ErrorKind::protocol_error, "malformed worker response: " + reply);
      if (!resp["id"].is_number_integer() || resp["id"].get<long long>() != id)
        return GuestResult::failure(ErrorKind::protocol_error, "response id mismatch: " + reply);
      if (!resp["ok"].is_boolean())
        return GuestResult::failure(ErrorKind::protocol_error, "non-boolean ok field");
      if (!resp["ok"].get<bool>()) {
        auto kind_name = resp.value("error_kind", std::string());
        auto kind = error_kind_from_string(kind_name).value_or(ErrorKind::protocol_error);
        return GuestResult::failure(kind, resp.value("error_message", std::string()),
                                    resp.value("traceback", std::string()));
      }
      const json value = resp.contains("value") ? resp["value"] : json();
      switch (expect) {
        case Expect::none:
          return GuestResult::success();
        case Expect::string:
          if (!value.is_string())
            return GuestResult::failure(ErrorKind::protocol_error,
                                        "propose_action returned a non-string value: " + value.dump());
          return GuestResult::action(value.get<std::string>());
        case Expect::boolean:
          if (!value.is_boolean())
            return GuestResult::failure(ErrorKind::protocol_error,
                                        "is_legal_action returned a non-boolean value: " + value.dump());
          return GuestResult::verdict(value.get<bool>());
      }
    }

    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (remaining.count() <= 0) {
      restart();
      return GuestResult::failure(ErrorKind::timeout,
                                  op + " exceeded the timeout of " + format_fixed(timeout_s, 1) + "s");
    }
    pollfd pfd{fd_, POLLIN, 0};
    int pr = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (pr < 0 && errno == EINTR) continue;
    if (pr <= 0) continue;
    char chunk[65536];
    ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
      std::string why = WIFSIGNALED(status) ? "killed by signal " + std::to_string(WTERMSIG(status))
                                            : "exited with status " + std::to_string(WEXITSTATUS(status));
      restart();
      return GuestResult::failure(ErrorKind::resource_limit, "guest worker " + why);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

GuestResult ProcessSession::ping() {
  return exchange("ping", "{}", config_.limits.load_timeout_s, Expect::none);
}

GuestResult ProcessSession::load_code(std::string_view code) {
  code_ = std::string(code);
  json req = {{"code", *code_}};
  return exchange("load", req.dump(), config_.limits.load_timeout_s, Expect::none);
}

GuestResult ProcessSession::propose_action(std::string_view board,
                                           std::optional<std::uint64_t> rng_seed) {
  json req = {{"board", std::string(board)}};
  if (rng_seed) req["rng_seed"] = *rng_seed;
  return exchange("propose_action", req.dump(), config_.limits.call_timeout_s, Expect::string);
}

GuestResult ProcessSession::is_legal_action(std::string_view board, std::string_view action) {
  json req = {{"board", std::string(board)}, {"action", std::string(action)}};
  return exchange("is_legal_action", req.dump(), config_.limits.call_timeout_s, Expect::boolean);
}

ExecutorFactory process_executor(ProcessExecutorConfig config) {
  config.limits.validate();
  return [config](const env::GameSpec& game) -> std::unique_ptr<GuestSession> {
    return std::make_unique<ProcessSession>(config, game.game_id);
  };
}

}  // namespace hforge::exec
