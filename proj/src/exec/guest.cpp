#include "hforge/exec/guest.hpp"

#include <array>
#include <utility>

#include "hforge/errors.hpp"

namespace hforge::exec {
namespace {
constexpr std::array<std::pair<ErrorKind, std::string_view>, 6> kNames = {{
    {ErrorKind::compile_error, "compile-error"},
    {ErrorKind::missing_function, "missing-function"},
    {ErrorKind::guest_exception, "guest-exception"},
    {ErrorKind::timeout, "timeout"},
    {ErrorKind::protocol_error, "protocol-error"},
    {ErrorKind::resource_limit, "resource-limit"},
}};
}  // namespace

std::string_view to_string(ErrorKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "protocol-error";
}

std::optional<ErrorKind> error_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

std::vector<std::string> ExecLimits::default_import_allowlist() {
  return {"collections", "copy",   "dataclasses", "functools", "heapq", "itertools",
          "math",        "numpy",  "random",      "re",        "string", "typing"};
}

void ExecLimits::validate() const {
  if (!(call_timeout_s > 0) || !(load_timeout_s > 0) || memory_cap_bytes == 0)
    throw ArgumentError("executor limits must be positive");
  if (import_allowlist.empty()) throw ArgumentError("import allowlist must not be empty");
}

}  // namespace hforge::exec
