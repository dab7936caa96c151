#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsageError = 2;

// Entry point behind the `hforge` binary. Commands: train, eval, play,
// list-envs, replay.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "a.b.c=value" -> {"a": {"b": {"c": value}}}. The value is parsed as JSON
// when possible and kept as a string otherwise. Throws UsageError.
nlohmann::json parse_override(const std::string& assignment);

nlohmann::json default_eval_config_json();

}  // namespace hforge::cli
