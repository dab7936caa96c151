#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hforge/exec/guest.hpp"
#include "hforge/exec/guest_code.hpp"

namespace hforge::exec {

// Reads the legal action set of a built-in game from its observation text
// alone. This is the board parser behind the oracle fixture harness; it does
// not consult any environment. Returns nullopt when the text cannot be parsed.
std::optional<std::vector<std::string>> legal_actions_from_board(std::string_view game_id,
                                                                 std::string_view board);

// In-process stand-in for a guest code host. Guest "code" selects a C++
// behaviour through a directive comment:
//
//   # scripted-harness: oracle
//   # scripted-harness: propose=const:[999]; legal=true
//
// propose rules: oracle | first | const:<action> | raise:<message> | hang
// legal rules:   oracle | true | false | raise:<message> | hang | string:<text>
//
// "oracle" reads the legal set from the board text; oracle propose samples it
// uniformly with the call's rng seed. Code without a directive behaves like
// Python would for the canonical stubs (NotImplementedError) and raises a
// guest exception for any other body it cannot interpret.
struct ScriptedBehavior {
  std::string propose = "oracle";
  std::string legal = "oracle";
};

// Throws ParseError on an unknown rule.
std::optional<ScriptedBehavior> parse_scripted_directive(std::string_view code);

// Full guest code text (both functions) carrying a directive.
std::string scripted_harness_code(std::string_view directive,
                                  HarnessFlavor flavor = HarnessFlavor::verifier);

// Oracle-exact fixture harness for any built-in game.
std::string oracle_fixture_code(HarnessFlavor flavor = HarnessFlavor::verifier);

class ScriptedSession final : public GuestSession {
 public:
  ScriptedSession(std::string game_id, ExecLimits limits = {});

  GuestResult ping() override;
  GuestResult load_code(std::string_view code) override;
  GuestResult propose_action(std::string_view board,
                             std::optional<std::uint64_t> rng_seed = std::nullopt) override;
  GuestResult is_legal_action(std::string_view board, std::string_view action) override;

  std::size_t call_count() const { return calls_; }

 private:
  GuestResult unloaded_call(std::string_view fn) const;

  std::string game_id_;
  ExecLimits limits_;
  bool loaded_ = false;
  std::optional<ScriptedBehavior> behavior_;
  bool propose_stub_ = false;
  bool legal_stub_ = false;
  std::uint64_t default_seed_state_ = 0;
  std::size_t calls_ = 0;
};

ExecutorFactory scripted_executor(ExecLimits limits = {});

}  // namespace hforge::exec
