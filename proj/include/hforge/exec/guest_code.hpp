#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hforge::exec {

inline constexpr std::string_view kProposeAction = "propose_action";
inline constexpr std::string_view kIsLegalAction = "is_legal_action";

enum class HarnessFlavor { verifier, policy };

// Canonical function signatures shown to the refiner. The policy flavor
// differs only in the propose_action docstring summary line.
const std::string& code_signatures(HarnessFlavor flavor);

// Root hypothesis: the signatures with bodies that raise NotImplementedError.
const std::string& stub_code(HarnessFlavor flavor);

struct FunctionBlock {
  std::string name;
  std::string text;  // "def" line through the last body line
  std::string body;  // body lines without the docstring
};

// Top-level (column 0) Python function definitions, in source order.
std::vector<FunctionBlock> top_level_functions(std::string_view code);

// Cheap structural check: balanced brackets outside strings and comments,
// and every top-level "def" header terminated by ':'. Returns a message on
// failure.
std::optional<std::string> structural_syntax_error(std::string_view code);

// Root modules named by "import x" / "from x import ..." statements.
std::vector<std::string> imported_modules(std::string_view code);

// True when the function body (docstring removed) is only a
// `raise NotImplementedError(...)` statement.
bool is_unimplemented_stub(const FunctionBlock& fn);

}  // namespace hforge::exec
