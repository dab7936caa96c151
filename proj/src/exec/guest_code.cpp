#include "hforge/exec/guest_code.hpp"

#include <algorithm>

#include "hforge/util.hpp"

namespace hforge::exec {
namespace {

constexpr std::string_view kVerifierSignatures = R"sig(def propose_action(board: str) -> str:
  """Propose a valid random action given the game board as text

  Args:
      board (str): Game board as text.

  Returns:
      str: A valid random action as string.

  Raises:
      Exception: If fail to propose a valid random action.
  """
  raise NotImplementedError()

def is_legal_action(board: str, action: str) -> bool:
  """Check if an action string is valid given the game board as text

  Args:
      board (str): Game board as text.
      action (str): Input action as string.

  Returns:
      bool: If the input action string is valid.

  Raises:
      Exception: If fail to check if the action string is valid.
  """
  raise NotImplementedError()
)sig";

constexpr std::string_view kVerifierSummary =
    "Propose a valid random action given the game board as text";
constexpr std::string_view kPolicySummary =
    "Propose one of the best legal actions given the game board as text such that the final "
    "reward is maximized.";

std::string make_policy_signatures() {
  std::string s(kVerifierSignatures);
  s.replace(s.find(kVerifierSummary), kVerifierSummary.size(), kPolicySummary);
  return s;
}

}  // namespace

const std::string& code_signatures(HarnessFlavor flavor) {
  static const std::string verifier(kVerifierSignatures);
  static const std::string policy = make_policy_signatures();
  return flavor == HarnessFlavor::verifier ? verifier : policy;
}

const std::string& stub_code(HarnessFlavor flavor) { return code_signatures(flavor); }

std::vector<FunctionBlock> top_level_functions(std::string_view code) {
  std::vector<FunctionBlock> out;
  auto lines = split_lines(code);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!starts_with(lines[i], "def ")) continue;
    FunctionBlock fn;
    auto paren = lines[i].find('(');
    fn.name = trim(lines[i].substr(4, paren == std::string::npos ? std::string::npos : paren - 4));
    std::size_t end = i + 1;
    // The block runs until the next non-blank, non-indented, non-comment line.
    while (end < lines.size()) {
      const auto& l = lines[end];
      if (!l.empty() && l[0] != ' ' && l[0] != '\t' && trim(l) != "" && l[0] != '#' &&
          l[0] != ')')
        break;
      ++end;
    }
    std::size_t last = end;
    while (last > i + 1 && trim(lines[last - 1]).empty()) --last;
    std::vector<std::string> block(lines.begin() + static_cast<long>(i),
                                   lines.begin() + static_cast<long>(last));
    fn.text = join(block, "\n");

    // Body: skip header continuation lines, then an optional docstring.
    std::size_t b = i;
    while (b < last && trim(lines[b]).empty() == false && trim(lines[b]).back() != ':') ++b;
    ++b;
    std::vector<std::string> body;
    bool in_doc = false;
    bool doc_done = false;
    for (std::size_t k = b; k < last; ++k) {
      auto t = trim(lines[k]);
      if (!doc_done && !in_doc && (starts_with(t, "\"\"\"") || starts_with(t, "'''"))) {
        auto quote = t.substr(0, 3);
        if (t.size() >= 6 && t.rfind(quote) > 2) {
          doc_done = true;
        } else {
          in_doc = true;
        }
        continue;
      }
      if (in_doc) {
        if (t.find("\"\"\"") != std::string::npos || t.find("'''") != std::string::npos) {
          in_doc = false;
          doc_done = true;
        }
        continue;
      }
      if (!t.empty()) doc_done = true;
      body.push_back(lines[k]);
    }
    fn.body = join(body, "\n");
    out.push_back(std::move(fn));
    i = end - 1;
  }
  return out;
}

std::optional<std::string> structural_syntax_error(std::string_view code) {
  std::vector<char> stack;
  int line = 1;
  std::size_t i = 0;
  auto closing_for = [](char open) { return open == '(' ? ')' : open == '[' ? ']' : '}'; };
  while (i < code.size()) {
    char c = code[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (c == '#') {
      while (i < code.size() && code[i] != '\n') ++i;
    } else if (c == '"' || c == '\'') {
      bool triple = code.substr(i, 3) == std::string(3, c);
      std::size_t len = triple ? 3 : 1;
      std::size_t j = i + len;
      bool closed = false;
      while (j < code.size()) {
        if (code[j] == '\\') {
          j += 2;
          continue;
        }
        if (!triple && code[j] == '\n') break;
        if (code.substr(j, len) == std::string(len, c)) {
          closed = true;
          break;
        }
        if (code[j] == '\n') ++line;
        ++j;
      }
      if (!closed) return "unterminated string literal (line " + std::to_string(line) + ")";
      i = j + len;
    } else if (c == '(' || c == '[' || c == '{') {
      stack.push_back(c);
      ++i;
    } else if (c == ')' || c == ']' || c == '}') {
      if (stack.empty() || closing_for(stack.back()) != c)
        return std::string("unmatched '") + c + "' (line " + std::to_string(line) + ")";
      stack.pop_back();
      ++i;
    } else {
      ++i;
    }
  }
  if (!stack.empty()) return std::string("'") + stack.back() + "' was never closed";

  auto lines = split_lines(code);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (!starts_with(lines[k], "def ")) continue;
    // Header may continue over several lines until the parentheses close.
    int depth = 0;
    std::size_t h = k;
    for (; h < lines.size(); ++h) {
      for (char ch : lines[h]) depth += ch == '(' ? 1 : ch == ')' ? -1 : 0;
      if (depth <= 0) break;
    }
    if (h >= lines.size()) return "incomplete function header (line " + std::to_string(k + 1) + ")";
    auto header_end = lines[h];
    auto hash = header_end.find('#');
    if (hash != std::string::npos) header_end = header_end.substr(0, hash);
    auto t = trim(header_end);
    if (t.empty() || t.back() != ':')
      return "expected ':' after function header (line " + std::to_string(h + 1) + ")";
  }
  return std::nullopt;
}

std::vector<std::string> imported_modules(std::string_view code) {
  std::vector<std::string> out;
  auto root_of = [](std::string name) {
    name = trim(name);
    auto dot = name.find('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    auto sp = name.find(' ');
    if (sp != std::string::npos) name = name.substr(0, sp);
    return name;
  };
  for (const auto& raw : split_lines(code)) {
    auto l = trim(raw);
    if (starts_with(l, "import ")) {
      std::string rest = l.substr(7);
      std::size_t pos = 0;
      while (pos <= rest.size()) {
        auto comma = rest.find(',', pos);
        auto piece = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        auto name = root_of(piece);
        if (!name.empty()) out.push_back(name);
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    } else if (starts_with(l, "from ")) {
      auto name = root_of(l.substr(5));
      if (!name.empty() && name[0] != '.') out.push_back(name);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool is_unimplemented_stub(const FunctionBlock& fn) {
  auto body = trim(fn.body);
  if (!starts_with(body, "raise NotImplementedError")) return false;
  auto rest = trim(std::string_view(body).substr(std::string_view("raise NotImplementedError").size()));
  if (rest.empty()) return true;
  if (rest.front() != '(' || rest.back() != ')') return false;
  return std::none_of(rest.begin(), rest.end(), [](char c) { return c == '\n'; });
}

}  // namespace hforge::exec
