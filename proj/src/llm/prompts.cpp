#include <string_view>

#include "hforge/errors.hpp"
#include "hforge/llm/client.hpp"
#include "hforge/util.hpp"

namespace hforge::llm {
namespace {

constexpr std::string_view kPolicyHead =
    "You are an expert, logical, and strategic AI game player. Your task is to analyze the following "
    "game information and determine the single best move to make.\n"
    "\n"
    "Read the game rules, your player role, the current game state, and all available moves "
    "carefully. Your objective is to play optimally to maximize your chances of winning the game.\n"
    "\n"
    "You are now player ";

constexpr std::string_view kPolicyMiddle = ".\n\nThe game information is as follows:\n";

constexpr std::string_view kPolicyTail =
    "\n"
    "\n"
    "**YOUR TASK:**\n"
    "\n"
    "You must now analyze the situation and provide your move. Follow these two steps precisely.\n"
    "\n"
    "**Step 1: Think**\n"
    "First, provide your step-by-step reasoning. Analyze the current game state, your goal, and the "
    "available moves. Evaluate the pros and cons of the most promising options and explain why you "
    "are selecting your final move.\n"
    "\n"
    "**Step 2: Move**\n"
    "After your thinking block, provide *only* the single best move you have chosen. The move must "
    "be one of the valid moves listed in the game information.\n"
    "\n"
    "Enclose your final move in `<move></move>` tags. Do not add any other text, explanation, or "
    "punctuation after the closing `</move>` tag.\n"
    "\n"
    "Example of a correct response format:\n"
    "<move>\n"
    "[Your chosen move]\n"
    "</move>\n";

}  // namespace

std::string build_policy_prompt(int player_id, const std::string& observation) {
  std::string out;
  out.reserve(kPolicyHead.size() + observation.size() + kPolicyTail.size() + 64);
  out += kPolicyHead;
  out += std::to_string(player_id);
  out += kPolicyMiddle;
  out += observation;
  out += kPolicyTail;
  return out;
}

std::string parse_move(const std::string& response) {
  constexpr std::string_view open = "<move>", close = "</move>";
  auto end = response.rfind(close);
  if (end == std::string::npos) throw ParseError("response has no </move> tag");
  auto begin = response.rfind(open, end);
  if (begin == std::string::npos) throw ParseError("response has an unbalanced </move> tag");
  begin += open.size();
  return trim(std::string_view(response).substr(begin, end - begin));
}

}  // namespace hforge::llm
