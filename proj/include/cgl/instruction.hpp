#pragma once

#include <string>
#include <string_view>

#include "cgl/challenge.hpp"

namespace cgl {

inline constexpr std::string_view kClickSentinel = "click verify once there are none left";

struct Instruction {
  std::string raw_text;
  std::string target_label;  // lowercase singular
  ChallengeKind kind_hint = ChallengeKind::selection;
};

// The second line names the target. Leading articles are dropped and the
// noun is singularized. kind_hint is click iff the sentinel phrase appears
// anywhere (case-insensitive). Throws ParseError on fewer than two lines or
// an empty second line.
Instruction parse_instruction(std::string_view text);

// Lowercases, collapses whitespace and singularizes the last word. Unknown
// words pass through the generic English rules; idempotent.
std::string singularize(std::string_view phrase);
std::string pluralize(std::string_view label);

// Widget text for a challenge: header line, plural target, and the sentinel
// line for click challenges.
std::string instruction_text(const Challenge& challenge);

}  // namespace cgl
