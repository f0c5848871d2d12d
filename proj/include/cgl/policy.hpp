#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cgl {

// (missed, wrong) -> acceptance probability. Keys absent from a table accept
// with probability 0; (0, 0) always accepts.
using AcceptTable = std::map<std::pair<int, int>, double>;

struct FlexibilityPolicy {
  std::string name;
  AcceptTable selection;
  AcceptTable click;

  // Forces (0,0) -> 1 and validates every probability lies in [0, 1].
  void normalize();

  static double lookup(const AcceptTable& table, int missed, int wrong);
  double selection_accept(int missed, int wrong) const { return lookup(selection, missed, wrong); }
  double click_accept(int missed, int wrong) const { return lookup(click, missed, wrong); }

  friend bool operator==(const FlexibilityPolicy&, const FlexibilityPolicy&) = default;
};

// One measured row of the click-flexibility experiment: submitting `correct`
// target tiles and `wrong` non-target tiles, leaving `missed` targets
// unclicked, was accepted at `rate`.
struct ClickFlexibilityRow {
  std::string name;
  int correct = 0;
  int wrong = 0;
  int missed = 0;
  double rate = 0.0;
};

// The eight measured rows, in table order.
const std::vector<ClickFlexibilityRow>& click_flexibility_rows();

// Only exact solutions pass.
FlexibilityPolicy strict_policy();
// Occasionally accepts one missed or one wrong tile (30% each).
FlexibilityPolicy easiest_policy();
// Strict everywhere except the row's own (missed, wrong) cell for clicks.
FlexibilityPolicy click_row_policy(const ClickFlexibilityRow& row);

// "strict", "easiest", or a row name such as "6-correct-1-wrong" (optionally
// prefixed "table5:"). Throws ConfigError for unknown names.
FlexibilityPolicy builtin_policy(std::string_view name);
std::vector<std::string> builtin_policy_names();

}  // namespace cgl
