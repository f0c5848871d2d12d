#include "cgl/policy.hpp"

#include "cgl/error.hpp"

namespace cgl {

void FlexibilityPolicy::normalize() {
  for (AcceptTable* t : {&selection, &click}) {
    for (const auto& [key, p] : *t) {
      if (key.first < 0 || key.second < 0) throw ConfigError("acceptance keys must be non-negative counts");
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("acceptance probability must lie in [0, 1]");
    }
    (*t)[{0, 0}] = 1.0;
  }
}

double FlexibilityPolicy::lookup(const AcceptTable& table, int missed, int wrong) {
  if (missed == 0 && wrong == 0) return 1.0;
  auto it = table.find({missed, wrong});
  return it == table.end() ? 0.0 : it->second;
}

const std::vector<ClickFlexibilityRow>& click_flexibility_rows() {
  static const std::vector<ClickFlexibilityRow> kRows = {
      {"3-correct-1-wrong", 3, 1, 0, 0.00}, {"4-correct-1-wrong", 4, 1, 0, 0.02}, {"5-correct-1-wrong", 5, 1, 0, 0.00},
      {"6-correct-1-wrong", 6, 1, 0, 0.06}, {"6-correct-2-wrong", 6, 2, 0, 0.00}, {"3-of-4-correct", 3, 0, 1, 0.00},
      {"4-of-5-correct", 4, 0, 1, 0.00},    {"5-of-6-correct", 5, 0, 1, 0.02},
  };
  return kRows;
}

FlexibilityPolicy strict_policy() {
  FlexibilityPolicy p{"strict", {}, {}};
  p.normalize();
  return p;
}

FlexibilityPolicy easiest_policy() {
  FlexibilityPolicy p{"easiest", {{{1, 0}, 0.3}, {{0, 1}, 0.3}}, {}};
  p.normalize();
  return p;
}

FlexibilityPolicy click_row_policy(const ClickFlexibilityRow& row) {
  FlexibilityPolicy p{row.name, {}, {}};
  if (row.missed != 0 || row.wrong != 0) p.click[{row.missed, row.wrong}] = row.rate;
  p.normalize();
  return p;
}

FlexibilityPolicy builtin_policy(std::string_view name) {
  if (name == "strict") return strict_policy();
  if (name == "easiest") return easiest_policy();
  std::string_view row_name = name;
  if (row_name.starts_with("table5:")) row_name.remove_prefix(7);
  for (const auto& row : click_flexibility_rows())
    if (row.name == row_name) return click_row_policy(row);
  throw ConfigError("unknown policy preset: " + std::string(name));
}

std::vector<std::string> builtin_policy_names() {
  std::vector<std::string> names = {"strict", "easiest"};
  for (const auto& row : click_flexibility_rows()) names.push_back("table5:" + row.name);
  return names;
}

}  // namespace cgl
