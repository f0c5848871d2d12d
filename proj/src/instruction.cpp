#include "cgl/instruction.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "cgl/categories.hpp"
#include "cgl/error.hpp"

namespace cgl {

namespace {

// Irregular or ambiguous plurals. Everything else goes through the rules.
const std::map<std::string, std::string, std::less<>>& plural_exceptions() {
  static const std::map<std::string, std::string, std::less<>> kTable = {
      {"buses", "bus"},       {"busses", "bus"},     {"taxis", "taxi"},       {"taxies", "taxi"},
      {"chimneys", "chimney"}, {"stairs", "stair"},  {"bicycles", "bicycle"}, {"motorcycles", "motorcycle"},
      {"statues", "statue"},  {"bridges", "bridge"}, {"people", "person"},    {"men", "man"},
      {"women", "woman"},     {"children", "child"}, {"mice", "mouse"},       {"geese", "goose"},
      {"feet", "foot"},       {"teeth", "tooth"},    {"leaves", "leaf"},      {"knives", "knife"},
  };
  return kTable;
}

const std::set<std::string, std::less<>>& known_singulars() {
  static const std::set<std::string, std::less<>> kSet = [] {
    std::set<std::string, std::less<>> s;
    for (const auto& [plural, single] : plural_exceptions()) s.insert(single);
    for (const Category& c : all_categories()) {
      std::string_view name = c.name;
      auto sp = name.rfind(' ');
      s.insert(std::string(sp == std::string_view::npos ? name : name.substr(sp + 1)));
    }
    return s;
  }();
  return kSet;
}

bool ends_with(std::string_view w, std::string_view suffix) { return w.ends_with(suffix); }

std::string singular_word(std::string w) {
  if (known_singulars().count(w)) return w;
  if (auto it = plural_exceptions().find(w); it != plural_exceptions().end()) return it->second;
  if (w.size() > 4 && ends_with(w, "ies")) return w.substr(0, w.size() - 3) + "y";
  for (std::string_view s : {"sses", "shes", "ches", "xes", "zes"})
    if (ends_with(w, s)) return w.substr(0, w.size() - 2);
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
  if (w.size() > 1 && w.back() == 's') return w.substr(0, w.size() - 1);
  return w;
}

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

std::string singularize(std::string_view phrase) {
  auto words = words_of(phrase);
  if (words.empty()) return {};
  words.back() = singular_word(words.back());
  return join(words);
}

std::string pluralize(std::string_view label) {
  auto words = words_of(label);
  if (words.empty()) return {};
  std::string& w = words.back();
  for (const auto& [plural, single] : plural_exceptions())
    if (single == w) {
      w = plural;
      return join(words);
    }
  if (w.size() > 1 && w.back() == 'y' && std::string_view("aeiou").find(w[w.size() - 2]) == std::string_view::npos) {
    w.back() = 'i';
    w += "es";
  } else if (ends_with(w, "s") || ends_with(w, "x") || ends_with(w, "z") || ends_with(w, "ch") ||
             ends_with(w, "sh")) {
    w += "es";
  } else {
    w += 's';
  }
  return join(words);
}

Instruction parse_instruction(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.size() < 2) throw ParseError("instruction needs at least two lines");

  auto words = words_of(lines[1]);
  if (!words.empty() && (words.front() == "a" || words.front() == "an" || words.front() == "the"))
    words.erase(words.begin());
  if (words.empty()) throw ParseError("instruction second line names no object");

  Instruction ins;
  ins.raw_text = std::string(text);
  ins.target_label = singularize(join(words));
  ins.kind_hint = join(words_of(text)).find(kClickSentinel) != std::string::npos ? ChallengeKind::click
                                                                                 : ChallengeKind::selection;
  return ins;
}

std::string instruction_text(const Challenge& ch) {
  std::string text = "Select all images with\n" + pluralize(ch.target_label);
  if (ch.kind == ChallengeKind::click) text += "\nClick verify once there are none left";
  return text;
}

}  // namespace cgl
