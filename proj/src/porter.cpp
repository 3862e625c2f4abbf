// Porter stemmer following the original 1980 rule set.

#include "memesent/textprep.hpp"

#include <array>
#include <span>

namespace memesent::textprep {

namespace {

class PorterWord {
 public:
  explicit PorterWord(std::string w) : w_(std::move(w)) {}

  std::string take() && { return std::move(w_); }

  bool ends_with(std::string_view s) const { return std::string_view(w_).ends_with(s); }

  // Measure of the first `len` letters: the m in [C](VC)^m[V].
  int measure(std::size_t len) const {
    int m = 0;
    std::size_t i = 0;
    while (i < len && consonant(i)) ++i;
    while (i < len) {
      while (i < len && !consonant(i)) ++i;
      if (i >= len) break;
      while (i < len && consonant(i)) ++i;
      ++m;
    }
    return m;
  }

  bool has_vowel(std::size_t len) const {
    for (std::size_t i = 0; i < len; ++i) {
      if (!consonant(i)) return true;
    }
    return false;
  }

  bool double_consonant(std::size_t len) const {
    return len >= 2 && w_[len - 1] == w_[len - 2] && consonant(len - 1);
  }

  // consonant-vowel-consonant ending at len, last letter not w, x or y.
  bool cvc(std::size_t len) const {
    if (len < 3) return false;
    if (!consonant(len - 1) || consonant(len - 2) || !consonant(len - 3)) return false;
    const char c = w_[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
  }

  std::size_t size() const { return w_.size(); }
  char back() const { return w_.back(); }
  char char_at(std::size_t i) const { return w_[i]; }

  void replace_suffix(std::size_t suffix_len, std::string_view with) {
    w_.resize(w_.size() - suffix_len);
    w_.append(with);
  }

 private:
  bool consonant(std::size_t i) const {
    switch (w_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 || !consonant(i - 1);
      default: return true;
    }
  }

  std::string w_;
};

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
};

// Applies the first rule whose suffix matches when the stem measure exceeds
// `min_measure`; a matching rule whose condition fails ends the step.
bool apply_measure_rules(PorterWord& w, std::span<const Rule> rules, int min_measure) {
  for (const auto& r : rules) {
    if (!w.ends_with(r.suffix)) continue;
    const std::size_t stem_len = w.size() - r.suffix.size();
    if (w.measure(stem_len) > min_measure) w.replace_suffix(r.suffix.size(), r.replacement);
    return true;
  }
  return false;
}

void step1a(PorterWord& w) {
  if (w.ends_with("sses")) w.replace_suffix(4, "ss");
  else if (w.ends_with("ies")) w.replace_suffix(3, "i");
  else if (w.ends_with("ss")) return;
  else if (w.ends_with("s")) w.replace_suffix(1, "");
}

void step1b(PorterWord& w) {
  bool cleanup = false;
  if (w.ends_with("eed")) {
    if (w.measure(w.size() - 3) > 0) w.replace_suffix(3, "ee");
    return;
  }
  if (w.ends_with("ed") && w.has_vowel(w.size() - 2)) {
    w.replace_suffix(2, "");
    cleanup = true;
  } else if (w.ends_with("ing") && w.has_vowel(w.size() - 3)) {
    w.replace_suffix(3, "");
    cleanup = true;
  }
  if (!cleanup) return;

  if (w.ends_with("at")) w.replace_suffix(2, "ate");
  else if (w.ends_with("bl")) w.replace_suffix(2, "ble");
  else if (w.ends_with("iz")) w.replace_suffix(2, "ize");
  else if (w.double_consonant(w.size())) {
    const char c = w.back();
    if (c != 'l' && c != 's' && c != 'z') w.replace_suffix(1, "");
  } else if (w.measure(w.size()) == 1 && w.cvc(w.size())) {
    w.replace_suffix(0, "e");
  }
}

void step1c(PorterWord& w) {
  if (w.ends_with("y") && w.has_vowel(w.size() - 1)) w.replace_suffix(1, "i");
}

void step2(PorterWord& w) {
  static constexpr std::array<Rule, 20> rules = {{
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},
      {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},     {"entli", "ent"},
      {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
  }};
  apply_measure_rules(w, rules, 0);
}

void step3(PorterWord& w) {
  static constexpr std::array<Rule, 7> rules = {{
      {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
      {"ical", "ic"},  {"ful", ""},   {"ness", ""},
  }};
  apply_measure_rules(w, rules, 0);
}

void step4(PorterWord& w) {
  static constexpr std::array<std::string_view, 19> suffixes = {
      "al",   "ance", "ence", "er",  "ic", "able", "ible", "ant", "ement", "ment",
      "ent",  "ion",  "ou",   "ism", "ate", "iti", "ous",  "ive", "ize"};
  // Longest match wins: "ement" before "ment" before "ent".
  std::string_view best;
  for (auto s : suffixes) {
    if (w.ends_with(s) && s.size() > best.size()) best = s;
  }
  if (best.empty()) return;
  const std::size_t stem_len = w.size() - best.size();
  if (w.measure(stem_len) <= 1) return;
  // (m>1 and (*S or *T)) ION
  if (best == "ion" && !(w.char_at(stem_len - 1) == 's' || w.char_at(stem_len - 1) == 't')) return;
  w.replace_suffix(best.size(), "");
}

void step5(PorterWord& w) {
  if (w.ends_with("e")) {
    const std::size_t stem_len = w.size() - 1;
    const int m = w.measure(stem_len);
    if (m > 1 || (m == 1 && !w.cvc(stem_len))) w.replace_suffix(1, "");
  }
  if (w.measure(w.size()) > 1 && w.double_consonant(w.size()) && w.back() == 'l') {
    w.replace_suffix(1, "");
  }
}

}  // namespace

std::string porter_stem(std::string_view token) {
  if (token.empty()) throw InputError("stem: empty token");
  for (char c : token) {
    if (c < 'a' || c > 'z') throw InputError("stem: token must match [a-z]+");
  }
  PorterWord w{std::string(token)};
  step1a(w);
  step1b(w);
  step1c(w);
  step2(w);
  step3(w);
  step4(w);
  step5(w);
  return std::move(w).take();
}

std::string stem(std::string_view token, Stemmer stemmer) {
  if (stemmer == Stemmer::none) {
    for (char c : token) {
      if (c < 'a' || c > 'z') throw InputError("stem: token must match [a-z]+");
    }
    if (token.empty()) throw InputError("stem: empty token");
    return std::string(token);
  }
  return porter_stem(token);
}

std::string stem_to_fixpoint(std::string_view token, Stemmer stemmer) {
  std::string current(token);
  for (;;) {
    std::string next = stem(current, stemmer);
    if (next == current) return current;
    current = std::move(next);
  }
}

}  // namespace memesent::textprep
