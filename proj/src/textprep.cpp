#include "memesent/textprep.hpp"

#include <fstream>
#include <sstream>

namespace memesent::textprep {

namespace {

// Decodes one UTF-8 code point at `pos`; malformed bytes decode as a single
// byte so the scan always advances.
char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t* len) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    *len = 1;
    return b0;
  }
  int n = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    n = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    n = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    n = 4;
    cp = b0 & 0x07;
  } else {
    *len = 1;
    return 0xFFFD;
  }
  for (int i = 1; i < n; ++i) {
    const int c = cont(static_cast<std::size_t>(i));
    if (c < 0) {
      *len = 1;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  *len = static_cast<std::size_t>(n);
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string collapse_spaces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string parse_sequence_column(std::string_view col) {
  if (!col.starts_with("U+") && !col.starts_with("u+")) return std::string(col);
  std::string out;
  std::istringstream in{std::string(col)};
  std::string part;
  while (in >> part) {
    if (part.size() < 3 || (part[0] != 'U' && part[0] != 'u') || part[1] != '+') {
      throw InputError("emoji lexicon: bad code point '" + part + "'");
    }
    const auto cp = static_cast<char32_t>(std::stoul(part.substr(2), nullptr, 16));
    append_utf8(out, cp);
  }
  return out;
}

}  // namespace

bool is_emoji_codepoint(char32_t cp) {
  return (cp >= 0x1F000 && cp <= 0x1FAFF) ||  // pictographs, emoticons, symbols, flags
         (cp >= 0x2600 && cp <= 0x27BF) ||    // misc symbols, dingbats
         (cp >= 0x2300 && cp <= 0x23FF) ||    // misc technical (watch, hourglass)
         (cp >= 0x2B00 && cp <= 0x2BFF) ||    // arrows, stars
         (cp >= 0xFE00 && cp <= 0xFE0F) ||    // variation selectors
         (cp >= 0xE0020 && cp <= 0xE007F) ||  // tag sequences
         cp == 0x200D || cp == 0x20E3 || cp == 0x00A9 || cp == 0x00AE || cp == 0x203C ||
         cp == 0x2049 || cp == 0x2122 || cp == 0x2139 || cp == 0x3030 || cp == 0x303D ||
         cp == 0x3297 || cp == 0x3299;
}

void EmojiLexicon::add(std::string emoji_utf8, std::string name) {
  if (emoji_utf8.empty()) throw InputError("emoji lexicon: empty sequence");
  for (char c : name) {
    if (!((c >= 'a' && c <= 'z') || c == ' ')) {
      throw InputError("emoji lexicon: name '" + name + "' must contain only lowercase letters and spaces");
    }
  }
  max_key_bytes_ = std::max(max_key_bytes_, emoji_utf8.size());
  entries_[std::move(emoji_utf8)] = collapse_spaces(name);
}

EmojiLexicon EmojiLexicon::parse(std::string_view content) {
  EmojiLexicon lex;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InputError("emoji lexicon line " + std::to_string(lineno) + ": expected two tab-separated columns");
    }
    lex.add(parse_sequence_column(trim(std::string_view(line).substr(0, tab))),
            trim(std::string_view(line).substr(tab + 1)));
  }
  return lex;
}

EmojiLexicon EmojiLexicon::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open emoji lexicon " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::size_t EmojiLexicon::match(std::string_view text, std::size_t pos, std::string_view* name) const {
  const std::size_t max_len = std::min(max_key_bytes_, text.size() - pos);
  for (std::size_t len = max_len; len > 0; --len) {
    auto it = entries_.find(text.substr(pos, len));
    if (it != entries_.end()) {
      if (name != nullptr) *name = it->second;
      return len;
    }
  }
  return 0;
}

std::set<std::string, std::less<>> load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vocabulary " + path.string());
  std::set<std::string, std::less<>> vocab;
  std::string line;
  while (std::getline(in, line)) {
    auto w = trim(line);
    if (w.empty()) continue;
    vocab.insert(to_lower(w));
  }
  return vocab;
}

std::string demojize(std::string_view text, const EmojiLexicon& lexicon) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::string_view name;
    if (const auto n = lexicon.match(text, pos, &name); n > 0) {
      out.push_back(' ');
      out.append(name);
      out.push_back(' ');
      pos += n;
      continue;
    }
    std::size_t len = 0;
    const char32_t cp = decode_utf8(text, pos, &len);
    if (is_emoji_codepoint(cp)) {
      out.push_back(' ');
    } else {
      out.append(text.substr(pos, len));
    }
    pos += len;
  }
  return collapse_spaces(out);
}

std::string strip_handles_and_hashtags(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    std::string_view tok = text.substr(start, i - start);
    if (tok.empty() || tok.front() == '@') continue;
    while (!tok.empty() && tok.front() == '#') tok.remove_prefix(1);
    if (tok.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(tok);
  }
  return out;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (c >= 'a' && c <= 'z') {
      cur.push_back(c);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

VocabularyFilter::VocabularyFilter(const std::set<std::string, std::less<>>& vocabulary, Stemmer stemmer) {
  for (const auto& w : vocabulary) {
    allowed_.insert(w);
    bool letters = !w.empty();
    for (char c : w) letters = letters && c >= 'a' && c <= 'z';
    if (letters) allowed_.insert(stem_to_fixpoint(w, stemmer));
  }
}

Preprocessor::Preprocessor(PreprocessConfig config)
    : config_(std::move(config)),
      filter_(config_.vocabulary, config_.stages.stem ? config_.stemmer : Stemmer::none) {
  if (config_.stages.vocabulary_filter && config_.vocabulary.empty()) {
    throw InputError("preprocess: vocabulary filter enabled with an empty vocabulary");
  }
}

CleanText Preprocessor::operator()(std::string_view raw) const {
  const auto& st = config_.stages;
  std::string text = st.lowercase ? to_lower(raw) : std::string(raw);
  if (st.demojize) text = demojize(text, config_.emoji_lexicon);
  if (st.strip_handles) text = strip_handles_and_hashtags(text);

  CleanText out;
  out.original = std::string(raw);
  for (auto& tok : tokenize(text)) {
    if (st.stem) tok = stem_to_fixpoint(tok, config_.stemmer);
    if (st.vocabulary_filter && !filter_.accepts(tok)) continue;
    out.tokens.push_back(std::move(tok));
  }
  return out;
}

CleanText preprocess(std::string_view raw, const PreprocessConfig& config) {
  return Preprocessor(config)(raw);
}

}  // namespace memesent::textprep
