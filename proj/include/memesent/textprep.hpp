#pragma once

#include "memesent/types.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace memesent::textprep {

/// Emoji code-point sequence (UTF-8) -> space separated name words.
class EmojiLexicon {
 public:
  EmojiLexicon() = default;

  /// Adds an entry. `name` may contain only lowercase letters and spaces.
  void add(std::string emoji_utf8, std::string name);

  /// Loads a two-column UTF-8 file: `<sequence>\t<name words>`. The sequence
  /// is either the literal emoji or space separated `U+XXXX` code points.
  /// Blank lines and lines starting with '#' are skipped.
  static EmojiLexicon from_file(const std::filesystem::path& path);
  static EmojiLexicon parse(std::string_view content);

  /// Longest entry matching at `pos`; returns matched byte length or 0.
  std::size_t match(std::string_view text, std::size_t pos, std::string_view* name) const;

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::size_t max_key_bytes_ = 0;
};

enum class Stemmer { porter, none };

struct StageToggles {
  bool lowercase = true;
  bool demojize = true;
  bool strip_handles = true;
  bool stem = true;
  bool vocabulary_filter = true;
};

struct PreprocessConfig {
  EmojiLexicon emoji_lexicon;
  std::set<std::string, std::less<>> vocabulary;
  Stemmer stemmer = Stemmer::porter;
  StageToggles stages;
};

/// Builds the lookup set used by the vocabulary filter: every word plus its
/// stem under `stemmer`.
class VocabularyFilter {
 public:
  VocabularyFilter(const std::set<std::string, std::less<>>& vocabulary, Stemmer stemmer);
  bool accepts(std::string_view token) const { return allowed_.contains(token); }

 private:
  std::set<std::string, std::less<>> allowed_;
};

struct CleanText {
  std::vector<std::string> tokens;
  std::string original;
};

std::set<std::string, std::less<>> load_vocabulary(const std::filesystem::path& path);

/// True when the code point belongs to an emoji or emoji-modifier block.
bool is_emoji_codepoint(char32_t cp);

/// Replaces lexicon emoji by their names and deletes unknown emoji; runs of
/// whitespace collapse to one space and the result is trimmed.
std::string demojize(std::string_view text, const EmojiLexicon& lexicon);

/// Drops whitespace-separated tokens starting with '@' and strips the leading
/// '#' run from tokens that start with '#'. Output tokens are joined by a
/// single space.
std::string strip_handles_and_hashtags(std::string_view text);

/// ASCII lowercase; other bytes pass through.
std::string to_lower(std::string_view text);

/// Splits on every byte outside [a-z].
std::vector<std::string> tokenize(std::string_view text);

/// Porter (1980) stemmer. Throws InputError unless `token` matches [a-z]+.
std::string porter_stem(std::string_view token);
std::string stem(std::string_view token, Stemmer stemmer);

/// Applies the stemmer until the token stops changing.
std::string stem_to_fixpoint(std::string_view token, Stemmer stemmer);

class Preprocessor {
 public:
  explicit Preprocessor(PreprocessConfig config);

  /// lowercase -> demojize -> strip handles/hashtags -> tokenize -> stem ->
  /// vocabulary filter.
  CleanText operator()(std::string_view raw) const;

  const PreprocessConfig& config() const { return config_; }

 private:
  PreprocessConfig config_;
  VocabularyFilter filter_;
};

CleanText preprocess(std::string_view raw, const PreprocessConfig& config);

}  // namespace memesent::textprep
