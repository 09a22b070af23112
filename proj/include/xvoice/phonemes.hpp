#pragma once

// Unified phonetic tokens: articulatory units, suprasegmental modifiers
// (length, aspiration, tone digits) and stress markers are separate tokens
// sharing one vocabulary.

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace xvoice {

enum class TokenKind { articulatory, modifier, stress, punctuation, special };

std::string to_string(TokenKind kind);
TokenKind token_kind_from_string(const std::string& name);

struct PhoneticToken {
  std::string text;
  TokenKind kind = TokenKind::articulatory;

  friend auto operator<=>(const PhoneticToken&, const PhoneticToken&) = default;
};

// Kind implied by a unit's spelling: stress marks, modifiers (length mark,
// aspiration, tone digits), the word-boundary space, else articulatory.
TokenKind classify_unit(const std::string& unit);

// True if `unit` contains a modifier or stress character.
bool contains_modifier_char(const std::string& unit);

inline PhoneticToken word_boundary() { return {" ", TokenKind::punctuation}; }

// word (or multi-word phrase) -> unit list
struct Lexicon {
  std::map<std::string, std::vector<PhoneticToken>> entries;

  // Adds an entry, classifying units via classify_unit.
  void add(const std::string& word, const std::vector<std::string>& units);
  // Distinct units across all entries.
  std::vector<PhoneticToken> inventory() const;
};

// Throws if an articulatory unit carries a modifier character or a kind is
// inconsistent with the unit's spelling.
void validate(const Lexicon& lexicon);

// JSON: {"word": [{"unit": "p", "kind": "articulatory"}, ...], ...}
Lexicon read_lexicon(const std::filesystem::path& path);
void write_lexicon(const std::filesystem::path& path, const Lexicon& lexicon);
Lexicon lexicon_from_json_text(const std::string& text);
std::string lexicon_to_json_text(const Lexicon& lexicon);

// Greedy longest match of whitespace-separated words against the lexicon
// (entries may span several words); matched entries are joined by
// word-boundary tokens.
std::vector<PhoneticToken> tokenize(const Lexicon& lexicon, const std::string& text);

class Vocabulary {
 public:
  static constexpr int kPrompt = 0;     // <P>
  static constexpr int kFiller = 1;     // <F>
  static constexpr int kEosPeriod = 2;  // '.'
  static constexpr int kEosSpace = 3;   // ' '
  static constexpr int kNumReserved = 4;

  Vocabulary();
  // Reserved entries followed by `tokens` in the given order (duplicates skipped).
  explicit Vocabulary(const std::vector<PhoneticToken>& tokens);

  int add(const PhoneticToken& token);
  int id_of(const PhoneticToken& token) const;
  bool contains(const PhoneticToken& token) const { return ids_.count(token) != 0; }
  const PhoneticToken& token_at(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<PhoneticToken>& tokens() const { return tokens_; }
  static bool is_reserved(int id) { return id >= 0 && id < kNumReserved; }

 private:
  std::vector<PhoneticToken> tokens_;
  std::map<PhoneticToken, int> ids_;
};

// Sorted union of every lexicon inventory plus the word boundary.
Vocabulary build_vocabulary(const std::vector<const Lexicon*>& lexica);

std::vector<int> encode(const Vocabulary& vocab, const std::vector<PhoneticToken>& tokens);
std::vector<PhoneticToken> decode(const Vocabulary& vocab, const std::vector<int>& ids);

}  // namespace xvoice
