#include "xvoice/phonemes.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "xvoice/errors.hpp"

namespace xvoice {

namespace {

constexpr const char* kStressMarks[] = {"ˈ", "ˌ"};
constexpr const char* kModifierMarks[] = {"ː", "ʰ"};

bool is_tone_digits(const std::string& unit) {
  if (unit.empty()) return false;
  for (char c : unit)
    if (c < '0' || c > '9') return false;
  return true;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream ss(text);
  std::string w;
  while (ss >> w) words.push_back(w);
  return words;
}

}  // namespace

std::string to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::articulatory: return "articulatory";
    case TokenKind::modifier: return "modifier";
    case TokenKind::stress: return "stress";
    case TokenKind::punctuation: return "punctuation";
    case TokenKind::special: return "special";
  }
  return "unknown";
}

TokenKind token_kind_from_string(const std::string& name) {
  if (name == "articulatory") return TokenKind::articulatory;
  if (name == "modifier") return TokenKind::modifier;
  if (name == "stress") return TokenKind::stress;
  if (name == "punctuation") return TokenKind::punctuation;
  if (name == "special") return TokenKind::special;
  throw FormatError("unknown token kind '" + name + "'");
}

TokenKind classify_unit(const std::string& unit) {
  for (const char* s : kStressMarks)
    if (unit == s) return TokenKind::stress;
  for (const char* m : kModifierMarks)
    if (unit == m) return TokenKind::modifier;
  if (is_tone_digits(unit)) return TokenKind::modifier;
  if (unit == " " || unit == "." || unit == "," || unit == "?" || unit == "!") return TokenKind::punctuation;
  return TokenKind::articulatory;
}

bool contains_modifier_char(const std::string& unit) {
  for (const char* s : kStressMarks)
    if (unit.find(s) != std::string::npos) return true;
  for (const char* m : kModifierMarks)
    if (unit.find(m) != std::string::npos) return true;
  for (char c : unit)
    if (c >= '0' && c <= '9') return true;
  return false;
}

void Lexicon::add(const std::string& word, const std::vector<std::string>& units) {
  std::vector<PhoneticToken> tokens;
  tokens.reserve(units.size());
  for (const auto& u : units) tokens.push_back({u, classify_unit(u)});
  entries[word] = std::move(tokens);
}

std::vector<PhoneticToken> Lexicon::inventory() const {
  std::set<PhoneticToken> seen;
  for (const auto& [word, units] : entries) seen.insert(units.begin(), units.end());
  return {seen.begin(), seen.end()};
}

void validate(const Lexicon& lexicon) {
  for (const auto& [word, units] : lexicon.entries) {
    if (word.empty()) throw FormatError("lexicon has an empty key");
    for (const auto& u : units) {
      if (u.text.empty()) throw FormatError("lexicon entry '" + word + "' has an empty unit");
      if (u.kind == TokenKind::special) throw FormatError("lexicon entry '" + word + "' uses a reserved token kind");
      if (u.kind == TokenKind::articulatory && contains_modifier_char(u.text)) {
        throw FormatError("articulatory unit '" + u.text + "' in '" + word + "' fuses a modifier");
      }
    }
  }
}

Lexicon lexicon_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("lexicon JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("lexicon JSON must be an object");
  Lexicon lex;
  for (const auto& [word, units] : j.items()) {
    std::vector<PhoneticToken> tokens;
    for (const auto& u : units) {
      if (u.is_string()) {
        tokens.push_back({u.get<std::string>(), classify_unit(u.get<std::string>())});
      } else {
        tokens.push_back({u.at("unit").get<std::string>(), token_kind_from_string(u.at("kind").get<std::string>())});
      }
    }
    lex.entries[word] = std::move(tokens);
  }
  validate(lex);
  return lex;
}

std::string lexicon_to_json_text(const Lexicon& lexicon) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [word, units] : lexicon.entries) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& u : units) arr.push_back({{"unit", u.text}, {"kind", to_string(u.kind)}});
    j[word] = std::move(arr);
  }
  return j.dump(2);
}

Lexicon read_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open lexicon " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return lexicon_from_json_text(ss.str());
}

void write_lexicon(const std::filesystem::path& path, const Lexicon& lexicon) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write lexicon " + path.string());
  out << lexicon_to_json_text(lexicon) << '\n';
}

std::vector<PhoneticToken> tokenize(const Lexicon& lexicon, const std::string& text) {
  const auto words = split_words(text);
  std::size_t longest = 1;
  for (const auto& [key, units] : lexicon.entries) longest = std::max(longest, split_words(key).size());

  std::vector<PhoneticToken> out;
  std::size_t i = 0;
  while (i < words.size()) {
    bool matched = false;
    for (std::size_t span = std::min(longest, words.size() - i); span >= 1 && !matched; --span) {
      std::string key = words[i];
      for (std::size_t k = 1; k < span; ++k) key += " " + words[i + k];
      auto it = lexicon.entries.find(key);
      if (it == lexicon.entries.end()) continue;
      if (!out.empty()) out.push_back(word_boundary());
      out.insert(out.end(), it->second.begin(), it->second.end());
      i += span;
      matched = true;
    }
    if (!matched) throw std::invalid_argument("word not in lexicon: '" + words[i] + "'");
  }
  return out;
}

Vocabulary::Vocabulary() {
  tokens_ = {{"<P>", TokenKind::special}, {"<F>", TokenKind::special}, {".", TokenKind::special},
             {" ", TokenKind::special}};
  for (int i = 0; i < kNumReserved; ++i) ids_.emplace(tokens_[static_cast<std::size_t>(i)], i);
}

Vocabulary::Vocabulary(const std::vector<PhoneticToken>& tokens) : Vocabulary() {
  for (const auto& t : tokens) add(t);
}

int Vocabulary::add(const PhoneticToken& token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  if (token.kind == TokenKind::special) throw std::invalid_argument("cannot add reserved token '" + token.text + "'");
  const int id = size();
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

int Vocabulary::id_of(const PhoneticToken& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) {
    throw std::invalid_argument("token '" + token.text + "' (" + to_string(token.kind) + ") not in vocabulary");
  }
  return it->second;
}

const PhoneticToken& Vocabulary::token_at(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

Vocabulary build_vocabulary(const std::vector<const Lexicon*>& lexica) {
  std::set<PhoneticToken> all{word_boundary()};
  for (const Lexicon* lex : lexica) {
    const auto inv = lex->inventory();
    all.insert(inv.begin(), inv.end());
  }
  return Vocabulary({all.begin(), all.end()});
}

std::vector<int> encode(const Vocabulary& vocab, const std::vector<PhoneticToken>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id_of(t));
  return ids;
}

std::vector<PhoneticToken> decode(const Vocabulary& vocab, const std::vector<int>& ids) {
  std::vector<PhoneticToken> tokens;
  tokens.reserve(ids.size());
  for (int id : ids) tokens.push_back(vocab.token_at(id));
  return tokens;
}

}  // namespace xvoice
