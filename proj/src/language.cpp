#include "xvoice/language.hpp"

#include <stdexcept>

namespace xvoice {

LanguageTable::LanguageTable(const std::vector<std::string>& codes) {
  for (const auto& c : codes) add(c);
}

LanguageId LanguageTable::add(const std::string& code) {
  if (code.empty() || code == LanguageId::none().code || code == LanguageId::unknown().code) {
    throw std::invalid_argument("reserved or empty language code '" + code + "'");
  }
  if (auto it = index_.find(code); it != index_.end()) return {code, it->second};
  codes_.push_back(code);
  const int idx = static_cast<int>(codes_.size());
  index_.emplace(code, idx);
  return {code, idx};
}

LanguageId LanguageTable::lookup(const std::string& code) const {
  if (code == LanguageId::unknown().code) return LanguageId::unknown();
  auto it = index_.find(code);
  if (it == index_.end()) throw std::invalid_argument("unknown language code '" + code + "'");
  return {code, it->second};
}

LanguageId LanguageTable::at(int index) const {
  if (index == LanguageId::kUnknownIndex) return LanguageId::unknown();
  if (index < 1 || index > static_cast<int>(codes_.size())) {
    throw std::out_of_range("language index " + std::to_string(index) + " out of range");
  }
  return {codes_[static_cast<std::size_t>(index - 1)], index};
}

}  // namespace xvoice
