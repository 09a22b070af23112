#pragma once

#include <map>
#include <string>
#include <vector>

namespace xvoice {

// A language identifier. NONE means "inject nothing" and never reaches an
// embedding lookup; UNKNOWN is the dedicated L^unk row of the table.
struct LanguageId {
  static constexpr int kNoneIndex = -1;
  static constexpr int kUnknownIndex = 0;

  std::string code;
  int index = kNoneIndex;

  static LanguageId none() { return {"<none>", kNoneIndex}; }
  static LanguageId unknown() { return {"<unk>", kUnknownIndex}; }

  bool is_none() const { return index == kNoneIndex; }
  bool is_unknown() const { return index == kUnknownIndex; }

  friend bool operator==(const LanguageId&, const LanguageId&) = default;
};

// Code <-> embedding-row mapping. Row 0 is reserved for UNKNOWN; regular
// languages follow in insertion order.
class LanguageTable {
 public:
  LanguageTable() = default;
  explicit LanguageTable(const std::vector<std::string>& codes);

  LanguageId add(const std::string& code);
  LanguageId lookup(const std::string& code) const;
  bool contains(const std::string& code) const { return index_.count(code) != 0; }
  LanguageId at(int index) const;

  // Number of embedding rows, UNKNOWN included.
  int size() const { return static_cast<int>(codes_.size()) + 1; }
  const std::vector<std::string>& codes() const { return codes_; }

 private:
  std::vector<std::string> codes_;
  std::map<std::string, int> index_;
};

}  // namespace xvoice
